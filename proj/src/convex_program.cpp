#include "gmrs/convex_program.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

namespace gmrs {

using json = nlohmann::json;

double eval_quad(const ConvexProgram::QuadRow& q, const Eigen::VectorXd& x) {
  double f = q.constant;
  for (const auto& t : q.linear) f += t.coeff * x[t.index];
  for (const auto& fac : q.factors) {
    const double d = fac.v.dot(x.segment(fac.offset, fac.v.size()));
    f += fac.coeff * d * d;
  }
  return f;
}

double eval_exp(const ConvexProgram::ExpRow& r, const Eigen::VectorXd& x) {
  return std::exp2(x[r.e_index] / r.scale) - x[r.u_index];
}

void add_quad_gradient(const ConvexProgram::QuadRow& q, const Eigen::VectorXd& x, double weight,
                       Eigen::VectorXd& grad) {
  for (const auto& t : q.linear) grad[t.index] += weight * t.coeff;
  for (const auto& fac : q.factors) {
    const double d = fac.v.dot(x.segment(fac.offset, fac.v.size()));
    grad.segment(fac.offset, fac.v.size()) += (weight * 2.0 * fac.coeff * d) * fac.v;
  }
}

void add_exp_gradient(const ConvexProgram::ExpRow& r, const Eigen::VectorXd& x, double weight,
                      Eigen::VectorXd& grad) {
  const double g = std::exp2(x[r.e_index] / r.scale) * std::numbers::ln2 / r.scale;
  grad[r.e_index] += weight * g;
  grad[r.u_index] -= weight;
}

double max_violation(const ConvexProgram& p, const Eigen::VectorXd& x) {
  double v = 0;
  if (p.num_eq() > 0) v = (p.A * x - p.b).cwiseAbs().maxCoeff();
  for (const auto& q : p.quads) v = std::max(v, eval_quad(q, x));
  for (const auto& r : p.exps) v = std::max(v, eval_exp(r, x));
  if (p.ball) {
    const double used = x.segment(p.ball->offset, p.ball->length).squaredNorm();
    v = std::max(v, used - p.ball->radius_sq);
  }
  for (const auto& bd : p.bounds) v = std::max(v, bd.lower - x[bd.index]);
  return v;
}

std::string ConvexProgram::to_json() const {
  json j;
  j["dim"] = dim;
  j["objective"] = std::vector<double>(c.data(), c.data() + c.size());
  // Sparse equality rows as triplets.
  json trips = json::array();
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      trips.push_back(json::array({it.row(), it.col(), it.value()}));
  j["equality"] = {{"rows", num_eq()},
                   {"triplets", std::move(trips)},
                   {"rhs", std::vector<double>(b.data(), b.data() + b.size())}};
  json jq = json::array();
  for (const auto& q : quads) {
    json row;
    row["constant"] = q.constant;
    json lin = json::array();
    for (const auto& t : q.linear) lin.push_back(json::array({t.index, t.coeff}));
    row["linear"] = std::move(lin);
    json facs = json::array();
    for (const auto& f : q.factors)
      facs.push_back({{"offset", f.offset},
                      {"coeff", f.coeff},
                      {"v", std::vector<double>(f.v.data(), f.v.data() + f.v.size())}});
    row["factors"] = std::move(facs);
    jq.push_back(std::move(row));
  }
  j["quad_rows"] = std::move(jq);
  json je = json::array();
  for (const auto& r : exps)
    je.push_back({{"e_index", r.e_index}, {"u_index", r.u_index}, {"scale", r.scale}});
  j["exp_rows"] = std::move(je);
  if (ball)
    j["ball"] = {{"offset", ball->offset}, {"length", ball->length}, {"radius_sq", ball->radius_sq}};
  json jb = json::array();
  for (const auto& bd : bounds) jb.push_back(json::array({bd.index, bd.lower}));
  j["bounds"] = std::move(jb);
  if (!group_of.empty()) j["group_of"] = group_of;
  return j.dump();
}

}  // namespace gmrs
