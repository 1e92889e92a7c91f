#include "gmrs/barrier_solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gmrs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Variable blocks inferred from the program's group tags.  Quad and exp rows
// must each live inside a single block; otherwise everything collapses into
// one block and the Newton systems are dense.
struct BlockMap {
  int num_groups = 1;
  std::vector<int> group_of;              // per variable
  std::vector<int> local_of;              // per variable: index within its block
  std::vector<std::vector<int>> vars;     // per block: global indices
};

BlockMap analyze_blocks(const ConvexProgram& p) {
  BlockMap bm;
  bm.group_of = p.group_of;
  if (static_cast<int>(bm.group_of.size()) != p.dim) bm.group_of.assign(p.dim, 0);
  auto rebuild = [&]() {
    bm.num_groups = 0;
    for (int g : bm.group_of) bm.num_groups = std::max(bm.num_groups, g + 1);
    bm.vars.assign(bm.num_groups, {});
    bm.local_of.assign(p.dim, 0);
    for (int i = 0; i < p.dim; ++i) {
      bm.local_of[i] = static_cast<int>(bm.vars[bm.group_of[i]].size());
      bm.vars[bm.group_of[i]].push_back(i);
    }
  };
  rebuild();
  auto row_ok = [&](const ConvexProgram::QuadRow& q) {
    int g = -1;
    auto touch = [&](int idx) {
      if (g < 0) g = bm.group_of[idx];
      return bm.group_of[idx] == g;
    };
    for (const auto& f : q.factors)
      for (int i = 0; i < f.v.size(); ++i)
        if (!touch(f.offset + i)) return false;
    for (const auto& t : q.linear)
      if (!touch(t.index)) return false;
    return true;
  };
  bool ok = true;
  for (const auto& q : p.quads)
    if (!row_ok(q)) {
      ok = false;
      break;
    }
  if (ok)
    for (const auto& r : p.exps)
      if (bm.group_of[r.e_index] != bm.group_of[r.u_index]) {
        ok = false;
        break;
      }
  if (!ok) {
    bm.group_of.assign(p.dim, 0);
    rebuild();
  }
  return bm;
}

// Per-quad-row bookkeeping localized to its block.
struct QuadLocal {
  int group = 0;
  std::vector<int> sup_global;            // support, global indices
  std::vector<int> sup_local;             // same, block-local
  std::vector<std::pair<int, double>> lin_pos;   // (position in support, coeff)
  struct Fac {
    const Eigen::VectorXd* v;
    int offset_global;
    std::vector<int> pos;                 // positions in support per component
    int local_off;                        // block-local start (components contiguous)
    double coeff;
  };
  std::vector<Fac> facs;
};

std::vector<QuadLocal> localize_quads(const ConvexProgram& p, const BlockMap& bm) {
  std::vector<QuadLocal> out;
  out.reserve(p.quads.size());
  for (const auto& q : p.quads) {
    QuadLocal ql;
    std::vector<int> sup;
    for (const auto& f : q.factors)
      for (int i = 0; i < f.v.size(); ++i) sup.push_back(f.offset + i);
    for (const auto& t : q.linear) sup.push_back(t.index);
    std::sort(sup.begin(), sup.end());
    sup.erase(std::unique(sup.begin(), sup.end()), sup.end());
    ql.sup_global = sup;
    ql.group = sup.empty() ? 0 : bm.group_of[sup.front()];
    ql.sup_local.reserve(sup.size());
    for (int idx : sup) ql.sup_local.push_back(bm.local_of[idx]);
    auto pos_of = [&](int idx) {
      return static_cast<int>(std::lower_bound(sup.begin(), sup.end(), idx) - sup.begin());
    };
    for (const auto& t : q.linear) ql.lin_pos.push_back({pos_of(t.index), t.coeff});
    for (const auto& f : q.factors) {
      QuadLocal::Fac fac;
      fac.v = &f.v;
      fac.offset_global = f.offset;
      fac.coeff = f.coeff;
      fac.local_off = bm.local_of[f.offset];
      fac.pos.reserve(f.v.size());
      for (int i = 0; i < f.v.size(); ++i) fac.pos.push_back(pos_of(f.offset + i));
      ql.facs.push_back(std::move(fac));
    }
    out.push_back(std::move(ql));
  }
  return out;
}

struct Slacks {
  Eigen::VectorXd quad, exp_, bound;
  double ball = kInf;
  double min_slack = kInf;
};

bool eval_slacks(const ConvexProgram& p, const Eigen::VectorXd& x, Slacks& s) {
  s.quad.resize(static_cast<int>(p.quads.size()));
  for (std::size_t i = 0; i < p.quads.size(); ++i) s.quad[i] = -eval_quad(p.quads[i], x);
  s.exp_.resize(static_cast<int>(p.exps.size()));
  for (std::size_t i = 0; i < p.exps.size(); ++i) s.exp_[i] = -eval_exp(p.exps[i], x);
  s.bound.resize(static_cast<int>(p.bounds.size()));
  for (std::size_t i = 0; i < p.bounds.size(); ++i)
    s.bound[i] = x[p.bounds[i].index] - p.bounds[i].lower;
  s.ball = kInf;
  if (p.ball)
    s.ball = p.ball->radius_sq - x.segment(p.ball->offset, p.ball->length).squaredNorm();
  s.min_slack = s.ball;
  if (s.quad.size() > 0) s.min_slack = std::min(s.min_slack, s.quad.minCoeff());
  if (s.exp_.size() > 0) s.min_slack = std::min(s.min_slack, s.exp_.minCoeff());
  if (s.bound.size() > 0) s.min_slack = std::min(s.min_slack, s.bound.minCoeff());
  return s.min_slack > 0;
}

// Fraction-to-boundary rule: reject steps that collapse any slack to less
// than 5% of its current value, so conditioning degrades gradually and the
// iterate cannot crash onto a constraint within one step.
bool shrink_ok(const Slacks& cur, const Slacks& trial) {
  constexpr double kKeep = 0.05;
  for (int i = 0; i < cur.quad.size(); ++i)
    if (trial.quad[i] < kKeep * cur.quad[i]) return false;
  for (int i = 0; i < cur.exp_.size(); ++i)
    if (trial.exp_[i] < kKeep * cur.exp_[i]) return false;
  for (int i = 0; i < cur.bound.size(); ++i)
    if (trial.bound[i] < kKeep * cur.bound[i]) return false;
  if (std::isfinite(cur.ball) && trial.ball < kKeep * cur.ball) return false;
  return true;
}

double barrier_value(const Slacks& s, const ConvexProgram& p) {
  double phi = 0;
  for (int i = 0; i < s.quad.size(); ++i) phi -= std::log(s.quad[i]);
  for (int i = 0; i < s.exp_.size(); ++i) phi -= std::log(s.exp_[i]);
  for (int i = 0; i < s.bound.size(); ++i) phi -= std::log(s.bound[i]);
  if (p.ball) phi -= std::log(s.ball);
  return phi;
}

// Factorized block-diagonal part of the Hessian plus the ball's rank-one
// coupling, solved by Woodbury.
struct HessianSolver {
  const BlockMap* bm = nullptr;
  std::vector<Eigen::MatrixXd> H;         // unscaled blocks
  std::vector<Eigen::VectorXd> scale;     // equilibration D per block
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt;
  bool has_rank1 = false;
  double rho = 0;
  Eigen::VectorXd v;                      // full-dimension rank-one direction
  Eigen::VectorXd Binv_v;
  double denom = 1;

  Eigen::VectorXd solve_blocks(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(y.size());
    for (int g = 0; g < bm->num_groups; ++g) {
      const auto& idx = bm->vars[g];
      if (idx.empty()) continue;
      Eigen::VectorXd yl(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yl[i] = y[idx[i]] * scale[g][i];
      Eigen::VectorXd zl = llt[g].solve(yl);
      for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = zl[i] * scale[g][i];
    }
    return out;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& y) const {
    Eigen::VectorXd z = solve_blocks(y);
    if (has_rank1) z -= Binv_v * (v.dot(z) / denom);
    return z;
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& y) const {
    Eigen::VectorXd out(y.size());
    for (int g = 0; g < bm->num_groups; ++g) {
      const auto& idx = bm->vars[g];
      if (idx.empty()) continue;
      Eigen::VectorXd yl(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yl[i] = y[idx[i]];
      Eigen::VectorXd zl = H[g] * yl;
      for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = zl[i];
    }
    if (has_rank1) out += (rho * v.dot(y)) * v;
    return out;
  }
};

}  // namespace

SolverSolution solve_barrier(const ConvexProgram& p, const Eigen::VectorXd& x0,
                             const SolverOptions& opts, SolverStatus& status) {
  if (x0.size() != p.dim) throw std::invalid_argument("solve_barrier: x0 dimension mismatch");
  status = SolverStatus{};
  const BlockMap bm = analyze_blocks(p);
  const auto qlocal = localize_quads(p, bm);
  const int m_eq = p.num_eq();
  const int m_count = p.stated_inequality_count() + static_cast<int>(p.bounds.size());

  Eigen::VectorXd x = x0;
  Slacks slacks;
  if (!eval_slacks(p, x, slacks))
    throw std::invalid_argument("solve_barrier: start point is not strictly feasible (min slack " +
                                std::to_string(slacks.min_slack) + ")");

  // Exact equality start: project onto Ax = b when the residual is visible.
  // The same factorization later re-projects every accepted step, so the
  // rounding that leaks through each inexact Newton solve cannot accumulate.
  Eigen::SparseMatrix<double> AT;
  Eigen::LDLT<Eigen::MatrixXd> aat;
  if (m_eq > 0) {
    AT = p.A.transpose();
    aat.compute((p.A * AT).toDense());
    const Eigen::VectorXd r = p.A * x - p.b;
    const double rscale = 1.0 + p.b.cwiseAbs().maxCoeff();
    if (r.cwiseAbs().maxCoeff() > 1e-12 * rscale) {
      Eigen::VectorXd dx = AT * aat.solve(r);
      Eigen::VectorXd cand = x - dx;
      Slacks s2;
      if (!eval_slacks(p, cand, s2))
        throw std::invalid_argument(
            "solve_barrier: start point violates the equality rows and cannot be projected "
            "without losing strict feasibility");
      x = cand;
      slacks = s2;
    }
  }

  double t = opts.t0_hint > 0 ? opts.t0_hint
                              : m_count / (0.1 * (1.0 + std::abs(p.c.dot(x))));
  t = std::max(t, 1e-3);

  SolverSolution sol;
  Eigen::VectorXd nu_t = Eigen::VectorXd::Zero(m_eq);
  int newton_used = 0;
  int consecutive_stalls = 0;
  bool out_of_budget = false;

  const double ln2 = std::numbers::ln2;
  HessianSolver hs;
  hs.bm = &bm;
  hs.H.resize(bm.num_groups);
  hs.scale.resize(bm.num_groups);
  hs.llt.resize(bm.num_groups);

  const bool dbg = std::getenv("GMRS_BARRIER_DEBUG") != nullptr;
  if (dbg)
    std::fprintf(stderr, "[barrier] dim=%d m=%d eq=%d t0=%.3e obj0=%.6e\n", p.dim, m_count, m_eq,
                 t, p.c.dot(x));
  // Last iterate that finished its centering with a small decrement.  When a
  // later stage cannot center any more (the Newton systems run out of double
  // precision), the solver falls back to this point: it is the largest barrier
  // weight whose gap certificate m/t is actually trustworthy.
  struct {
    Eigen::VectorXd x, nu;
    Slacks slacks;
    double t = 0;
    bool valid = false;
  } certified;
  int stage_index = 0;
  while (true) {
    // Center at the current barrier parameter.
    int stage_start = newton_used;
    double last_lsq = kInf, dbg_alpha = -1.0;
    int dbg_infeas = 0, dbg_armijo = 0, dbg_projskip = 0, dbg_shrink = 0;
    int tiny_steps = 0;
    // The line search compares psi_t = -t c'x + Phi through differences only:
    // measuring c'x relative to the stage entry keeps those differences well
    // above rounding even when t |c'x| is enormous.
    const Eigen::VectorXd x_ref = x;
    Eigen::VectorXd xdiff = Eigen::VectorXd::Zero(p.dim);
    for (int it = 0;; ++it) {
      if (newton_used >= opts.max_newton) {
        out_of_budget = true;
        break;
      }
      // The opening stage walks from the start point to the analytic center,
      // a long damped march on a hard instance; later stages only re-center
      // after one barrier-weight step and deserve a much shorter leash.
      if (it >= (stage_index == 0 ? 250 : 100)) break;
      // Gradient and block Hessians of psi_t = -t c'x + Phi.
      Eigen::VectorXd g = -t * p.c;
      for (int gi = 0; gi < bm.num_groups; ++gi) {
        hs.H[gi].setZero(static_cast<int>(bm.vars[gi].size()),
                         static_cast<int>(bm.vars[gi].size()));
      }
      for (std::size_t qi = 0; qi < p.quads.size(); ++qi) {
        const auto& q = p.quads[qi];
        const auto& ql = qlocal[qi];
        const double s = slacks.quad[static_cast<int>(qi)];
        const double inv_s = 1.0 / s;
        Eigen::MatrixXd& Hg = hs.H[ql.group];
        // Local gradient over the support.
        Eigen::VectorXd gs = Eigen::VectorXd::Zero(static_cast<int>(ql.sup_global.size()));
        for (const auto& [pos, coeff] : ql.lin_pos) gs[pos] += coeff;
        for (const auto& fac : ql.facs) {
          const double d = fac.v->dot(x.segment(fac.offset_global, fac.v->size()));
          const double w = 2.0 * fac.coeff * d;
          for (int i = 0; i < fac.v->size(); ++i) gs[fac.pos[i]] += w * (*fac.v)[i];
          // (2 coeff / s) v v' block term.
          const int len = static_cast<int>(fac.v->size());
          Hg.block(fac.local_off, fac.local_off, len, len).noalias() +=
              (2.0 * fac.coeff * inv_s) * (*fac.v) * fac.v->transpose();
        }
        for (std::size_t i = 0; i < ql.sup_global.size(); ++i)
          g[ql.sup_global[i]] += inv_s * gs[static_cast<int>(i)];
        // (1/s^2) grad grad' over the support.
        const double w2 = inv_s * inv_s;
        for (std::size_t i = 0; i < ql.sup_local.size(); ++i) {
          const double gi_val = gs[static_cast<int>(i)];
          if (gi_val == 0.0) continue;
          for (std::size_t j = 0; j < ql.sup_local.size(); ++j)
            Hg(ql.sup_local[i], ql.sup_local[j]) += w2 * gi_val * gs[static_cast<int>(j)];
        }
      }
      for (std::size_t ei = 0; ei < p.exps.size(); ++ei) {
        const auto& r = p.exps[ei];
        const double s = slacks.exp_[static_cast<int>(ei)];
        const double q = std::exp2(x[r.e_index] / r.scale);
        const double qp = q * ln2 / r.scale;          // d/de 2^(e/scale)
        const double qpp = qp * ln2 / r.scale;
        const double inv_s = 1.0 / s;
        g[r.e_index] += inv_s * qp;
        g[r.u_index] -= inv_s;
        const int ge = bm.group_of[r.e_index];
        const int le = bm.local_of[r.e_index], lu = bm.local_of[r.u_index];
        Eigen::MatrixXd& Hg = hs.H[ge];
        const double w2 = inv_s * inv_s;
        Hg(le, le) += w2 * qp * qp + inv_s * qpp;
        Hg(lu, lu) += w2;
        Hg(le, lu) -= w2 * qp;
        Hg(lu, le) -= w2 * qp;
      }
      for (std::size_t bi = 0; bi < p.bounds.size(); ++bi) {
        const auto& bd = p.bounds[bi];
        const double s = slacks.bound[static_cast<int>(bi)];
        g[bd.index] -= 1.0 / s;
        hs.H[bm.group_of[bd.index]](bm.local_of[bd.index], bm.local_of[bd.index]) +=
            1.0 / (s * s);
      }
      hs.has_rank1 = false;
      if (p.ball) {
        const double s = slacks.ball;
        const auto seg = x.segment(p.ball->offset, p.ball->length);
        for (int i = 0; i < p.ball->length; ++i) {
          const int idx = p.ball->offset + i;
          g[idx] += 2.0 * seg[i] / s;
          hs.H[bm.group_of[idx]](bm.local_of[idx], bm.local_of[idx]) += 2.0 / s;
        }
        hs.has_rank1 = true;
        hs.rho = 4.0 / (s * s);
        hs.v = Eigen::VectorXd::Zero(p.dim);
        hs.v.segment(p.ball->offset, p.ball->length) = seg;
      }

      // Equilibrate each block to unit diagonal, then regularize relative to
      // that diagonal so flat coordinates keep their own scale.
      for (int gi = 0; gi < bm.num_groups; ++gi) {
        Eigen::MatrixXd& Hg = hs.H[gi];
        const int ng = static_cast<int>(Hg.rows());
        if (ng == 0) continue;
        const Eigen::VectorXd d =
            Hg.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
        const Eigen::MatrixXd Hs = d.asDiagonal() * Hg * d.asDiagonal();
        double delta = 1e-12;
        for (int attempt = 0;; ++attempt) {
          Eigen::MatrixXd Hreg = Hs;
          Hreg.diagonal().array() += delta;
          hs.llt[gi].compute(Hreg);
          if (hs.llt[gi].info() == Eigen::Success) {
            hs.scale[gi] = d;
            break;
          }
          if (attempt >= 6) throw std::runtime_error("solve_barrier: Hessian factorization failed");
          delta *= 1e3;
        }
      }
      if (hs.has_rank1) {
        hs.Binv_v = hs.solve_blocks(hs.v);
        hs.denom = 1.0 / hs.rho + hs.v.dot(hs.Binv_v);
      }

      // Newton step via the equality Schur complement, with one pass of
      // iterative refinement so the step and decrement stay trustworthy when
      // active constraints make the Hessian badly conditioned.
      Eigen::MatrixXd Z, S;
      Eigen::LLT<Eigen::MatrixXd> sllt;
      Eigen::LDLT<Eigen::MatrixXd> sldlt;
      bool use_llt = false;
      Eigen::VectorXd r_p;
      if (m_eq > 0) {
        Z.resize(p.dim, m_eq);
        Eigen::VectorXd col = Eigen::VectorXd::Zero(p.dim);
        for (int j = 0; j < m_eq; ++j) {
          col.setZero();
          for (Eigen::SparseMatrix<double>::InnerIterator it(AT, j); it; ++it)
            col[static_cast<int>(it.row())] = it.value();
          Z.col(j) = hs.solve(col);
        }
        S = p.A * Z;
        sllt.compute(S);
        use_llt = sllt.info() == Eigen::Success;
        if (!use_llt) sldlt.compute(S);
        r_p = p.A * x - p.b;
      }
      // Returns (d, nu) with H d + A' nu = -rg and A d = -rp.
      auto kkt_solve = [&](const Eigen::VectorXd& rg, const Eigen::VectorXd& rp) {
        if (m_eq == 0) return std::make_pair(Eigen::VectorXd(-hs.solve(rg)), Eigen::VectorXd());
        const Eigen::VectorXd Hig = hs.solve(rg);
        const Eigen::VectorXd rhs = rp - p.A * Hig;
        Eigen::VectorXd nu = use_llt ? sllt.solve(rhs).eval() : sldlt.solve(rhs).eval();
        Eigen::VectorXd d = -(Hig + Z * nu);
        return std::make_pair(std::move(d), std::move(nu));
      };
      Eigen::VectorXd dx;
      if (stage_index == 0 && it == 0 && opts.t0_hint <= 0) {
        // The Hessian of psi_t does not depend on t, so one factorization
        // probes every barrier weight at once: the decrement lambda^2(t) is a
        // quadratic in t.  Start at the largest weight that keeps this point
        // inside Newton's quadratic zone instead of letting a poorly scaled
        // first weight race the iterate onto the boundary.
        const Eigen::VectorXd gphi = g + t * p.c;
        auto [dphi, nphi] = kkt_solve(gphi, r_p);
        auto [dmc, nmc] = kkt_solve(-p.c, Eigen::VectorXd::Zero(m_eq));
        const Eigen::VectorXd Hphi = hs.multiply(dphi), Hmc = hs.multiply(dmc);
        const double a0 = dphi.dot(Hphi), a1 = 2.0 * dphi.dot(Hmc), a2 = dmc.dot(Hmc);
        const double eta2 = 0.25;
        double tsel = 1e-3;
        if (a2 > 0) {
          const double disc = a1 * a1 - 4.0 * a2 * (a0 - eta2);
          if (disc >= 0) {
            tsel = std::max(tsel, (-a1 + std::sqrt(disc)) / (2.0 * a2));
          } else if (a1 < 0) {
            // No weight makes this start near-centered; begin where the
            // decrement is smallest so the opening march is shortest.
            tsel = std::max(tsel, -a1 / (2.0 * a2));
          }
        } else if (a0 <= eta2) {
          tsel = 1e8;
        }
        t = std::min(tsel, 1e8);
        g = -t * p.c + gphi;
        dx = dphi + t * dmc;
        if (m_eq > 0) nu_t = nphi + t * nmc;
        if (dbg)
          std::fprintf(stderr, "[barrier] t0 probe a0=%.3e a1=%.3e a2=%.3e -> t=%.3e\n", a0, a1,
                       a2, t);
      } else {
        auto [d0, n0] = kkt_solve(g, r_p);
        dx = std::move(d0);
        if (m_eq > 0) nu_t = std::move(n0);
      }
      {
        Eigen::VectorXd res1 = g + hs.multiply(dx);
        if (m_eq > 0) res1 += AT * nu_t;
        const Eigen::VectorXd res2 = m_eq > 0 ? (p.A * dx + r_p).eval() : Eigen::VectorXd();
        auto [d1, n1] = kkt_solve(res1, res2);
        dx += d1;
        if (m_eq > 0) nu_t += n1;
      }

      const double lambda_sq = dx.dot(hs.multiply(dx));
      ++newton_used;
      last_lsq = lambda_sq;
      if (dbg && std::getenv("GMRS_BARRIER_DEBUG")[0] == '2' && it % 10 == 0) {
        const Eigen::VectorXd contrib = dx.cwiseProduct(hs.multiply(dx));
        std::vector<int> idx(p.dim);
        for (int i = 0; i < p.dim; ++i) idx[i] = i;
        std::partial_sort(idx.begin(), idx.begin() + 6, idx.end(),
                          [&](int a, int b) { return contrib[a] > contrib[b]; });
        std::fprintf(stderr, "[nt] it=%d lsq=%.3e top:", it, lambda_sq);
        for (int j = 0; j < 6; ++j)
          std::fprintf(stderr, " (%d:%.2e,x=%.2e,dx=%.2e)", idx[j], contrib[idx[j]], x[idx[j]],
                       dx[idx[j]]);
        std::fprintf(stderr, "\n");
        std::vector<std::pair<double, std::string>> sl;
        for (int i = 0; i < slacks.quad.size(); ++i)
          sl.push_back({slacks.quad[i], "quad" + std::to_string(i)});
        for (int i = 0; i < slacks.exp_.size(); ++i)
          sl.push_back({slacks.exp_[i], "exp" + std::to_string(i)});
        for (int i = 0; i < slacks.bound.size(); ++i)
          sl.push_back({slacks.bound[i], "bnd" + std::to_string(i)});
        if (p.ball) sl.push_back({slacks.ball, "ball"});
        std::sort(sl.begin(), sl.end());
        std::fprintf(stderr, "[sl] it=%d min:", it);
        for (int j = 0; j < 6 && j < static_cast<int>(sl.size()); ++j)
          std::fprintf(stderr, " %s=%.2e", sl[j].second.c_str(), sl[j].first);
        std::fprintf(stderr, "\n");
      }
      if (0.5 * lambda_sq <= opts.newton_tol) break;

      // Backtracking line search on psi_t, restricted to the strict interior.
      const double gtd = g.dot(dx);
      const double psi0 = -t * p.c.dot(xdiff) + barrier_value(slacks, p);
      double alpha = 1.0;
      double psi_acc = psi0;
      bool accepted = false;
      Slacks strial;
      for (int btr = 0; btr < opts.max_backtracks; ++btr) {
        Eigen::VectorXd xt = x + alpha * dx;
        if (!eval_slacks(p, xt, strial)) {
          ++dbg_infeas;
        } else if (!shrink_ok(slacks, strial)) {
          ++dbg_shrink;
        } else {
          const Eigen::VectorXd dt = xdiff + alpha * dx;
          const double psi = -t * p.c.dot(dt) + barrier_value(strial, p);
          if (psi <= psi0 + 0.05 * alpha * std::min(gtd, 0.0)) {
            x = std::move(xt);
            xdiff = dt;
            slacks = strial;
            psi_acc = psi;
            accepted = true;
            break;
          }
          ++dbg_armijo;
        }
        alpha *= 0.5;
      }
      dbg_alpha = accepted ? alpha : 0.0;
      if (!accepted) {
        ++consecutive_stalls;
        break;
      }
      consecutive_stalls = 0;
      if (m_eq > 0) {
        const Eigen::VectorXd rp = p.A * x - p.b;
        if (rp.cwiseAbs().maxCoeff() > 0.0) {
          const Eigen::VectorXd corr = AT * aat.solve(rp);
          Eigen::VectorXd xp = x - corr;
          Slacks sp2;
          if (eval_slacks(p, xp, sp2)) {
            x = std::move(xp);
            xdiff -= corr;
            slacks = sp2;
          } else {
            ++dbg_projskip;
          }
        }
      }
      // Once accepted steps stop moving psi by more than rounding noise, the
      // decrement is numerical debris and the stage is as centered as double
      // precision allows.
      if (psi0 - psi_acc <= 1e-13 * (1.0 + std::abs(psi0))) {
        if (++tiny_steps >= 2) break;
      } else {
        tiny_steps = 0;
      }
    }

    // A stage counts as centered when its final decrement is small; the gap
    // certificate m/t is only honest near the central path.
    const bool centered = last_lsq <= 1e-2;
    bool restored = false;
    if (centered && stage_index == 0) {
      sol.center_x = x;
      sol.center_t = t;
    }
    if (centered) {
      certified.x = x;
      certified.nu = nu_t;
      certified.slacks = slacks;
      certified.t = t;
      certified.valid = true;
    } else if (certified.valid) {
      x = certified.x;
      nu_t = certified.nu;
      slacks = certified.slacks;
      t = certified.t;
      restored = true;
    }
    const double obj = p.c.dot(x);
    status.gap = m_count / t;
    status.gap_relative = status.gap / (1.0 + std::abs(obj));
    if (dbg)
      std::fprintf(stderr,
                   "[barrier] t=%.3e iters=%d lsq=%.3e alpha=%.3e infeas_bt=%d armijo_bt=%d "
                   "shrink_bt=%d projskip=%d eqr=%.3e gap_rel=%.3e obj=%.6e centered=%d "
                   "restored=%d budget=%d\n",
                   t, newton_used - stage_start, last_lsq, dbg_alpha, dbg_infeas, dbg_armijo,
                   dbg_shrink, dbg_projskip, m_eq > 0 ? (p.A * x - p.b).cwiseAbs().maxCoeff() : 0.0,
                   status.gap_relative, obj, centered ? 1 : 0, restored ? 1 : 0, newton_used);
    if ((centered || restored) && status.gap_relative <= opts.tol_gap) {
      status.converged = true;
      status.message = "converged";
      break;
    }
    if (out_of_budget) {
      status.message = "newton budget exhausted";
      break;
    }
    if (!centered) {
      status.message = restored ? "centering collapsed" : "centering failed";
      break;
    }
    if (consecutive_stalls >= 2) {
      status.message = "line search stalled";
      break;
    }
    t = std::min(t * opts.mu, 1e18);
    ++stage_index;
  }

  if (dbg)
    std::fprintf(stderr, "[barrier] done conv=%d msg='%s' newton=%d t=%.3e\n",
                 status.converged ? 1 : 0, status.message.c_str(), newton_used, t);
  status.newton_iters = newton_used;
  status.t_final = t;
  status.eq_residual = 0.0;
  if (m_eq > 0) {
    const Eigen::VectorXd r = p.A * x - p.b;
    status.eq_residual = r.cwiseAbs().maxCoeff();
    if (status.converged) {
      // Judge each row against its own mass: rows summing 1e6-scale terms are
      // entitled to proportional rounding.
      Eigen::VectorXd row_mass = p.b.cwiseAbs();
      for (int k = 0; k < p.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it)
          row_mass[static_cast<int>(it.row())] += std::abs(it.value() * x[static_cast<int>(it.col())]);
      for (int i = 0; i < m_eq; ++i) {
        if (std::abs(r[i]) > opts.tol_feas * (1.0 + row_mass[i])) {
          status.converged = false;
          status.message = "equality residual above tolerance";
          if (dbg)
            std::fprintf(stderr, "[barrier] eq revoke row=%d r=%.3e mass=%.3e scaled=%.3e\n", i,
                         r[i], row_mass[i], std::abs(r[i]) / (1.0 + row_mass[i]));
          break;
        }
      }
    }
  }

  sol.x = x;
  sol.objective = p.c.dot(x);
  sol.quad_mult.resize(slacks.quad.size());
  for (int i = 0; i < slacks.quad.size(); ++i) sol.quad_mult[i] = 1.0 / (t * slacks.quad[i]);
  sol.exp_mult.resize(slacks.exp_.size());
  for (int i = 0; i < slacks.exp_.size(); ++i) sol.exp_mult[i] = 1.0 / (t * slacks.exp_[i]);
  sol.bound_mult.resize(slacks.bound.size());
  for (int i = 0; i < slacks.bound.size(); ++i) sol.bound_mult[i] = 1.0 / (t * slacks.bound[i]);
  sol.ball_mult = p.ball ? 1.0 / (t * slacks.ball) : 0.0;
  sol.eq_mult = nu_t / t;
  return sol;
}

double stationarity_residual(const ConvexProgram& p, const SolverSolution& sol) {
  // Each residual component is scaled by the largest single term entering it,
  // so a badly scaled row cannot hide (or fake) optimality elsewhere.
  Eigen::VectorXd r = p.c;
  Eigen::VectorXd mass = p.c.cwiseAbs();
  Eigen::VectorXd term = Eigen::VectorXd::Zero(p.dim);
  auto take = [&]() {
    r -= term;
    mass += term.cwiseAbs();
  };
  for (std::size_t i = 0; i < p.quads.size(); ++i) {
    term.setZero();
    add_quad_gradient(p.quads[i], sol.x, sol.quad_mult[static_cast<int>(i)], term);
    take();
  }
  for (std::size_t i = 0; i < p.exps.size(); ++i) {
    term.setZero();
    add_exp_gradient(p.exps[i], sol.x, sol.exp_mult[static_cast<int>(i)], term);
    take();
  }
  if (p.ball) {
    const auto seg = sol.x.segment(p.ball->offset, p.ball->length);
    r.segment(p.ball->offset, p.ball->length) -= sol.ball_mult * 2.0 * seg;
    mass.segment(p.ball->offset, p.ball->length) += (sol.ball_mult * 2.0 * seg).cwiseAbs();
  }
  for (std::size_t i = 0; i < p.bounds.size(); ++i) {
    r[p.bounds[i].index] += sol.bound_mult[static_cast<int>(i)];
    mass[p.bounds[i].index] += std::abs(sol.bound_mult[static_cast<int>(i)]);
  }
  if (p.num_eq() > 0) {
    r -= p.A.transpose() * sol.eq_mult;
    const Eigen::SparseMatrix<double> a_abs = p.A.cwiseAbs();
    mass += a_abs.transpose() * sol.eq_mult.cwiseAbs();
  }
  double worst = 0;
  for (int i = 0; i < r.size(); ++i)
    worst = std::max(worst, std::abs(r[i]) / std::max(1.0, mass[i]));
  return worst;
}

bool strictly_feasible(const ConvexProgram& p, const Eigen::VectorXd& x) {
  Slacks s;
  return eval_slacks(p, x, s);
}

}  // namespace gmrs
