#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>
#include <string>
#include <vector>

namespace gmrs {

// A convex program over real variables x in R^dim:
//
//   maximize    c' x
//   subject to  A x = b
//               sum_t coeff_t (v_t' x)^2 + a' x + k <= 0      (quad rows)
//               2^(x_e / scale) - x_u <= 0                    (exp rows, scale > 0)
//               ||x[off .. off+len)||^2 <= radius_sq          (ball)
//               x_i >= lower_i                                (bounds)
//
// Quad rows with nonnegative coefficients are convex; the builder only emits
// such rows.  `group_of` optionally tags each variable with a block id such
// that every quad/exp row touches one block only; the ball and the equality
// rows may couple blocks.  Solvers use the tags to factor Newton systems
// blockwise and fall back to a single dense block when tags are absent.
struct ConvexProgram {
  struct QuadFactor {
    Eigen::VectorXd v;      // dense within [offset, offset+v.size())
    int offset = 0;
    double coeff = 1.0;     // must be >= 0 for convexity
  };
  struct LinearTerm {
    int index = 0;
    double coeff = 0;
  };
  struct QuadRow {
    std::vector<QuadFactor> factors;
    std::vector<LinearTerm> linear;
    double constant = 0;
  };
  struct ExpRow {
    int e_index = 0;     // exponent variable
    int u_index = 0;     // dominating variable
    double scale = 1.0;  // constraint is 2^(x_e / scale) <= x_u
  };
  struct Ball {
    int offset = 0;
    int length = 0;
    double radius_sq = 1.0;
  };
  struct Bound {
    int index = 0;
    double lower = 0;
  };

  int dim = 0;
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> A;   // equality rows
  Eigen::VectorXd b;
  std::vector<QuadRow> quads;
  std::vector<ExpRow> exps;
  std::optional<Ball> ball;
  std::vector<Bound> bounds;
  std::vector<int> group_of;       // optional block tag per variable

  int num_eq() const { return static_cast<int>(A.rows()); }
  // Inequality count in the problem statement's sense: ball + quad + exp
  // rows (variable bounds not counted).
  int stated_inequality_count() const {
    return (ball ? 1 : 0) + static_cast<int>(quads.size()) + static_cast<int>(exps.size());
  }
  int stated_constraint_count() const { return stated_inequality_count() + num_eq(); }

  // Self-describing JSON dump for cross-solver regression.
  std::string to_json() const;
};

double eval_quad(const ConvexProgram::QuadRow& q, const Eigen::VectorXd& x);
double eval_exp(const ConvexProgram::ExpRow& r, const Eigen::VectorXd& x);

// Gradient contributions (dense, full length).
void add_quad_gradient(const ConvexProgram::QuadRow& q, const Eigen::VectorXd& x, double weight,
                       Eigen::VectorXd& grad);
void add_exp_gradient(const ConvexProgram::ExpRow& r, const Eigen::VectorXd& x, double weight,
                      Eigen::VectorXd& grad);

// Largest violation over all constraint classes (0 when feasible).
double max_violation(const ConvexProgram& p, const Eigen::VectorXd& x);

}  // namespace gmrs
