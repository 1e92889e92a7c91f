#pragma once

#include <Eigen/Dense>
#include <string>

#include "gmrs/convex_program.hpp"

namespace gmrs {

struct SolverOptions {
  double tol_gap = 1e-8;       // target duality gap relative to 1 + |objective|
  double tol_feas = 1e-8;      // target equality residual relative to row scale
  double mu = 3.1622776601683795;  // barrier parameter growth per stage
  int max_newton = 500;        // total Newton iteration budget
  double t0_hint = 0;          // > 0: initial barrier parameter (warm-started chains)
  double newton_tol = 1e-7;    // per-stage threshold on half the squared decrement
  int max_backtracks = 60;
};

struct SolverSolution {
  Eigen::VectorXd x;
  double objective = 0;
  // Multipliers of the original inequalities (lambda_i = 1/(t s_i)) and the
  // equality rows, in the constraint order of the program.
  Eigen::VectorXd quad_mult, exp_mult, bound_mult, eq_mult;
  double ball_mult = 0;
  // Centered iterate of the opening stage (zero size when that stage never
  // centered).  Its slacks are fat, so unlike deeper path points it stays
  // strictly feasible and near-centered under a small change of the
  // program, making it a strong start for a neighbouring solve.
  Eigen::VectorXd center_x;
  double center_t = 0;
};

struct SolverStatus {
  bool converged = false;
  int newton_iters = 0;
  double gap = 0;              // m / t at exit (absolute)
  double gap_relative = 0;     // gap / (1 + |objective|)
  double eq_residual = 0;      // max |Ax - b|
  double t_final = 0;
  std::string message;
};

// Feasible-start barrier method.  `x0` must satisfy every inequality
// strictly; the equality rows may carry a small residual, which Newton
// steps contract.  Throws std::invalid_argument when x0 is not strictly
// feasible for the inequalities.
SolverSolution solve_barrier(const ConvexProgram& p, const Eigen::VectorXd& x0,
                             const SolverOptions& opts, SolverStatus& status);

// True when x satisfies every inequality of `p` strictly.  Equality rows
// are not checked: solve_barrier projects small equality residuals away.
bool strictly_feasible(const ConvexProgram& p, const Eigen::VectorXd& x);

// Independent first-order optimality check: residual of
//   c - sum_i lambda_i grad f_i - A' nu + bound multipliers
// evaluated from the program data alone.  Each component is scaled by the
// largest single term entering it, so the result reads as a relative error.
double stationarity_residual(const ConvexProgram& p, const SolverSolution& sol);

}  // namespace gmrs
