#pragma once

#include <Eigen/Dense>
#include <string>

namespace gmrs {

struct LpResult {
  bool optimal = false;
  Eigen::VectorXd x;
  double objective = 0;
  std::string message;
};

// Dense two-phase primal simplex for  max c'x  s.t.  A x <= b, x >= 0.
// Bland's rule is used once stalling is detected, so the method terminates on
// degenerate polyhedra.  Intended for the small rate-allocation programs that
// arise here (tens of rows/columns).
LpResult simplex_maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c);

}  // namespace gmrs
