#include "gmrs/linprog.hpp"

#include <cmath>
#include <vector>

namespace gmrs {

namespace {

constexpr double kPivotTol = 1e-9;

// Full-tableau simplex over maximized objective `obj` (sized to all columns).
// Returns false on unboundedness.  `allow` masks columns permitted to enter.
bool run_simplex(Eigen::MatrixXd& T, std::vector<int>& basis, const std::vector<bool>& active_row,
                 const Eigen::VectorXd& obj, const std::vector<bool>& allow, int max_iters,
                 bool& hit_limit) {
  const int m = static_cast<int>(basis.size());
  const int cols = static_cast<int>(T.cols()) - 1;
  const int rhs = cols;
  const double cost_tol = kPivotTol * std::max(1.0, obj.cwiseAbs().maxCoeff());
  bool bland = false;
  hit_limit = false;
  for (int iter = 0; iter < max_iters; ++iter) {
    if (iter > 40 * (m + cols)) bland = true;  // stalling: switch to Bland's rule
    // Reduced costs r_j = obj_j - sum_i obj_basis(i) T(i, j).
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) y[i] = obj[basis[i]];
    int enter = -1;
    double best = cost_tol;
    for (int j = 0; j < cols; ++j) {
      if (!allow[j]) continue;
      double r = obj[j];
      for (int i = 0; i < m; ++i)
        if (active_row[i]) r -= y[i] * T(i, j);
      if (r > best) {
        enter = j;
        if (bland) break;
        best = r;
      } else if (bland && r > cost_tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;  // optimal
    // Ratio test.
    int leave = -1;
    double best_ratio = 0;
    for (int i = 0; i < m; ++i) {
      if (!active_row[i] || T(i, enter) <= kPivotTol) continue;
      const double ratio = T(i, rhs) / T(i, enter);
      if (leave < 0 || ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && basis[i] < basis[leave])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave < 0) return false;  // unbounded direction
    // Pivot.
    T.row(leave) /= T(leave, enter);
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = T(i, enter);
      if (f != 0.0) T.row(i) -= f * T.row(leave);
    }
    basis[leave] = enter;
  }
  hit_limit = true;
  return true;
}

}  // namespace

LpResult simplex_maximize(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                          const Eigen::VectorXd& c) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  LpResult res;
  if (b.size() != m || c.size() != n) {
    res.message = "dimension mismatch";
    return res;
  }

  int num_art = 0;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0) ++num_art;
  const int cols = n + m + num_art;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, cols + 1);
  T.block(0, 0, m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.col(cols) = b;
  std::vector<int> basis(m);
  std::vector<bool> active_row(m, true);
  {
    int ai = 0;
    for (int i = 0; i < m; ++i) {
      if (b[i] < 0) {
        T.row(i) = -T.row(i);
        T(i, n + m + ai) = 1.0;
        basis[i] = n + m + ai;
        ++ai;
      } else {
        basis[i] = n + i;
      }
    }
  }

  const int max_iters = 200 * (m + cols) + 2000;
  bool hit_limit = false;

  if (num_art > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
    phase1.tail(num_art).setConstant(-1.0);
    std::vector<bool> allow(cols, true);
    if (!run_simplex(T, basis, active_row, phase1, allow, max_iters, hit_limit) || hit_limit) {
      res.message = hit_limit ? "iteration limit in phase 1" : "phase 1 unbounded (internal error)";
      return res;
    }
    double art_level = 0;
    for (int i = 0; i < m; ++i)
      if (basis[i] >= n + m) art_level += T(i, cols);
    if (art_level > 1e-7 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
      res.message = "infeasible";
      return res;
    }
    // Pivot remaining zero-level artificials out of the basis; a row with no
    // eligible pivot is linearly dependent and is dropped.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n + m) continue;
      int j = 0;
      for (; j < n + m; ++j)
        if (std::abs(T(i, j)) > kPivotTol) break;
      if (j == n + m) {
        active_row[i] = false;
        continue;
      }
      T.row(i) /= T(i, j);
      for (int r = 0; r < m; ++r)
        if (r != i && T(r, j) != 0.0) T.row(r) -= T(r, j) * T.row(i);
      basis[i] = j;
    }
  }

  Eigen::VectorXd obj = Eigen::VectorXd::Zero(cols);
  obj.head(n) = c;
  std::vector<bool> allow(cols, true);
  for (int j = n + m; j < cols; ++j) allow[j] = false;
  if (!run_simplex(T, basis, active_row, obj, allow, max_iters, hit_limit)) {
    res.message = "unbounded";
    return res;
  }
  if (hit_limit) {
    res.message = "iteration limit";
    return res;
  }

  res.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (active_row[i] && basis[i] < n) res.x[basis[i]] = T(i, cols);
  res.objective = c.dot(res.x);
  res.optimal = true;
  res.message = "optimal";
  return res;
}

}  // namespace gmrs
