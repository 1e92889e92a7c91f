#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gmrs/barrier_solver.hpp"
#include "gmrs/subproblem.hpp"

namespace gmrs {

struct CccpConfig {
  double epsilon = 1e-4;        // iterate-change threshold, relative to the iterate norm
  int max_iterations = 100;
  int restarts = 3;
  double subproblem_tol = 1e-5; // relative duality-gap target per subproblem
  std::uint64_t seed = 0;
  std::optional<SolutionState> warm_start;  // adds one extra chain starting here
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0;       // weighted sum rate after the step
  double step_norm = 0;       // relative change of the packed iterate
  int newton_iters = 0;
  double subproblem_gap = 0;  // relative duality gap reported by the solver
  bool solver_converged = false;
  bool kept_previous = false; // monotone safeguard retained the previous iterate
};

struct SolveTrace {
  int restart = 0;           // -1 marks the warm-start chain
  std::uint64_t seed = 0;
  std::vector<IterationRecord> iterations;
  // step_tolerance | iteration_limit | start_failure | start_stalled |
  // solver_failure | warm_floor (the zero-iteration warm-start candidate)
  std::string termination;
};

struct CccpResult {
  SolutionState state;                  // best iterate over restarts
  SolveTrace trace;                     // trace of the winning restart
  std::vector<SolveTrace> all_traces;
  // Final subproblem of the winning chain and its solver output, kept for
  // optimality verification.
  Subproblem last_subproblem;
  SolverSolution last_solution;
  bool any_chain_succeeded = false;
};

// Feasible cold start: per-layer matched-filter mixture beams spending 90% of
// the budget (equally across layers and subcarriers), zero rates and shares,
// unit sinr_bounds.  `variant` > 0 perturbs the mixture coefficients
// deterministically to give restarts distinct starting points.
SolutionState initialize(const LayerStructure& layers, const ChannelState& ch,
                         const SystemParams& params, std::uint64_t seed, int variant = 0);

// Concave-convex procedure for the weighted-sum-rate problem: repeatedly
// linearize, solve the convex subproblem, and keep the better of the new
// point and the previous one.  Runs `restarts` cold chains (plus one from
// `warm_start` when set) and returns the best.
CccpResult cccp_solve(const LayerStructure& layers, const ChannelState& ch,
                      const Eigen::VectorXd& weights, const SystemParams& params,
                      const CccpConfig& config);

struct KktReport {
  bool feasible = false;            // physical-layer feasibility of (beams, rates)
  double power_slack = 0;
  double min_rate_slack = 0;
  double max_activity_gap = 0;      // max relative gap of 2^(e/B) vs u
  double stationarity = 0;          // scaled first-order residual of the smoothed problem
  double complementarity = 0;       // max |lambda_i * f_i| over stated inequalities
  bool pass(double tol) const {
    return feasible && max_activity_gap <= tol && stationarity <= tol;
  }
};

// First-order optimality audit of a finished solve: re-checks feasibility
// with the region evaluator, the share/bound activity identity, and
// stationarity against the final subproblem's multipliers using exact
// constraint gradients (not the solver's internal state).
KktReport verify_kkt(const CccpResult& result, const LayerStructure& layers,
                     const ChannelState& ch, const Eigen::VectorXd& weights, double feas_tol);

// Weighted sum rate of a state under the audience weights.
double weighted_sum_rate(const LayerStructure& layers, const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& sub_rates);

}  // namespace gmrs
