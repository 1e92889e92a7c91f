#include "gmrs/cccp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gmrs/rate_region.hpp"
#include "gmrs/rng.hpp"

namespace gmrs {

namespace {
constexpr double kSinrBoundFloor = 1e-12;
}

double weighted_sum_rate(const LayerStructure& layers, const Eigen::VectorXd& weights,
                         const Eigen::VectorXd& sub_rates) {
  double v = 0;
  for (int j = 0; j < layers.num_subs(); ++j)
    v += weights[layers.sub_index[j].group] * sub_rates[j];
  return v;
}

SolutionState initialize(const LayerStructure& layers, const ChannelState& ch,
                         const SystemParams& params, std::uint64_t seed, int variant) {
  params.validate();
  const int M = ch.num_antennas, N = ch.num_subcarriers, L = layers.num_layers();
  const SubproblemLayout lay = make_layout(layers, M, N, params);
  SolutionState s;
  s.beams.params = params;
  s.beams.w.assign(N, Eigen::MatrixXcd::Zero(M, L));
  const double per_beam = 0.9 * params.power_budget / (static_cast<double>(N) * L);
  for (int n = 0; n < N; ++n) {
    for (int l = 0; l < L; ++l) {
      Eigen::VectorXcd dir = Eigen::VectorXcd::Zero(M);
      for (int k : layers.layers[l].members()) {
        double gamma = 1.0;
        if (variant > 0)
          gamma = 0.25 + uniform_at(seed, static_cast<std::uint32_t>(variant),
                                    static_cast<std::uint32_t>(l), static_cast<std::uint32_t>(k));
        dir += gamma * ch.col(k, n);
      }
      const double norm = dir.norm();
      if (norm > 1e-30) s.beams.w[n].col(l) = dir * (std::sqrt(per_beam) / norm);
    }
  }
  s.sub_rates = Eigen::VectorXd::Zero(lay.num_subs);
  s.rate_shares = Eigen::VectorXd::Zero(N * lay.aux);
  s.sinr_bounds = Eigen::VectorXd::Ones(N * lay.aux);
  s.objective = 0;
  return s;
}

namespace {

void snap_activity(SolutionState& s, double bandwidth) {
  for (int i = 0; i < s.sinr_bounds.size(); ++i)
    s.sinr_bounds[i] = std::max(std::exp2(s.rate_shares[i] / bandwidth), kSinrBoundFloor);
}

struct ChainOutput {
  SolutionState state;
  SolveTrace trace;
  Subproblem last_subproblem;
  SolverSolution last_solution;
  bool has_solution = false;
  bool succeeded = false;
};

ChainOutput run_chain(const LayerStructure& layers, const ChannelState& ch,
                      const Eigen::VectorXd& weights, const SystemParams& params,
                      const CccpConfig& config, SolutionState start, int restart) {
  ChainOutput out;
  out.trace.restart = restart;
  out.trace.seed = config.seed;
  SolutionState s = std::move(start);
  s.objective = weighted_sum_rate(layers, weights, s.sub_rates);
  out.trace.termination = "iteration_limit";
  // Far from the fixed point the outer step, not the inner certificate,
  // limits progress, so early subproblems are solved to a loose gap; once
  // steps shrink (or the chain is about to stop) every solve is tight.
  const double loose_tol = std::max(config.subproblem_tol, 1e-3);
  bool tight = !(loose_tol > config.subproblem_tol);
  Eigen::VectorXd anchor;
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    Subproblem sp = build_subproblem(layers, ch, weights, params, s);
    const Eigen::VectorXd x_warm = sp.layout.pack(s);
    // The previous solve's opening-stage center is a far better start than
    // any fresh embedding: its fat slacks survive the relinearization, so
    // the new solve opens nearly centered instead of marching to the
    // analytic center from scratch.
    Eigen::VectorXd x0;
    if (anchor.size() == sp.program.dim && strictly_feasible(sp.program, anchor)) {
      x0 = anchor;
    } else if (!interior_start(sp, x_warm, x0)) {
      out.trace.termination = out.trace.iterations.empty() ? "start_failure" : "start_stalled";
      break;
    }
    const bool tight_solve = tight;
    SolverOptions opts;
    opts.tol_gap = tight_solve ? config.subproblem_tol : loose_tol;
    SolverStatus status;
    SolverSolution sol;
    try {
      sol = solve_barrier(sp.program, x0, opts, status);
    } catch (const std::exception&) {
      out.trace.termination = "solver_failure";
      break;
    }
    if (sol.center_t > 0) anchor = sol.center_x;

    SolutionState cand = sp.layout.unpack(sol.x);
    cand.beams.params = params;
    snap_activity(cand, params.bandwidth);
    const double cand_obj = weighted_sum_rate(layers, weights, cand.sub_rates);

    IterationRecord rec;
    rec.iteration = iter;
    rec.newton_iters = status.newton_iters;
    rec.subproblem_gap = status.gap_relative;
    rec.solver_converged = status.converged;
    double step = 0;
    if (cand_obj >= s.objective) {
      step = (sp.layout.pack(cand) - x_warm).norm() / std::max(1.0, x_warm.norm());
      s = std::move(cand);
      s.objective = cand_obj;
    } else {
      // Monotone safeguard: the subproblem stopped short of the warm point's
      // value, so keep the previous iterate.
      rec.kept_previous = true;
    }
    // Keep the last solver outcome that earned a tight certificate; audits
    // of the chain stationarity should bind to neither a truncated nor a
    // loose solve.
    if (status.converged && tight_solve) {
      out.last_subproblem = std::move(sp);
      out.last_solution = std::move(sol);
      out.has_solution = true;
    }
    s.iterations = iter;
    rec.objective = s.objective;
    rec.step_norm = step;
    out.trace.iterations.push_back(rec);
    if (step > config.epsilon && step <= 3e-2) tight = true;
    if (step <= config.epsilon) {
      if (!tight_solve) {
        // The chain is about to stop on a loose solve; redo this expansion
        // point tight so the terminal state carries a full certificate.
        tight = true;
        continue;
      }
      if (status.converged) {
        out.trace.termination = "step_tolerance";
        break;
      }
      if (rec.kept_previous) {
        // The subproblem came back uncertified and below the incumbent:
        // repeating it from the same expansion point cannot do better.
        out.trace.termination = "subproblem_stall";
        break;
      }
      // Uncertified but improving: let the next relinearization move.
    }
  }
  // Hand back the iterate with rates re-optimized at its beams.  A barrier
  // iterate meets the coupling rows only to rounding at solver scale, which
  // can leave rates a hair outside the region; candidates must be compared,
  // embedded, and audited on exactly feasible values.
  if (!out.trace.iterations.empty()) {
    try {
      const RateAllocation best = max_rates_given_beams(s.beams, ch, layers, weights);
      SolutionState lifted = lift_to_state(layers, ch, params, s.beams, best.sub_rates);
      lifted.iterations = s.iterations;
      lifted.objective = weighted_sum_rate(layers, weights, lifted.sub_rates);
      s = std::move(lifted);
    } catch (const std::exception&) {
      // Keep the raw iterate; the audit then reports what repair could not fix.
    }
  }
  out.state = std::move(s);
  out.succeeded = !out.trace.iterations.empty();
  return out;
}

// Give every numerically dead beam a matched direction at negligible power so
// the expanded subproblem has an interior (a layer with exactly zero power
// pins its decoding rows to the boundary), then re-optimize the content rates
// at those beams so the start is exactly feasible again.
SolutionState open_support(const LayerStructure& layers, const ChannelState& ch,
                           const Eigen::VectorXd& weights, const SystemParams& params,
                           const SolutionState& warm) {
  const int N = ch.num_subcarriers, L = layers.num_layers();
  const double delta2 = 1e-12 * params.power_budget / (static_cast<double>(N) * L);
  SolutionState s = warm;
  bool touched = false;
  for (int n = 0; n < N; ++n)
    for (int l = 0; l < L; ++l) {
      if (s.beams.w[n].col(l).squaredNorm() >= delta2) continue;
      Eigen::VectorXcd dir = Eigen::VectorXcd::Zero(ch.num_antennas);
      for (int k : layers.layers[l].members()) dir += ch.col(k, n);
      const double norm = dir.norm();
      if (norm <= 1e-30) continue;
      s.beams.w[n].col(l) = dir * (std::sqrt(delta2) / norm);
      touched = true;
    }
  if (!touched) return s;
  try {
    const RateAllocation best = max_rates_given_beams(s.beams, ch, layers, weights);
    return lift_to_state(layers, ch, params, s.beams, best.sub_rates);
  } catch (const std::exception&) {
    return warm;  // raw start; the chain may fail to start but the floor holds
  }
}

}  // namespace

CccpResult cccp_solve(const LayerStructure& layers, const ChannelState& ch,
                      const Eigen::VectorXd& weights, const SystemParams& params,
                      const CccpConfig& config) {
  if (weights.size() != static_cast<int>(layers.groups.size()))
    throw std::invalid_argument("cccp_solve: weight vector mismatch");
  if (config.restarts < 1) throw std::invalid_argument("cccp_solve: need at least one restart");
  CccpResult result;
  bool have_best = false;
  bool winner_has_pair = false;
  auto consider = [&](ChainOutput chain) {
    result.all_traces.push_back(chain.trace);
    result.any_chain_succeeded = result.any_chain_succeeded || chain.succeeded;
    const bool wins = !have_best || chain.state.objective > result.state.objective;
    if (wins) {
      have_best = true;
      result.state = std::move(chain.state);
      result.trace = std::move(chain.trace);
    }
    if (chain.has_solution) {
      // Keep the winner's final subproblem certificate; any chain's serves as
      // a fallback when the winner solved none (e.g. the warm floor won).
      if (wins || !winner_has_pair) {
        result.last_subproblem = std::move(chain.last_subproblem);
        result.last_solution = std::move(chain.last_solution);
        winner_has_pair = wins;
      }
    } else if (wins) {
      winner_has_pair = false;
    }
  };
  // The warm chain (trace label -1) runs in addition to the cold restarts,
  // so a warm start never costs search breadth.  The warm state itself is a
  // zero-iteration candidate, making it an exact objective floor even when
  // the chain cannot leave it.
  if (config.warm_start) {
    ChainOutput floor;
    floor.state = *config.warm_start;
    floor.state.objective = weighted_sum_rate(layers, weights, floor.state.sub_rates);
    floor.trace.restart = -1;
    floor.trace.seed = config.seed;
    floor.trace.termination = "warm_floor";
    consider(std::move(floor));
    consider(run_chain(layers, ch, weights, params, config,
                       open_support(layers, ch, weights, params, *config.warm_start), -1));
  }
  for (int r = 0; r < config.restarts; ++r)
    consider(
        run_chain(layers, ch, weights, params, config, initialize(layers, ch, params, config.seed, r), r));
  return result;
}


KktReport verify_kkt(const CccpResult& result, const LayerStructure& layers,
                     const ChannelState& ch, const Eigen::VectorXd& weights, double feas_tol) {
  KktReport rep;
  const RateAllocation rates = assemble_rates(layers, result.state.sub_rates.cwiseMax(0.0));
  const FeasibilityReport feas =
      check_feasibility(result.state.beams, rates, ch, layers, feas_tol);
  rep.feasible = feas.feasible;
  rep.power_slack = feas.power_slack;
  rep.min_rate_slack = feas.min_rate_slack;

  const double B = result.state.beams.params.bandwidth;
  rep.max_activity_gap = 0;
  for (int i = 0; i < result.state.sinr_bounds.size(); ++i) {
    const double u = result.state.sinr_bounds[i];
    const double q = std::exp2(result.state.rate_shares[i] / B);
    rep.max_activity_gap = std::max(rep.max_activity_gap, std::abs(u - q) / std::max(1.0, u));
  }

  if (!result.any_chain_succeeded || result.last_subproblem.program.dim == 0) {
    rep.stationarity = std::numeric_limits<double>::infinity();
    return rep;
  }
  // First-order audit of the final convex subproblem at its own returned
  // solution, where the primal-dual pair is self-consistent: an independent
  // stationarity re-evaluation plus the worst multiplier-times-slack product
  // relative to the objective.  Convergence of the outer procedure itself is
  // read off the trace (step norms) and the activity gap above.
  const ConvexProgram& p = result.last_subproblem.program;
  const SolverSolution& sol = result.last_solution;
  const Eigen::VectorXd& x = sol.x;
  rep.stationarity = stationarity_residual(p, sol);
  const double obj_scale = 1.0 + std::abs(p.c.dot(x));
  rep.complementarity = 0;
  auto slack_product = [&](double lam, double f) {
    rep.complementarity = std::max(rep.complementarity, std::abs(lam * f) / obj_scale);
  };
  for (std::size_t i = 0; i < p.quads.size(); ++i)
    slack_product(sol.quad_mult[static_cast<int>(i)], eval_quad(p.quads[i], x));
  for (std::size_t i = 0; i < p.exps.size(); ++i)
    slack_product(sol.exp_mult[static_cast<int>(i)], eval_exp(p.exps[i], x));
  if (p.ball)
    slack_product(sol.ball_mult,
                  x.segment(p.ball->offset, p.ball->length).squaredNorm() - p.ball->radius_sq);
  for (std::size_t i = 0; i < p.bounds.size(); ++i)
    slack_product(sol.bound_mult[static_cast<int>(i)],
                  x[p.bounds[i].index] - p.bounds[i].lower);
  (void)weights;
  return rep;
}

}  // namespace gmrs
