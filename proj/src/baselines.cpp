#include "gmrs/baselines.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gmrs/rate_region.hpp"

namespace gmrs {

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::PropRS: return "PropRS";
    case Scheme::OneLayerRS: return "OneLayerRS";
    case Scheme::NoRS: return "NoRS";
    case Scheme::Ofdma: return "OFDMA";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "PropRS") return Scheme::PropRS;
  if (name == "OneLayerRS") return Scheme::OneLayerRS;
  if (name == "NoRS") return Scheme::NoRS;
  if (name == "OFDMA" || name == "Ofdma") return Scheme::Ofdma;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

SplitScheme split_of(Scheme s) {
  switch (s) {
    case Scheme::PropRS: return SplitScheme::Full;
    case Scheme::OneLayerRS: return SplitScheme::OneLayer;
    default: return SplitScheme::NoSplit;
  }
}

SolutionState embed_solution(const LayerStructure& from, const LayerStructure& to,
                             const ChannelState& ch, const SystemParams& params,
                             const SolutionState& state) {
  const int N = ch.num_subcarriers, M = ch.num_antennas;
  BeamformerSet beams;
  beams.params = params;
  beams.w.assign(N, Eigen::MatrixXcd::Zero(M, to.num_layers()));
  for (int lf = 0; lf < from.num_layers(); ++lf) {
    const int lt = to.layer_index(from.layers[lf]);
    if (lt < 0)
      throw std::invalid_argument("embed_solution: layer " + from.layers[lf].to_string() +
                                  " absent from the target structure");
    for (int n = 0; n < N; ++n) beams.w[n].col(lt) = state.beams.w.at(n).col(lf);
  }
  Eigen::VectorXd sub = Eigen::VectorXd::Zero(to.num_subs());
  for (int j = 0; j < from.num_subs(); ++j) {
    const UserSet g = from.groups[from.sub_index[j].group];
    const UserSet lay = from.layers[from.sub_index[j].layer];
    int target = -1;
    for (int jt = 0; jt < to.num_subs(); ++jt)
      if (to.groups[to.sub_index[jt].group] == g && to.layers[to.sub_index[jt].layer] == lay) {
        target = jt;
        break;
      }
    if (target < 0)
      throw std::invalid_argument("embed_solution: pair (" + g.to_string() + ", " +
                                  lay.to_string() + ") absent from the target structure");
    sub[target] = std::max(state.sub_rates[j], 0.0);
  }
  return lift_to_state(to, ch, params, beams, sub);
}

SchemeRun run_scheme(Scheme scheme, const MessagePartition& partition, const ChannelState& ch,
                     const SystemParams& params, const Eigen::VectorXd& weights,
                     const CccpConfig& config, const SolutionState* warm,
                     const LayerStructure* warm_layers) {
  if (scheme == Scheme::Ofdma) return ofdma_solve(partition, ch, params, weights);
  const auto start_time = std::chrono::steady_clock::now();
  SchemeRun run;
  run.scheme = scheme;
  run.layers = build_layers(partition, split_of(scheme));
  CccpConfig cfg = config;
  if (warm != nullptr) {
    if (warm_layers == nullptr)
      throw std::invalid_argument("run_scheme: warm state needs its layer structure");
    cfg.warm_start = embed_solution(*warm_layers, run.layers, ch, params, *warm);
  }
  CccpResult res = cccp_solve(run.layers, ch, weights, params, cfg);
  run.state = res.state;
  run.objective = res.state.objective;
  run.rates = assemble_rates(run.layers, res.state.sub_rates.cwiseMax(0.0));
  run.traces = res.all_traces;
  run.audit = verify_kkt(res, run.layers, ch, weights, 1e-6);
  run.feasible = run.audit.feasible;
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return run;
}

SchemeRun ofdma_solve(const MessagePartition& partition, const ChannelState& ch,
                      const SystemParams& params, const Eigen::VectorXd& weights) {
  params.validate();
  const auto start_time = std::chrono::steady_clock::now();
  SchemeRun run;
  run.scheme = Scheme::Ofdma;
  run.layers = build_layers(partition, SplitScheme::NoSplit);
  const int N = ch.num_subcarriers, M = ch.num_antennas;
  const int G = static_cast<int>(partition.groups.size());
  if (weights.size() != G) throw std::invalid_argument("ofdma_solve: weight vector mismatch");
  const double sigma2 = params.noise_power, B = params.bandwidth, P = params.power_budget;

  // Matched beam and worst-member gain per (audience, subcarrier).
  std::vector<Eigen::MatrixXcd> dirs(N, Eigen::MatrixXcd::Zero(M, G));
  Eigen::MatrixXd gain(N, G);
  for (int n = 0; n < N; ++n) {
    for (int gi = 0; gi < G; ++gi) {
      Eigen::MatrixXcd outer = Eigen::MatrixXcd::Zero(M, M);
      for (int k : partition.groups[gi].members()) {
        const Eigen::VectorXcd h = ch.col(k, n);
        outer.noalias() += h * h.adjoint();
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(outer);
      const Eigen::VectorXcd v = eig.eigenvectors().col(M - 1);
      dirs[n].col(gi) = v;
      double worst = std::numeric_limits<double>::infinity();
      for (int k : partition.groups[gi].members())
        worst = std::min(worst, std::norm(ch.col(k, n).dot(v)) / sigma2);
      gain(n, gi) = worst;
    }
  }

  // Assignment at provisional equal power; the weighted objective separates
  // over subcarriers, so a per-subcarrier argmax is exact for that prior.
  std::vector<int> assign(N);
  const double equal_power = P / N;
  for (int n = 0; n < N; ++n) {
    int best = 0;
    double best_val = -1;
    for (int gi = 0; gi < G; ++gi) {
      const double val = weights[gi] * std::log2(1.0 + equal_power * gain(n, gi));
      if (val > best_val) {
        best_val = val;
        best = gi;
      }
    }
    assign[n] = best;
  }

  // Weighted water-filling over the assigned gains:
  // p_n = max(0, alpha_n * B / (lambda ln 2) - 1/g_n), sum p_n = P.
  Eigen::VectorXd p = Eigen::VectorXd::Zero(N);
  {
    auto power_at = [&](double lambda) {
      double total = 0;
      for (int n = 0; n < N; ++n) {
        const double g = gain(n, assign[n]);
        if (g <= 0) continue;
        total += std::max(0.0, weights[assign[n]] * B / (lambda * std::numbers::ln2) - 1.0 / g);
      }
      return total;
    };
    // power_at is decreasing in lambda; geometric bisection over a wide
    // fixed bracket pins the water level.
    double a = 1e-40, b = 1e40;
    for (int it = 0; it < 300; ++it) {
      const double mid = std::sqrt(a * b);
      if (power_at(mid) > P)
        a = mid;
      else
        b = mid;
    }
    const double lambda = std::sqrt(a * b);
    for (int n = 0; n < N; ++n) {
      const double g = gain(n, assign[n]);
      if (g > 0)
        p[n] = std::max(0.0, weights[assign[n]] * B / (lambda * std::numbers::ln2) - 1.0 / g);
    }
    const double used = p.sum();
    if (used > 0) p *= P / used;  // exact budget
  }

  BeamformerSet beams;
  beams.params = params;
  beams.w.assign(N, Eigen::MatrixXcd::Zero(M, run.layers.num_layers()));
  Eigen::VectorXd unit_rates = Eigen::VectorXd::Zero(G);
  for (int n = 0; n < N; ++n) {
    const int gi = assign[n];
    const int li = run.layers.layer_index(partition.groups[gi]);
    beams.w[n].col(li) = std::sqrt(p[n]) * dirs[n].col(gi);
    unit_rates[gi] += B * std::log2(1.0 + p[n] * gain(n, gi));
  }
  // NoSplit structure: one content rate per audience.
  Eigen::VectorXd sub = Eigen::VectorXd::Zero(run.layers.num_subs());
  for (int j = 0; j < run.layers.num_subs(); ++j)
    sub[j] = unit_rates[run.layers.sub_index[j].group];

  run.state = lift_to_state(run.layers, ch, params, beams, sub);
  run.objective = weighted_sum_rate(run.layers, weights, sub);
  run.state.objective = run.objective;
  run.rates = assemble_rates(run.layers, sub);
  const FeasibilityReport feas = check_feasibility(beams, run.rates, ch, run.layers, 1e-6);
  run.feasible = feas.feasible;
  run.audit.feasible = feas.feasible;
  run.audit.power_slack = feas.power_slack;
  run.audit.min_rate_slack = feas.min_rate_slack;
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return run;
}

}  // namespace gmrs
