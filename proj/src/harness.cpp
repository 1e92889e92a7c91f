#include "gmrs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "gmrs/rate_region.hpp"

namespace gmrs {

using json = nlohmann::json;

RealizationResult run_realization(const Scenario& scenario, int realization) {
  RealizationResult out;
  out.realization = realization;
  out.channel = sample_channels(scenario.num_users, scenario.antennas, scenario.subcarriers,
                                scenario.channel, scenario.seed,
                                static_cast<std::uint32_t>(realization));
  const MessagePartition partition = compute_partition(scenario.demands());
  const Eigen::VectorXd weights = scenario.weights(partition);
  CccpConfig cfg = scenario.solver_config();
  cfg.seed = scenario.seed + static_cast<std::uint64_t>(realization) * 1000003ull;

  // Solve tighter schemes first so their solutions can seed the richer ones.
  std::vector<Scheme> order = scenario.schemes;
  std::stable_sort(order.begin(), order.end(), [](Scheme a, Scheme b) {
    auto rank = [](Scheme s) {
      switch (s) {
        case Scheme::Ofdma: return 0;
        case Scheme::NoRS: return 1;
        case Scheme::OneLayerRS: return 2;
        case Scheme::PropRS: return 3;
      }
      return 4;
    };
    return rank(a) < rank(b);
  });

  // Each scheme seeds the next richer one; the chain is anchored at the
  // OFDMA solution (computed even when unreported — it is cheap), so every
  // iterative scheme is floored at the orthogonal baseline.
  std::optional<SchemeRun> seed;
  const SchemeRun* prev = nullptr;
  std::vector<SchemeRun> runs;
  runs.reserve(order.size());
  for (Scheme sc : order) {
    if (sc == Scheme::Ofdma) {
      runs.push_back(ofdma_solve(partition, out.channel, scenario.params, weights));
      if (scenario.warm_embedding) prev = &runs.back();
      continue;
    }
    if (scenario.warm_embedding && prev == nullptr) {
      seed = ofdma_solve(partition, out.channel, scenario.params, weights);
      prev = &*seed;
    }
    runs.push_back(run_scheme(sc, partition, out.channel, scenario.params, weights, cfg,
                              prev != nullptr ? &prev->state : nullptr,
                              prev != nullptr ? &prev->layers : nullptr));
    prev = &runs.back();
  }
  // Report in the scenario's order.
  for (Scheme sc : scenario.schemes)
    for (auto& r : runs)
      if (r.scheme == sc) {
        out.schemes.push_back(std::move(r));
        break;
      }
  return out;
}

ExperimentResult run_experiment(const Scenario& scenario, int jobs,
                                const std::function<void(int)>& progress) {
  ExperimentResult result;
  result.scenario = scenario;
  result.runs.resize(scenario.realizations);
  if (jobs <= 1) {
    for (int r = 0; r < scenario.realizations; ++r) {
      result.runs[r] = run_realization(scenario, r);
      if (progress) progress(r);
    }
    return result;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, scenario.realizations);
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&]() {
      while (true) {
        const int r = next.fetch_add(1);
        if (r >= scenario.realizations) break;
        result.runs[r] = run_realization(scenario, r);
        if (progress) progress(r);
      }
    });
  for (auto& th : pool) th.join();
  return result;
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

json beams_to_json(const BeamformerSet& b) {
  json per_n = json::array();
  for (const auto& wn : b.w) {
    json cols = json::array();
    for (int l = 0; l < wn.cols(); ++l) {
      json col = json::array();
      for (int m = 0; m < wn.rows(); ++m)
        col.push_back(json::array({wn(m, l).real(), wn(m, l).imag()}));
      cols.push_back(std::move(col));
    }
    per_n.push_back(std::move(cols));
  }
  return per_n;
}

void beams_from_json(const json& per_n, int M, int L, BeamformerSet& b) {
  b.w.clear();
  for (const auto& cols : per_n) {
    Eigen::MatrixXcd wn(M, L);
    for (int l = 0; l < L; ++l)
      for (int m = 0; m < M; ++m)
        wn(m, l) = std::complex<double>(cols.at(l).at(m).at(0).get<double>(),
                                        cols.at(l).at(m).at(1).get<double>());
    b.w.push_back(std::move(wn));
  }
}

json scheme_run_to_json(const SchemeRun& run, bool include_timing) {
  json j;
  j["scheme"] = to_string(run.scheme);
  j["split"] = to_string(run.layers.scheme);
  j["objective"] = run.objective;
  j["feasible"] = run.feasible;
  j["sub_rates"] = vec_to_json(run.state.sub_rates);
  j["unit_rates"] = vec_to_json(run.rates.unit_rates);
  j["layer_rates"] = vec_to_json(run.rates.layer_rates);
  j["beams"] = beams_to_json(run.state.beams);
  j["rate_shares"] = vec_to_json(run.state.rate_shares);
  j["sinr_bounds"] = vec_to_json(run.state.sinr_bounds);
  j["audit"] = {{"feasible", run.audit.feasible},
                {"power_slack", run.audit.power_slack},
                {"min_rate_slack", run.audit.min_rate_slack},
                {"activity_gap", run.audit.max_activity_gap},
                {"stationarity", run.audit.stationarity},
                {"complementarity", run.audit.complementarity}};
  json traces = json::array();
  for (const auto& tr : run.traces) {
    json t;
    t["restart"] = tr.restart;
    t["termination"] = tr.termination;
    json its = json::array();
    for (const auto& rec : tr.iterations)
      its.push_back(json::array({rec.iteration, rec.objective, rec.step_norm, rec.newton_iters,
                                 rec.subproblem_gap, rec.solver_converged, rec.kept_previous}));
    t["iterations"] = std::move(its);
    traces.push_back(std::move(t));
  }
  j["traces"] = std::move(traces);
  if (include_timing) j["wall_seconds"] = run.wall_seconds;
  return j;
}

}  // namespace

std::string results_to_json(const ExperimentResult& result, bool include_timing) {
  json j;
  j["scenario"] = json::parse(scenario_to_json(result.scenario));
  j["generator"] = "philox4x32-10";
  json runs = json::array();
  for (const auto& run : result.runs) {
    json r;
    r["realization"] = run.realization;
    r["channel"] = json::parse(channel_to_json(run.channel));
    json schemes = json::array();
    for (const auto& s : run.schemes) schemes.push_back(scheme_run_to_json(s, include_timing));
    r["schemes"] = std::move(schemes);
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  // Per-scheme summary over realizations.
  json summary = json::array();
  for (Scheme sc : result.scenario.schemes) {
    double sum = 0, sq = 0;
    int n = 0;
    for (const auto& run : result.runs)
      for (const auto& s : run.schemes)
        if (s.scheme == sc) {
          sum += s.objective;
          sq += s.objective * s.objective;
          ++n;
        }
    if (n == 0) continue;
    const double mean = sum / n;
    const double var = std::max(0.0, sq / n - mean * mean);
    summary.push_back({{"scheme", to_string(sc)},
                       {"mean_objective", mean},
                       {"std_objective", std::sqrt(var)},
                       {"realizations", n}});
  }
  j["summary"] = std::move(summary);
  return j.dump(2);
}

ExperimentResult results_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentResult result;
  result.scenario = scenario_from_json(j.at("scenario").dump());
  const MessagePartition partition = compute_partition(result.scenario.demands());
  for (const auto& r : j.at("runs")) {
    RealizationResult run;
    run.realization = r.at("realization").get<int>();
    run.channel = channel_from_json(r.at("channel").dump());
    for (const auto& sj : r.at("schemes")) {
      SchemeRun s;
      s.scheme = scheme_from_string(sj.at("scheme").get<std::string>());
      s.layers = build_layers(partition, split_of(s.scheme));
      s.objective = sj.at("objective").get<double>();
      s.feasible = sj.at("feasible").get<bool>();
      s.state.sub_rates = vec_from_json(sj.at("sub_rates"));
      s.state.rate_shares = vec_from_json(sj.at("rate_shares"));
      s.state.sinr_bounds = vec_from_json(sj.at("sinr_bounds"));
      s.state.beams.params = result.scenario.params;
      beams_from_json(sj.at("beams"), result.scenario.antennas, s.layers.num_layers(),
                      s.state.beams);
      s.state.objective = s.objective;
      s.rates = assemble_rates(s.layers, s.state.sub_rates.cwiseMax(0.0));
      run.schemes.push_back(std::move(s));
    }
    result.runs.push_back(std::move(run));
  }
  return result;
}

bool validate_results(const ExperimentResult& result, std::string& diagnostics) {
  std::ostringstream os;
  int violations = 0;
  const MessagePartition partition = compute_partition(result.scenario.demands());
  const Eigen::VectorXd weights = result.scenario.weights(partition);
  for (const auto& run : result.runs) {
    if (run.channel.num_users != result.scenario.num_users ||
        run.channel.num_antennas != result.scenario.antennas ||
        run.channel.num_subcarriers != result.scenario.subcarriers) {
      os << "realization " << run.realization << ": channel dimensions do not match scenario\n";
      ++violations;
      continue;
    }
    for (const auto& s : run.schemes) {
      const std::string tag =
          "realization " + std::to_string(run.realization) + " scheme " + to_string(s.scheme);
      RateAllocation rates;
      try {
        rates = assemble_rates(s.layers, s.state.sub_rates);
      } catch (const std::exception& e) {
        os << tag << ": bad rate vector (" << e.what() << ")\n";
        ++violations;
        continue;
      }
      const double obj = weighted_sum_rate(s.layers, weights, s.state.sub_rates);
      if (std::abs(obj - s.objective) > 1e-9 * (1.0 + std::abs(obj))) {
        os << tag << ": stored objective " << s.objective
           << " does not match the stored rates (" << obj << ")\n";
        ++violations;
      }
      const FeasibilityReport rep =
          check_feasibility(s.state.beams, rates, run.channel, s.layers, 1e-6);
      if (!rep.feasible) {
        if (rep.power_slack < 0) {
          os << tag << ": power budget exceeded by " << -rep.power_slack << " W\n";
          ++violations;
        }
        const auto worst = std::min_element(
            rep.rows.begin(), rep.rows.end(),
            [](const auto& a, const auto& b) { return a.slack < b.slack; });
        if (worst != rep.rows.end() && worst->slack < 0) {
          os << tag << ": rate constraint violated for user " << worst->user << " subset mask "
             << worst->subset_mask << " by " << -worst->slack << " bit/s\n";
          ++violations;
        }
        if (rep.power_slack >= 0 && (worst == rep.rows.end() || worst->slack >= 0)) {
          os << tag << ": infeasible against the stored channel\n";
          ++violations;
        }
      }
      if (violations >= 20) break;
    }
    if (violations >= 20) break;
  }
  diagnostics = os.str();
  return violations == 0;
}

Scenario apply_axis(const Scenario& base, const std::string& axis, double value) {
  Scenario s = base;
  if (axis == "P")
    s.params.power_budget = value;
  else if (axis == "M")
    s.antennas = static_cast<int>(value);
  else if (axis == "N")
    s.subcarriers = static_cast<int>(value);
  else if (axis == "G")
    s.channel.one_ring.num_clusters = static_cast<int>(value);
  else
    throw std::invalid_argument("unknown sweep axis '" + axis + "' (use P, M, N, or G)");
  return s;
}

SweepResult run_sweep(const SweepSpec& spec, int jobs,
                      const std::function<void(int, int)>& progress) {
  SweepResult out;
  out.spec = spec;
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const Scenario s = apply_axis(spec.base, spec.axis, spec.values[i]);
    std::function<void(int)> inner;
    if (progress) {
      const int point = static_cast<int>(i);
      inner = [&progress, point](int r) { progress(point, r); };
    }
    out.points.push_back(run_experiment(s, jobs, inner));
  }
  return out;
}

std::string sweep_to_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << "axis,value,scheme,mean_objective,std_objective,realizations\n";
  os.precision(12);
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& ex = sweep.points[i];
    for (Scheme sc : ex.scenario.schemes) {
      double sum = 0, sq = 0;
      int n = 0;
      for (const auto& run : ex.runs)
        for (const auto& s : run.schemes)
          if (s.scheme == sc) {
            sum += s.objective;
            sq += s.objective * s.objective;
            ++n;
          }
      if (n == 0) continue;
      const double mean = sum / n;
      os << sweep.spec.axis << "," << sweep.spec.values[i] << "," << to_string(sc) << "," << mean
         << "," << std::sqrt(std::max(0.0, sq / n - mean * mean)) << "," << n << "\n";
    }
  }
  return os.str();
}

std::string sweep_units_to_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << "axis,value,scheme,audience,mean_rate\n";
  os.precision(12);
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const auto& ex = sweep.points[i];
    const MessagePartition partition = compute_partition(ex.scenario.demands());
    for (Scheme sc : ex.scenario.schemes) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<int>(partition.groups.size()));
      int n = 0;
      for (const auto& run : ex.runs)
        for (const auto& s : run.schemes)
          if (s.scheme == sc) {
            acc += s.rates.unit_rates;
            ++n;
          }
      if (n == 0) continue;
      for (int g = 0; g < acc.size(); ++g)
        os << sweep.spec.axis << "," << sweep.spec.values[i] << "," << to_string(sc) << ",\""
           << partition.groups[g].to_string() << "\"," << acc[g] / n << "\n";
    }
  }
  return os.str();
}

}  // namespace gmrs
