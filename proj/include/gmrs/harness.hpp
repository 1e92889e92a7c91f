#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gmrs/scenario.hpp"

namespace gmrs {

struct RealizationResult {
  int realization = 0;
  ChannelState channel;
  std::vector<SchemeRun> schemes;
};

struct ExperimentResult {
  Scenario scenario;
  std::vector<RealizationResult> runs;
};

// Run every scheme on every realization.  Channels are addressed by
// (seed, realization), so the output is independent of `jobs` and of
// execution order.  For the iterative schemes, when warm embedding is on,
// tighter schemes seed richer ones (NoRS -> OneLayerRS -> PropRS) so the
// per-realization ordering between them is exact.
ExperimentResult run_experiment(const Scenario& scenario, int jobs = 1,
                                const std::function<void(int)>& progress = {});

// All schemes for one realization (used by run_experiment and the tests).
RealizationResult run_realization(const Scenario& scenario, int realization);

// Results file: scenario echo, per-run channels and solutions, and a
// per-scheme summary.  Wall-clock fields are emitted only when
// `include_timing` is set, keeping the default output byte-stable across
// repeated runs.
std::string results_to_json(const ExperimentResult& result, bool include_timing = false);
ExperimentResult results_from_json(const std::string& text);

// Re-check a results file from its own stored data: channel shapes, power
// budgets, rate-region feasibility at 1e-6, rate bookkeeping, and objective
// consistency.  Returns true when everything holds; `diagnostics` localizes
// the first few violations (realization, scheme, constraint).
bool validate_results(const ExperimentResult& result, std::string& diagnostics);

struct SweepSpec {
  std::string axis;             // "P" | "M" | "N" | "G"
  std::vector<double> values;
  Scenario base;
};

Scenario apply_axis(const Scenario& base, const std::string& axis, double value);

struct SweepResult {
  SweepSpec spec;
  std::vector<ExperimentResult> points;   // aligned with spec.values
};

SweepResult run_sweep(const SweepSpec& spec, int jobs = 1,
                      const std::function<void(int, int)>& progress = {});

// Mean/stddev of the weighted sum rate per scheme per axis value.
std::string sweep_to_csv(const SweepResult& sweep);
// Per-audience mean rates per scheme per axis value (one row per audience).
std::string sweep_units_to_csv(const SweepResult& sweep);

}  // namespace gmrs
