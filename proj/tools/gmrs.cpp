// Command-line front end: run experiments, sweep a system axis, or
// re-validate a results file.  Exit codes: 0 success, 1 validation failure,
// 2 bad usage or configuration.
#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gmrs/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

gmrs::Scenario load_scenario(const std::string& path, std::uint64_t* seed,
                             const std::vector<std::string>& schemes, int* realizations) {
  gmrs::Scenario s = path.empty() ? gmrs::default_scenario()
                                  : gmrs::scenario_from_json(read_file(path));
  if (seed) s.seed = *seed;
  if (realizations) s.realizations = *realizations;
  if (!schemes.empty()) {
    s.schemes.clear();
    for (const auto& name : schemes) s.schemes.push_back(gmrs::scheme_from_string(name));
  }
  s.demands();  // validate early so errors surface as configuration errors
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted sum-rate experiments for layered multicast beamforming"};
  app.require_subcommand(1);

  std::string scenario_path, out_path;
  std::uint64_t seed = 0;
  bool have_seed = false;
  int realizations = 0;
  bool have_realizations = false;
  std::vector<std::string> scheme_names;
  int jobs = 1;
  bool timing = false;
  bool quiet = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario_path, "scenario JSON file (default: built-in)");
    cmd->add_option("--out", out_path, "output file (default: stdout)");
    cmd->add_option("--seed", seed, "override the scenario seed")
        ->each([&](const std::string&) { have_seed = true; });
    cmd->add_option("--realizations", realizations, "override the realization count")
        ->each([&](const std::string&) { have_realizations = true; });
    cmd->add_option("--schemes", scheme_names,
                    "override the scheme list (PropRS OneLayerRS NoRS OFDMA)");
    cmd->add_option("--jobs", jobs, "worker threads (results are identical for any value)");
    cmd->add_flag("--timing", timing, "include wall-clock fields (breaks byte-stability)");
    cmd->add_flag("--quiet", quiet, "suppress progress output");
  };

  CLI::App* run = app.add_subcommand("run", "solve every scheme on every realization");
  add_common(run);

  CLI::App* sweep = app.add_subcommand("sweep", "repeat an experiment along one axis");
  add_common(sweep);
  std::string axis = "P";
  std::vector<double> values;
  sweep->add_option("--axis", axis, "P (power W), M (antennas), N (subcarriers), G (clusters)");
  sweep->add_option("--values", values, "axis values")->required();

  CLI::App* validate = app.add_subcommand("validate", "re-check a results file");
  std::string results_path;
  validate->add_option("results", results_path, "results JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const gmrs::ExperimentResult result = gmrs::results_from_json(read_file(results_path));
      std::string diagnostics;
      if (gmrs::validate_results(result, diagnostics)) {
        std::cout << "ok: " << result.runs.size() << " realizations, "
                  << result.scenario.schemes.size() << " schemes\n";
        return 0;
      }
      std::cerr << diagnostics;
      std::cerr << "validation failed\n";
      return 1;
    }

    const gmrs::Scenario scenario =
        load_scenario(scenario_path, have_seed ? &seed : nullptr, scheme_names,
                      have_realizations ? &realizations : nullptr);

    if (run->parsed()) {
      const auto t0 = std::chrono::steady_clock::now();
      std::function<void(int)> progress;
      if (!quiet) progress = [](int r) { std::cerr << "realization " << r << " done\n"; };
      const gmrs::ExperimentResult result = gmrs::run_experiment(scenario, jobs, progress);
      const std::string text = gmrs::results_to_json(result, timing);
      if (out_path.empty())
        std::cout << text << "\n";
      else
        write_file(out_path, text);
      if (!quiet) {
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - t0).count();
        std::cerr << "done in " << secs << " s\n";
      }
      return 0;
    }

    // sweep
    gmrs::SweepSpec spec;
    spec.axis = axis;
    spec.values = values;
    spec.base = scenario;
    for (double v : values) (void)gmrs::apply_axis(spec.base, axis, v);  // validate axis/values
    std::function<void(int, int)> progress;
    if (!quiet)
      progress = [&spec](int point, int r) {
        std::cerr << "value " << spec.values[point] << ": realization " << r << " done\n";
      };
    const gmrs::SweepResult result = gmrs::run_sweep(spec, jobs, progress);
    const std::string csv = gmrs::sweep_to_csv(result);
    if (out_path.empty()) {
      std::cout << csv;
    } else {
      write_file(out_path, csv);
      const std::string stem = out_path.ends_with(".csv")
                                   ? out_path.substr(0, out_path.size() - 4)
                                   : out_path;
      write_file(stem + "_units.csv", gmrs::sweep_units_to_csv(result));
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
