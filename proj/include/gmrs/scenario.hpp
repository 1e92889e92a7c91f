#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmrs/algebra.hpp"
#include "gmrs/baselines.hpp"
#include "gmrs/channel.hpp"
#include "gmrs/system.hpp"

namespace gmrs {

// A complete experiment description: demands, system constants, channel
// model, schemes, solver settings, and the realization schedule.  JSON
// round-trips losslessly; absent fields take the defaults below.
struct Scenario {
  int num_users = 3;
  std::vector<MessageLabel> catalogue;
  std::vector<std::vector<MessageLabel>> requests;

  int antennas = 4;
  int subcarriers = 4;
  SystemParams params;                       // P = 1 W, sigma^2 = 1e-9 W, B = 30 kHz
  std::vector<double> weight_values;         // empty: equal weights 1/|audiences|
  ChannelConfig channel;
  std::vector<Scheme> schemes = {Scheme::PropRS, Scheme::OneLayerRS, Scheme::NoRS, Scheme::Ofdma};

  double epsilon = 1e-4;
  int max_iterations = 100;
  int restarts = 3;
  double subproblem_tol = 1e-5;
  bool warm_embedding = true;

  int realizations = 20;
  std::uint64_t seed = 1;

  Demands demands() const;
  Eigen::VectorXd weights(const MessagePartition& partition) const;
  CccpConfig solver_config() const;
};

// The three-user saturated-demand example: seven messages, each user
// requesting their private message, the three pairwise-shared ones they are
// party to, and the fully shared one.
Scenario default_scenario();

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

}  // namespace gmrs
