#include "gmrs/scenario.hpp"

#include <json.hpp>
#include <stdexcept>

namespace gmrs {

using json = nlohmann::json;

Demands Scenario::demands() const { return Demands(num_users, catalogue, requests); }

Eigen::VectorXd Scenario::weights(const MessagePartition& partition) const {
  const int G = static_cast<int>(partition.groups.size());
  if (weight_values.empty())
    return Eigen::VectorXd::Constant(G, 1.0 / G);
  if (static_cast<int>(weight_values.size()) != G)
    throw std::invalid_argument("Scenario: weight count differs from audience count");
  Eigen::VectorXd w(G);
  for (int i = 0; i < G; ++i) {
    if (weight_values[i] < 0) throw std::invalid_argument("Scenario: negative weight");
    w[i] = weight_values[i];
  }
  return w;
}

CccpConfig Scenario::solver_config() const {
  CccpConfig cfg;
  cfg.epsilon = epsilon;
  cfg.max_iterations = max_iterations;
  cfg.restarts = restarts;
  cfg.subproblem_tol = subproblem_tol;
  cfg.seed = seed;
  return cfg;
}

Scenario default_scenario() {
  Scenario s;
  s.num_users = 3;
  s.catalogue = {"m1", "m2", "m3", "m4", "m5", "m6", "m7"};
  s.requests = {{"m1", "m4", "m5", "m7"}, {"m2", "m4", "m6", "m7"}, {"m3", "m5", "m6", "m7"}};
  return s;
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["demands"] = {{"num_users", s.num_users}, {"messages", s.catalogue}, {"requests", s.requests}};
  j["antennas"] = s.antennas;
  j["subcarriers"] = s.subcarriers;
  j["power_budget_w"] = s.params.power_budget;
  j["noise_power_w"] = s.params.noise_power;
  j["bandwidth_hz"] = s.params.bandwidth;
  if (!s.weight_values.empty()) j["weights"] = s.weight_values;
  json ch;
  ch["model"] = s.channel.model == ChannelModel::OneRing ? "one_ring" : "iid";
  if (s.channel.model == ChannelModel::OneRing) {
    ch["clusters"] = s.channel.one_ring.num_clusters;
    ch["angle_spread_deg"] = s.channel.one_ring.angle_spread_deg;
    ch["antenna_spacing"] = s.channel.one_ring.antenna_spacing;
    ch["azimuth_range_deg"] =
        json::array({s.channel.one_ring.azimuth_min_deg, s.channel.one_ring.azimuth_max_deg});
    ch["quadrature_points"] = s.channel.one_ring.quadrature_points;
  }
  j["channel"] = std::move(ch);
  json schemes = json::array();
  for (Scheme sc : s.schemes) schemes.push_back(to_string(sc));
  j["schemes"] = std::move(schemes);
  j["solver"] = {{"epsilon", s.epsilon},
                 {"max_iterations", s.max_iterations},
                 {"restarts", s.restarts},
                 {"subproblem_tol", s.subproblem_tol},
                 {"warm_embedding", s.warm_embedding}};
  j["realizations"] = s.realizations;
  j["seed"] = s.seed;
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  json j = json::parse(text);
  Scenario s = default_scenario();
  if (j.contains("demands")) {
    const auto& d = j.at("demands");
    s.num_users = d.at("num_users").get<int>();
    s.catalogue = d.at("messages").get<std::vector<std::string>>();
    s.requests = d.at("requests").get<std::vector<std::vector<std::string>>>();
  }
  if (j.contains("antennas")) s.antennas = j.at("antennas").get<int>();
  if (j.contains("subcarriers")) s.subcarriers = j.at("subcarriers").get<int>();
  if (j.contains("power_budget_w")) s.params.power_budget = j.at("power_budget_w").get<double>();
  if (j.contains("noise_power_w")) s.params.noise_power = j.at("noise_power_w").get<double>();
  if (j.contains("bandwidth_hz")) s.params.bandwidth = j.at("bandwidth_hz").get<double>();
  if (j.contains("weights")) s.weight_values = j.at("weights").get<std::vector<double>>();
  if (j.contains("channel")) {
    const auto& ch = j.at("channel");
    const std::string model = ch.value("model", "one_ring");
    if (model == "iid")
      s.channel.model = ChannelModel::Iid;
    else if (model == "one_ring")
      s.channel.model = ChannelModel::OneRing;
    else
      throw std::invalid_argument("Scenario: unknown channel model '" + model + "'");
    if (ch.contains("clusters")) s.channel.one_ring.num_clusters = ch.at("clusters").get<int>();
    if (ch.contains("angle_spread_deg"))
      s.channel.one_ring.angle_spread_deg = ch.at("angle_spread_deg").get<double>();
    if (ch.contains("antenna_spacing"))
      s.channel.one_ring.antenna_spacing = ch.at("antenna_spacing").get<double>();
    if (ch.contains("azimuth_range_deg")) {
      s.channel.one_ring.azimuth_min_deg = ch.at("azimuth_range_deg").at(0).get<double>();
      s.channel.one_ring.azimuth_max_deg = ch.at("azimuth_range_deg").at(1).get<double>();
    }
    if (ch.contains("quadrature_points"))
      s.channel.one_ring.quadrature_points = ch.at("quadrature_points").get<int>();
  }
  if (j.contains("schemes")) {
    s.schemes.clear();
    for (const auto& name : j.at("schemes")) s.schemes.push_back(scheme_from_string(name));
  }
  if (j.contains("solver")) {
    const auto& sv = j.at("solver");
    s.epsilon = sv.value("epsilon", s.epsilon);
    s.max_iterations = sv.value("max_iterations", s.max_iterations);
    s.restarts = sv.value("restarts", s.restarts);
    s.subproblem_tol = sv.value("subproblem_tol", s.subproblem_tol);
    s.warm_embedding = sv.value("warm_embedding", s.warm_embedding);
  }
  if (j.contains("realizations")) s.realizations = j.at("realizations").get<int>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace gmrs
