#include "gmrs/rate_region.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gmrs/linprog.hpp"

namespace gmrs {

namespace {

void check_args(const BeamformerSet& beams, const ChannelState& ch, const LayerStructure& layers) {
  if (beams.num_subcarriers() != ch.num_subcarriers)
    throw std::invalid_argument("rate region: beam/channel subcarrier mismatch");
  if (ch.num_users != layers.num_users)
    throw std::invalid_argument("rate region: channel/layer user mismatch");
  for (const auto& wn : beams.w)
    if (wn.rows() != ch.num_antennas || wn.cols() != layers.num_layers())
      throw std::invalid_argument("rate region: beam matrix shape mismatch");
  beams.params.validate();
}

// Interference layer indices for a user: every layer not containing them.
std::vector<int> interferers_of(const LayerStructure& layers, int user) {
  std::vector<int> out;
  for (int li = 0; li < layers.num_layers(); ++li)
    if (!layers.layers[li].contains(user)) out.push_back(li);
  return out;
}

}  // namespace

double received_power(const BeamformerSet& beams, const ChannelState& ch, int user,
                      int subcarrier, const std::vector<int>& layer_set) {
  const Eigen::VectorXcd h = ch.col(user, subcarrier);
  double p = 0;
  for (int li : layer_set) p += std::norm(h.dot(beams.w[subcarrier].col(li)));
  return p;
}

double region_rhs(const BeamformerSet& beams, const ChannelState& ch,
                  const LayerStructure& layers, int user, const std::vector<int>& layer_set) {
  check_args(beams, ch, layers);
  if (user < 0 || user >= layers.num_users) throw std::invalid_argument("region_rhs: bad user");
  if (layer_set.empty()) throw std::invalid_argument("region_rhs: empty layer subset");
  for (int li : layer_set) {
    if (li < 0 || li >= layers.num_layers())
      throw std::invalid_argument("region_rhs: bad layer index");
    if (!layers.layers[li].contains(user))
      throw std::invalid_argument("region_rhs: layer " + layers.layers[li].to_string() +
                                  " is not decodable by user " + std::to_string(user));
  }
  const auto noise = beams.params.noise_power;
  const auto interf = interferers_of(layers, user);
  double sum = 0;
  for (int n = 0; n < ch.num_subcarriers; ++n) {
    const double s = received_power(beams, ch, user, n, layer_set);
    const double i = received_power(beams, ch, user, n, interf);
    sum += std::log2(1.0 + s / (noise + i));
  }
  return beams.params.bandwidth * sum;
}

std::string FeasibilityReport::describe(const LayerStructure& layers) const {
  std::ostringstream os;
  os << (feasible ? "feasible" : "INFEASIBLE") << " (tol " << tolerance << ")\n";
  os << "  power slack: " << power_slack << "\n";
  for (const auto& row : rows) {
    if (row.slack >= -tolerance) continue;
    os << "  user " << row.user << " subset {";
    bool first = true;
    const auto& mine = layers.layers_of_user[row.user];
    for (std::size_t p = 0; p < mine.size(); ++p)
      if ((row.subset_mask >> p) & 1u) {
        if (!first) os << ",";
        os << layers.layers[mine[p]].to_string();
        first = false;
      }
    os << "} violated by " << -row.slack << "\n";
  }
  return os.str();
}

FeasibilityReport check_feasibility(const BeamformerSet& beams, const RateAllocation& rates,
                                    const ChannelState& ch, const LayerStructure& layers,
                                    double tol) {
  check_args(beams, ch, layers);
  if (rates.layer_rates.size() != layers.num_layers())
    throw std::invalid_argument("check_feasibility: rate vector mismatch");
  FeasibilityReport rep;
  rep.tolerance = tol;
  rep.power_slack = beams.params.power_budget - total_power(beams);
  bool ok = rep.power_slack >= -tol * (1.0 + beams.params.power_budget);
  rep.min_rate_slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < layers.num_users; ++k) {
    const auto& mine = layers.layers_of_user[k];
    const std::uint32_t limit = 1u << mine.size();
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      std::vector<int> subset;
      double lhs = 0;
      for (std::size_t p = 0; p < mine.size(); ++p)
        if ((mask >> p) & 1u) {
          subset.push_back(mine[p]);
          lhs += rates.layer_rates[mine[p]];
        }
      const double rhs = region_rhs(beams, ch, layers, k, subset);
      const double slack = rhs - lhs;
      rep.rows.push_back({k, mask, slack});
      rep.min_rate_slack = std::min(rep.min_rate_slack, slack);
      if (slack < -tol * (1.0 + std::abs(rhs))) ok = false;
    }
  }
  rep.feasible = ok;
  return rep;
}

RateAllocation max_rates_given_beams(const BeamformerSet& beams, const ChannelState& ch,
                                     const LayerStructure& layers,
                                     const Eigen::VectorXd& weights) {
  check_args(beams, ch, layers);
  if (weights.size() != static_cast<int>(layers.groups.size()))
    throw std::invalid_argument("max_rates_given_beams: weight vector mismatch");
  // Variables: content rates over layers.sub_index.  Rows: one per
  // (user, nonempty decodable subset).
  int num_rows = 0;
  for (int k = 0; k < layers.num_users; ++k)
    num_rows += (1 << layers.layers_of_user[k].size()) - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(num_rows, layers.num_subs());
  Eigen::VectorXd b(num_rows);
  int row = 0;
  for (int k = 0; k < layers.num_users; ++k) {
    const auto& mine = layers.layers_of_user[k];
    const std::uint32_t limit = 1u << mine.size();
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      std::vector<int> subset;
      for (std::size_t p = 0; p < mine.size(); ++p)
        if ((mask >> p) & 1u) subset.push_back(mine[p]);
      for (int li : subset)
        for (int j : layers.subs_of_layer[li]) A(row, j) = 1.0;
      b[row] = region_rhs(beams, ch, layers, k, subset);
      ++row;
    }
  }
  Eigen::VectorXd c(layers.num_subs());
  for (int j = 0; j < layers.num_subs(); ++j) c[j] = weights[layers.sub_index[j].group];
  const LpResult lp = simplex_maximize(A, b, c);
  if (!lp.optimal)
    throw std::runtime_error("max_rates_given_beams: rate LP failed: " + lp.message);
  return assemble_rates(layers, lp.x.cwiseMax(0.0));
}

}  // namespace gmrs
