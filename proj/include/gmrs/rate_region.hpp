#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gmrs/algebra.hpp"
#include "gmrs/channel.hpp"
#include "gmrs/system.hpp"

namespace gmrs {

// Received power of the layers in `layer_set` (indices into layers.layers) at
// user k on subcarrier n: sum of |h^H w_G|^2 over the set.
double received_power(const BeamformerSet& beams, const ChannelState& ch, int user,
                      int subcarrier, const std::vector<int>& layer_set);

// Right-hand side of the achievable-rate constraint for user k and a
// decodable-layer subset X (indices into layers.layers, each of which must
// contain k): the bandwidth-scaled sum over subcarriers of
// log2(1 + signal / (noise + interference)), where signal is the received
// power of X and interference is that of every layer not containing k.
double region_rhs(const BeamformerSet& beams, const ChannelState& ch,
                  const LayerStructure& layers, int user, const std::vector<int>& layer_set);

struct FeasibilityReport {
  bool feasible = false;
  double tolerance = 0;
  double power_slack = 0;   // budget minus used power (negative = violated)
  struct RateRow {
    int user;
    std::uint32_t subset_mask;   // over positions of layers_of_user[user]
    double slack;                // rhs minus layer-rate sum (negative = violated)
  };
  std::vector<RateRow> rows;     // every (user, subset) row, for localization
  double min_rate_slack = 0;

  std::string describe(const LayerStructure& layers) const;
};

// Check (beams, rates) against the full rate region: power budget and every
// (user, nonempty decodable subset) rate constraint, at absolute tolerance
// scaled by (1 + rhs) per row.
FeasibilityReport check_feasibility(const BeamformerSet& beams, const RateAllocation& rates,
                                    const ChannelState& ch, const LayerStructure& layers,
                                    double tol);

// With beams fixed, the region over content rates is a polyhedron; maximize
// the weighted sum of per-audience totals (weights per audience) over it.
// Throws on LP failure.
RateAllocation max_rates_given_beams(const BeamformerSet& beams, const ChannelState& ch,
                                     const LayerStructure& layers,
                                     const Eigen::VectorXd& weights);

}  // namespace gmrs
