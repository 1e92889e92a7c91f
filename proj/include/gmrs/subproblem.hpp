#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gmrs/algebra.hpp"
#include "gmrs/channel.hpp"
#include "gmrs/convex_program.hpp"
#include "gmrs/system.hpp"

namespace gmrs {

// One iterate of the alternating scheme: beams, content rates, and the
// per-(user, subcarrier, decodable-subset) auxiliaries that witness rate
// feasibility — rate_shares (bits contributed by the subcarrier, summing to
// the subset's rate total) and sinr_bounds (a lower bound on one plus the
// subset's decoding SINR, dominating 2^(share/bandwidth)).
struct SolutionState {
  BeamformerSet beams;
  Eigen::VectorXd sub_rates;      // over LayerStructure::sub_index
  Eigen::VectorXd rate_shares;    // e: subcarrier-major, aux-minor
  Eigen::VectorXd sinr_bounds;    // u: same indexing
  int iterations = 0;
  double objective = 0;           // weighted sum of audience rates
};

// Index bookkeeping for the real-variable vector of one convexified
// subproblem:
//   [ w (2M reals per layer per subcarrier) | e | u | content rates ]
// e/u are subcarrier-major over aux positions; an aux position is one
// (user, nonempty decodable layer subset) pair.
struct SubproblemLayout {
  int num_users = 0, num_antennas = 0, num_subcarriers = 0, num_layers = 0, num_subs = 0;
  int aux = 0;                            // aux positions per subcarrier
  SystemParams params;
  std::vector<int> aux_user;              // aux position -> user
  std::vector<std::uint32_t> aux_mask;    // aux position -> mask over layers_of_user[user]
  std::vector<int> aux_base;              // user -> first aux position

  int w_offset(int n, int layer) const {
    return (n * num_layers + layer) * 2 * num_antennas;
  }
  int e_index(int n, int a) const {
    return 2 * num_antennas * num_layers * num_subcarriers + n * aux + a;
  }
  int u_index(int n, int a) const {
    return 2 * num_antennas * num_layers * num_subcarriers + (num_subcarriers + n) * aux + a;
  }
  int r_index(int j) const {
    return 2 * num_antennas * num_layers * num_subcarriers + 2 * num_subcarriers * aux + j;
  }
  int dim() const {
    return 2 * num_antennas * num_layers * num_subcarriers + 2 * num_subcarriers * aux + num_subs;
  }
  // Count with complex beams counted once (not as real pairs).
  int variable_count() const {
    return num_antennas * num_layers * num_subcarriers + 2 * num_subcarriers * aux + num_subs;
  }

  Eigen::VectorXd pack(const SolutionState& s) const;
  SolutionState unpack(const Eigen::VectorXd& x) const;
};

SubproblemLayout make_layout(const LayerStructure& layers, int num_antennas, int num_subcarriers,
                             const SystemParams& params);

struct Subproblem {
  ConvexProgram program;
  SubproblemLayout layout;
};

// Convexified weighted-sum-rate step around `prev`: the nonconvex decoding
// constraints are replaced by their convex majorants obtained from
// linearizing the concave parts at prev's beams and sinr_bounds.  The
// majorant touches the true constraint with value and gradient at the
// expansion point, so the true constraint set contains the subproblem's.
Subproblem build_subproblem(const LayerStructure& layers, const ChannelState& ch,
                            const Eigen::VectorXd& weights, const SystemParams& params,
                            const SolutionState& prev);

// True (unlinearized) decoding constraint value for one aux position and
// subcarrier at a packed point: noise+interference - (signal+noise+interference)/u.
double decoding_constraint(const Subproblem& sp, const LayerStructure& layers,
                           const ChannelState& ch, const Eigen::VectorXd& x, int n, int a);
// The majorant's value at a packed point (same row).
double majorant_value(const Subproblem& sp, const Eigen::VectorXd& x, int n, int a);

// A strictly interior point for the subproblem near the (typically
// boundary) warm point: beams kept (scaled into the power ball if needed),
// rates shrunk by a backoff factor and floored strictly positive, shares
// adjusted to keep the coupling rows exact, and each sinr_bound placed
// geometrically between its two active limits.  Returns false if no backoff
// in the schedule yields strict interiority.
bool interior_start(const Subproblem& sp, const Eigen::VectorXd& warm, Eigen::VectorXd& x0);

// Reconstruct a full iterate from beams and content rates: shares get each
// subset's per-subcarrier capacity minus an equal spread of the slack, and
// sinr_bounds sit at 2^(share/bandwidth).  Throws if the rates are not
// achievable under the beams.
SolutionState lift_to_state(const LayerStructure& layers, const ChannelState& ch,
                            const SystemParams& params, const BeamformerSet& beams,
                            const Eigen::VectorXd& sub_rates);

}  // namespace gmrs
