#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gmrs/cccp.hpp"

namespace gmrs {

// Transmission schemes compared by the experiment harness.
//  - PropRS:     all splitting layers (every superset of each audience).
//  - OneLayerRS: each audience plus one shared layer over all users.
//  - NoRS:       one layer per audience, no splitting.
//  - Ofdma:      one audience per subcarrier, matched single-beam transmission
//                with water-filled power (no spatial multiplexing).
enum class Scheme { PropRS, OneLayerRS, NoRS, Ofdma };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);
SplitScheme split_of(Scheme s);

struct SchemeRun {
  Scheme scheme = Scheme::PropRS;
  LayerStructure layers;
  SolutionState state;
  double objective = 0;          // weighted sum of audience rates
  RateAllocation rates;
  std::vector<SolveTrace> traces;
  KktReport audit;
  bool feasible = false;
  double wall_seconds = 0;
};

// Re-express a solution of a scheme with fewer layers in a richer layer
// structure (zero beams and rates on the extra layers), rebuilding the
// auxiliaries for the new structure.  Every source layer and (audience,
// layer) pair must exist in the target.
SolutionState embed_solution(const LayerStructure& from, const LayerStructure& to,
                             const ChannelState& ch, const SystemParams& params,
                             const SolutionState& state);

// Run one scheme on one channel realization.  For the iterative schemes
// `warm` (a solution under `warm_layers`) seeds the first restart after
// embedding.  OFDMA ignores warm starts.
SchemeRun run_scheme(Scheme scheme, const MessagePartition& partition, const ChannelState& ch,
                     const SystemParams& params, const Eigen::VectorXd& weights,
                     const CccpConfig& config, const SolutionState* warm = nullptr,
                     const LayerStructure* warm_layers = nullptr);

// Orthogonal baseline: each subcarrier serves one audience with the matched
// beam of that audience (dominant eigenvector of the members' channel outer
// products), the audience chosen to maximize the weighted per-subcarrier
// rate at equal provisional power; transmit powers are then water-filled
// against each assigned subcarrier's worst-member gain.
SchemeRun ofdma_solve(const MessagePartition& partition, const ChannelState& ch,
                      const SystemParams& params, const Eigen::VectorXd& weights);

}  // namespace gmrs
