#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace gmrs {

// Physical constants of one downlink instance.
struct SystemParams {
  double power_budget = 1.0;    // total transmit power over all subcarriers (W)
  double noise_power = 1e-9;    // per-subcarrier receiver noise power (W)
  double bandwidth = 30e3;      // per-subcarrier bandwidth (Hz)

  void validate() const {
    if (!(power_budget > 0) || !(noise_power > 0) || !(bandwidth > 0))
      throw std::invalid_argument("SystemParams: all parameters must be positive");
  }
};

// Linear precoders: w[n] is an M x L complex matrix, one column per
// transmission layer (ordered as LayerStructure::layers), on subcarrier n.
struct BeamformerSet {
  std::vector<Eigen::MatrixXcd> w;
  SystemParams params;

  int num_subcarriers() const { return static_cast<int>(w.size()); }
};

inline double total_power(const BeamformerSet& b) {
  double p = 0;
  for (const auto& wn : b.w) p += wn.squaredNorm();
  return p;
}

}  // namespace gmrs
