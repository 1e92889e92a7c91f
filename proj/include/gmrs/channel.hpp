#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace gmrs {

// Frequency-domain downlink channels: h[k] is an M x N complex matrix whose
// column n is user k's channel on subcarrier n.
struct ChannelState {
  int num_users = 0;
  int num_antennas = 0;
  int num_subcarriers = 0;
  std::vector<Eigen::MatrixXcd> h;

  const Eigen::VectorXcd col(int user, int subcarrier) const {
    return h.at(user).col(subcarrier);
  }
};

struct OneRingConfig {
  int num_clusters = 3;              // users are split evenly over this many azimuth clusters
  double angle_spread_deg = 10.0;    // half-width of the scatterer ring seen from the array
  double antenna_spacing = 0.5;      // uniform linear array spacing in wavelengths
  double azimuth_min_deg = -60.0;
  double azimuth_max_deg = 60.0;
  int quadrature_points = 512;       // midpoint rule resolution for the covariance integral
};

enum class ChannelModel { OneRing, Iid };

struct ChannelConfig {
  ChannelModel model = ChannelModel::OneRing;
  OneRingConfig one_ring;
};

// Spatial covariance of a ULA channel whose energy arrives uniformly from
// azimuths in [center - spread, center + spread]: the midpoint-rule average
// of steering-vector outer products, which is Hermitian PSD with unit
// diagonal by construction.
Eigen::MatrixXcd one_ring_covariance(int num_antennas, double center_deg, double spread_deg,
                                     double antenna_spacing, int quadrature_points);

// Cluster center azimuths: evenly spaced over [azimuth_min, azimuth_max]
// (midpoint of the range when there is a single cluster); user k belongs to
// cluster floor(k * C / K).
std::vector<double> cluster_azimuths_deg(const OneRingConfig& cfg, int num_clusters);
int cluster_of_user(int user, int num_users, int num_clusters);

// Draw channels h[k].col(n) = C_k^{1/2} g with g standard complex Gaussian,
// i.i.d. over users and subcarriers; C_k is the one-ring covariance of user
// k's cluster (or identity for the iid model).  Fully determined by
// (seed, realization, user, subcarrier).
ChannelState sample_channels(int num_users, int num_antennas, int num_subcarriers,
                             const ChannelConfig& cfg, std::uint64_t seed,
                             std::uint32_t realization = 0);

// JSON round-trip (nlohmann-style text; complex numbers as [re, im] pairs).
std::string channel_to_json(const ChannelState& ch);
ChannelState channel_from_json(const std::string& text);

}  // namespace gmrs
