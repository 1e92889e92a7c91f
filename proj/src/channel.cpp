#include "gmrs/channel.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "gmrs/rng.hpp"

namespace gmrs {

using json = nlohmann::json;

Eigen::MatrixXcd one_ring_covariance(int num_antennas, double center_deg, double spread_deg,
                                     double antenna_spacing, int quadrature_points) {
  if (num_antennas < 1) throw std::invalid_argument("one_ring_covariance: bad antenna count");
  if (spread_deg <= 0) throw std::invalid_argument("one_ring_covariance: spread must be positive");
  if (quadrature_points < 1) throw std::invalid_argument("one_ring_covariance: bad resolution");
  constexpr double deg = std::numbers::pi / 180.0;
  const double lo = (center_deg - spread_deg) * deg;
  const double hi = (center_deg + spread_deg) * deg;
  const double step = (hi - lo) / quadrature_points;
  Eigen::MatrixXcd cov = Eigen::MatrixXcd::Zero(num_antennas, num_antennas);
  Eigen::VectorXcd steer(num_antennas);
  for (int q = 0; q < quadrature_points; ++q) {
    const double phi = lo + (q + 0.5) * step;
    const double phase = 2.0 * std::numbers::pi * antenna_spacing * std::sin(phi);
    for (int m = 0; m < num_antennas; ++m)
      steer[m] = std::polar(1.0, phase * m);
    cov.noalias() += steer * steer.adjoint();
  }
  return cov / static_cast<double>(quadrature_points);
}

std::vector<double> cluster_azimuths_deg(const OneRingConfig& cfg, int num_clusters) {
  std::vector<double> out(num_clusters);
  if (num_clusters == 1) {
    out[0] = 0.5 * (cfg.azimuth_min_deg + cfg.azimuth_max_deg);
    return out;
  }
  const double step = (cfg.azimuth_max_deg - cfg.azimuth_min_deg) / (num_clusters - 1);
  for (int c = 0; c < num_clusters; ++c) out[c] = cfg.azimuth_min_deg + c * step;
  return out;
}

int cluster_of_user(int user, int num_users, int num_clusters) {
  return static_cast<int>(static_cast<long long>(user) * num_clusters / num_users);
}

ChannelState sample_channels(int num_users, int num_antennas, int num_subcarriers,
                             const ChannelConfig& cfg, std::uint64_t seed,
                             std::uint32_t realization) {
  if (num_users < 1 || num_antennas < 1 || num_subcarriers < 1)
    throw std::invalid_argument("sample_channels: bad dimensions");

  // Covariance square roots, one per cluster (identity for iid).
  std::vector<Eigen::MatrixXcd> roots;
  if (cfg.model == ChannelModel::OneRing) {
    const int C = std::min(cfg.one_ring.num_clusters, num_users);
    const auto centers = cluster_azimuths_deg(cfg.one_ring, C);
    for (int c = 0; c < C; ++c) {
      const Eigen::MatrixXcd cov =
          one_ring_covariance(num_antennas, centers[c], cfg.one_ring.angle_spread_deg,
                              cfg.one_ring.antenna_spacing, cfg.one_ring.quadrature_points);
      // Eigen-decomposition square root; safe for the (nearly) rank-deficient
      // covariances a narrow ring produces.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
      const Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      roots.push_back(eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().adjoint());
    }
  }

  ChannelState ch;
  ch.num_users = num_users;
  ch.num_antennas = num_antennas;
  ch.num_subcarriers = num_subcarriers;
  ch.h.reserve(num_users);
  const double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
  for (int k = 0; k < num_users; ++k) {
    Eigen::MatrixXcd hk(num_antennas, num_subcarriers);
    for (int n = 0; n < num_subcarriers; ++n) {
      Eigen::VectorXcd g(num_antennas);
      for (int m = 0; m < num_antennas; ++m) {
        // Address each draw by (realization, user, subcarrier, antenna) so
        // the stream is independent of evaluation order.
        const std::uint32_t id0 = realization;
        const std::uint32_t id1 = (static_cast<std::uint32_t>(k) << 16) | static_cast<std::uint32_t>(n);
        const auto z = normal_pair(seed, id0, id1, static_cast<std::uint32_t>(m));
        g[m] = std::complex<double>(z[0] * inv_sqrt2, z[1] * inv_sqrt2);
      }
      if (cfg.model == ChannelModel::OneRing) {
        const int c = cluster_of_user(k, num_users, std::min(cfg.one_ring.num_clusters, num_users));
        hk.col(n) = roots[c] * g;
      } else {
        hk.col(n) = g;
      }
    }
    ch.h.push_back(std::move(hk));
  }
  return ch;
}

static json complex_to_json(const std::complex<double>& z) {
  return json::array({z.real(), z.imag()});
}

std::string channel_to_json(const ChannelState& ch) {
  json j;
  j["num_users"] = ch.num_users;
  j["num_antennas"] = ch.num_antennas;
  j["num_subcarriers"] = ch.num_subcarriers;
  json users = json::array();
  for (const auto& hk : ch.h) {
    json cols = json::array();
    for (int n = 0; n < hk.cols(); ++n) {
      json col = json::array();
      for (int m = 0; m < hk.rows(); ++m) col.push_back(complex_to_json(hk(m, n)));
      cols.push_back(std::move(col));
    }
    users.push_back(std::move(cols));
  }
  j["h"] = std::move(users);
  return j.dump(2);
}

ChannelState channel_from_json(const std::string& text) {
  const json j = json::parse(text);
  ChannelState ch;
  ch.num_users = j.at("num_users").get<int>();
  ch.num_antennas = j.at("num_antennas").get<int>();
  ch.num_subcarriers = j.at("num_subcarriers").get<int>();
  const auto& users = j.at("h");
  if (static_cast<int>(users.size()) != ch.num_users)
    throw std::invalid_argument("channel_from_json: user count mismatch");
  for (const auto& cols : users) {
    Eigen::MatrixXcd hk(ch.num_antennas, ch.num_subcarriers);
    if (static_cast<int>(cols.size()) != ch.num_subcarriers)
      throw std::invalid_argument("channel_from_json: subcarrier count mismatch");
    for (int n = 0; n < ch.num_subcarriers; ++n) {
      const auto& col = cols.at(n);
      if (static_cast<int>(col.size()) != ch.num_antennas)
        throw std::invalid_argument("channel_from_json: antenna count mismatch");
      for (int m = 0; m < ch.num_antennas; ++m)
        hk(m, n) = std::complex<double>(col.at(m).at(0).get<double>(),
                                        col.at(m).at(1).get<double>());
    }
    ch.h.push_back(std::move(hk));
  }
  return ch;
}

}  // namespace gmrs
