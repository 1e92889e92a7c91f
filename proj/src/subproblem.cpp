#include "gmrs/subproblem.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace gmrs {

namespace {
constexpr double kMinSinrBound = 1e-12;  // floor for expansion-point bounds
}

Eigen::VectorXd SubproblemLayout::pack(const SolutionState& s) const {
  Eigen::VectorXd x(dim());
  for (int n = 0; n < num_subcarriers; ++n) {
    const Eigen::MatrixXcd& wn = s.beams.w.at(n);
    for (int l = 0; l < num_layers; ++l) {
      const int off = w_offset(n, l);
      x.segment(off, num_antennas) = wn.col(l).real();
      x.segment(off + num_antennas, num_antennas) = wn.col(l).imag();
    }
  }
  for (int n = 0; n < num_subcarriers; ++n)
    for (int a = 0; a < aux; ++a) {
      x[e_index(n, a)] = s.rate_shares[n * aux + a];
      x[u_index(n, a)] = s.sinr_bounds[n * aux + a];
    }
  for (int j = 0; j < num_subs; ++j) x[r_index(j)] = s.sub_rates[j];
  return x;
}

SolutionState SubproblemLayout::unpack(const Eigen::VectorXd& x) const {
  SolutionState s;
  s.beams.params = params;
  s.beams.w.resize(num_subcarriers);
  for (int n = 0; n < num_subcarriers; ++n) {
    Eigen::MatrixXcd wn(num_antennas, num_layers);
    for (int l = 0; l < num_layers; ++l) {
      const int off = w_offset(n, l);
      wn.col(l).real() = x.segment(off, num_antennas);
      wn.col(l).imag() = x.segment(off + num_antennas, num_antennas);
    }
    s.beams.w[n] = std::move(wn);
  }
  s.rate_shares.resize(num_subcarriers * aux);
  s.sinr_bounds.resize(num_subcarriers * aux);
  for (int n = 0; n < num_subcarriers; ++n)
    for (int a = 0; a < aux; ++a) {
      s.rate_shares[n * aux + a] = x[e_index(n, a)];
      s.sinr_bounds[n * aux + a] = x[u_index(n, a)];
    }
  s.sub_rates.resize(num_subs);
  for (int j = 0; j < num_subs; ++j) s.sub_rates[j] = x[r_index(j)];
  return s;
}

SubproblemLayout make_layout(const LayerStructure& layers, int num_antennas, int num_subcarriers,
                             const SystemParams& params) {
  params.validate();
  SubproblemLayout lay;
  lay.num_users = layers.num_users;
  lay.num_antennas = num_antennas;
  lay.num_subcarriers = num_subcarriers;
  lay.num_layers = layers.num_layers();
  lay.num_subs = layers.num_subs();
  lay.params = params;
  for (int k = 0; k < layers.num_users; ++k) {
    lay.aux_base.push_back(lay.aux);
    const std::uint32_t limit = 1u << layers.layers_of_user[k].size();
    for (std::uint32_t mask = 1; mask < limit; ++mask) {
      lay.aux_user.push_back(k);
      lay.aux_mask.push_back(mask);
      ++lay.aux;
    }
  }
  return lay;
}

namespace {

// Layers in the aux position's decodable subset, as layer indices.
std::vector<int> subset_layers(const LayerStructure& layers, const SubproblemLayout& lay, int a) {
  std::vector<int> out;
  const auto& mine = layers.layers_of_user[lay.aux_user[a]];
  for (std::size_t p = 0; p < mine.size(); ++p)
    if ((lay.aux_mask[a] >> p) & 1u) out.push_back(mine[p]);
  return out;
}

std::vector<int> interference_layers(const LayerStructure& layers, int user) {
  std::vector<int> out;
  for (int li = 0; li < layers.num_layers(); ++li)
    if (!layers.layers[li].contains(user)) out.push_back(li);
  return out;
}

// Append the 2M linear coefficients of Re{conj(beta) h^H w} on the layer's
// real/imag beam segment, scaled by `scale`.
void append_cross_terms(std::vector<ConvexProgram::LinearTerm>& linear, int offset,
                        const Eigen::VectorXcd& h, std::complex<double> beta, double scale,
                        int M) {
  for (int m = 0; m < M; ++m) {
    const double re_coeff = beta.real() * h[m].real() - beta.imag() * h[m].imag();
    const double im_coeff = beta.real() * h[m].imag() + beta.imag() * h[m].real();
    if (re_coeff != 0.0) linear.push_back({offset + m, scale * re_coeff});
    if (im_coeff != 0.0) linear.push_back({offset + M + m, scale * im_coeff});
  }
}

void append_abs2_factors(std::vector<ConvexProgram::QuadFactor>& factors, int offset,
                         const Eigen::VectorXcd& h, int M) {
  // |h^H w|^2 = (Re h^H w)^2 + (Im h^H w)^2 over the [Re w; Im w] layout.
  Eigen::VectorXd r(2 * M), s(2 * M);
  r.head(M) = h.real();
  r.tail(M) = h.imag();
  s.head(M) = -h.imag();
  s.tail(M) = h.real();
  factors.push_back({std::move(r), offset, 1.0});
  factors.push_back({std::move(s), offset, 1.0});
}

}  // namespace

Subproblem build_subproblem(const LayerStructure& layers, const ChannelState& ch,
                            const Eigen::VectorXd& weights, const SystemParams& params,
                            const SolutionState& prev) {
  if (ch.num_users != layers.num_users)
    throw std::invalid_argument("build_subproblem: channel/layer user mismatch");
  if (weights.size() != static_cast<int>(layers.groups.size()))
    throw std::invalid_argument("build_subproblem: weight vector mismatch");
  Subproblem sp;
  sp.layout = make_layout(layers, ch.num_antennas, ch.num_subcarriers, params);
  const SubproblemLayout& lay = sp.layout;
  const int M = lay.num_antennas, N = lay.num_subcarriers, AUX = lay.aux;
  const double sigma2 = params.noise_power;

  ConvexProgram& p = sp.program;
  p.dim = lay.dim();
  p.c = Eigen::VectorXd::Zero(p.dim);
  for (int j = 0; j < lay.num_subs; ++j)
    p.c[lay.r_index(j)] = weights[layers.sub_index[j].group];

  // Coupling rows: each subset's rate total equals the sum of its shares.
  std::vector<Eigen::Triplet<double>> trips;
  for (int a = 0; a < AUX; ++a) {
    for (int li : subset_layers(layers, lay, a))
      for (int j : layers.subs_of_layer[li]) trips.emplace_back(a, lay.r_index(j), 1.0);
    for (int n = 0; n < N; ++n) trips.emplace_back(a, lay.e_index(n, a), -1.0);
  }
  p.A.resize(AUX, p.dim);
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.b = Eigen::VectorXd::Zero(AUX);

  // Majorized decoding rows, ordered subcarrier-major over aux positions.
  p.quads.reserve(static_cast<std::size_t>(N) * AUX);
  for (int n = 0; n < N; ++n) {
    for (int a = 0; a < AUX; ++a) {
      const int k = lay.aux_user[a];
      const Eigen::VectorXcd h = ch.col(k, n);
      const auto xset = subset_layers(layers, lay, a);
      const auto iset = interference_layers(layers, k);
      const double u_prev = std::max(prev.sinr_bounds[n * AUX + a], kMinSinrBound);

      double sig_prev = 0, int_prev = 0;
      ConvexProgram::QuadRow row;
      for (int li : iset) append_abs2_factors(row.factors, lay.w_offset(n, li), h, M);
      for (int li : xset) {
        const std::complex<double> beta = h.dot(prev.beams.w.at(n).col(li));
        sig_prev += std::norm(beta);
        append_cross_terms(row.linear, lay.w_offset(n, li), h, beta, -2.0 / u_prev, M);
      }
      for (int li : iset) {
        const std::complex<double> beta = h.dot(prev.beams.w.at(n).col(li));
        int_prev += std::norm(beta);
        append_cross_terms(row.linear, lay.w_offset(n, li), h, beta, -2.0 / u_prev, M);
      }
      const double phi_prev = sig_prev + int_prev + sigma2;
      row.linear.push_back({lay.u_index(n, a), phi_prev / (u_prev * u_prev)});
      row.constant = sigma2 * (1.0 - 2.0 / u_prev);
      p.quads.push_back(std::move(row));
    }
  }

  p.exps.reserve(static_cast<std::size_t>(N) * AUX);
  for (int n = 0; n < N; ++n)
    for (int a = 0; a < AUX; ++a)
      p.exps.push_back({lay.e_index(n, a), lay.u_index(n, a), params.bandwidth});

  p.ball = ConvexProgram::Ball{0, 2 * M * lay.num_layers * N, params.power_budget};

  for (int j = 0; j < lay.num_subs; ++j) p.bounds.push_back({lay.r_index(j), 0.0});

  // Block tags: subcarrier blocks plus a rate block; only the power ball and
  // the coupling rows tie blocks together.
  p.group_of.assign(p.dim, N);
  for (int n = 0; n < N; ++n) {
    for (int l = 0; l < lay.num_layers; ++l)
      for (int i = 0; i < 2 * M; ++i) p.group_of[lay.w_offset(n, l) + i] = n;
    for (int a = 0; a < AUX; ++a) {
      p.group_of[lay.e_index(n, a)] = n;
      p.group_of[lay.u_index(n, a)] = n;
    }
  }
  return sp;
}

double decoding_constraint(const Subproblem& sp, const LayerStructure& layers,
                           const ChannelState& ch, const Eigen::VectorXd& x, int n, int a) {
  const SubproblemLayout& lay = sp.layout;
  const int k = lay.aux_user[a];
  const int M = lay.num_antennas;
  const Eigen::VectorXcd h = ch.col(k, n);
  auto abs2 = [&](int li) {
    const int off = lay.w_offset(n, li);
    const std::complex<double> v(h.real().dot(x.segment(off, M)) + h.imag().dot(x.segment(off + M, M)),
                                 h.real().dot(x.segment(off + M, M)) - h.imag().dot(x.segment(off, M)));
    return std::norm(v);
  };
  double sig = 0, intf = 0;
  for (int li : subset_layers(layers, lay, a)) sig += abs2(li);
  for (int li : interference_layers(layers, k)) intf += abs2(li);
  const double sigma2 = lay.params.noise_power;
  const double u = x[lay.u_index(n, a)];
  return intf + sigma2 - (sig + intf + sigma2) / u;
}

double majorant_value(const Subproblem& sp, const Eigen::VectorXd& x, int n, int a) {
  return eval_quad(sp.program.quads.at(static_cast<std::size_t>(n) * sp.layout.aux + a), x);
}

bool interior_start(const Subproblem& sp, const Eigen::VectorXd& warm, Eigen::VectorXd& x0) {
  const SubproblemLayout& lay = sp.layout;
  const ConvexProgram& p = sp.program;
  const int N = lay.num_subcarriers, AUX = lay.aux;
  const double B = lay.params.bandwidth;
  x0 = warm;

  // Keep the beams strictly inside the power ball.
  const double used = x0.head(p.ball->length).squaredNorm();
  const double cap = p.ball->radius_sq * (1.0 - 1e-7);
  if (used > cap) x0.head(p.ball->length) *= std::sqrt(cap / used);

  // Linear-in-u decomposition of each majorized row at the fixed beams:
  // row(u) = base + slope * u, with slope > 0.
  Eigen::MatrixXd base(N, AUX), slope(N, AUX);
  for (int n = 0; n < N; ++n)
    for (int a = 0; a < AUX; ++a) {
      const auto& row = p.quads[static_cast<std::size_t>(n) * AUX + a];
      const double s = row.linear.back().coeff;  // u term appended last
      slope(n, a) = s;
      base(n, a) = eval_quad(row, x0) - s * x0[lay.u_index(n, a)];
    }

  // Per-aux corridor capacity at the fixed beams: cap_e = B log2(hi) per
  // carrier, hi the row's u-intercept.  Beams do not move below, so this is
  // ladder-independent; a non-positive intercept means no interior exists.
  Eigen::MatrixXd cap_e(N, AUX);
  Eigen::VectorXd capsum = Eigen::VectorXd::Zero(AUX);
  for (int a = 0; a < AUX; ++a)
    for (int n = 0; n < N; ++n) {
      const double hi = slope(n, a) > 0 ? -base(n, a) / slope(n, a) : 0.0;
      if (!(hi > 0)) return false;
      cap_e(n, a) = B * std::log2(hi);
      capsum[a] += cap_e(n, a);
    }

  // Cap each rate by its thinnest coupling row: no aux may be asked to carry
  // more than half its capacity, however the ladder scales the warm rates.
  // Near-dead layers (capacity orders below the nominal floor) then start
  // degenerate-but-valid instead of sinking the whole embedding.
  Eigen::VectorXi nvars = Eigen::VectorXi::Zero(AUX);
  for (int j = 0; j < lay.num_subs; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, lay.r_index(j)); it; ++it)
      ++nvars[it.row()];
  Eigen::VectorXd rate_cap = Eigen::VectorXd::Constant(lay.num_subs, 1e300);
  for (int j = 0; j < lay.num_subs; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, lay.r_index(j)); it; ++it)
      rate_cap[j] =
          std::min(rate_cap[j], 0.5 * std::max(capsum[it.row()], 0.0) / nvars[it.row()]);

  const double floor_rate = 1e-3 * B;   // nominal positivity for live layers
  const double floor_abs = 1e-14 * B;   // strict positivity even when capped away
  for (double tau : {0.9, 0.7, 0.4, 0.1, 0.01, 1e-3, 1e-5}) {
    bool ok = true;
    // Candidate rates and shares.
    Eigen::VectorXd r0(lay.num_subs);
    for (int j = 0; j < lay.num_subs; ++j)
      r0[j] =
          tau * std::min(std::max(warm[lay.r_index(j)], 0.0) + floor_rate, rate_cap[j]) +
          floor_abs;
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(AUX);
    for (int j = 0; j < lay.num_subs; ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, lay.r_index(j)); it; ++it)
        rowsum[it.row()] += r0[j];

    Eigen::MatrixXd e0(N, AUX), u0(N, AUX);
    for (int a = 0; a < AUX && ok; ++a) {
      // Load every carrier of the aux to an equal ratio below its row's
      // u-intercept: e0 = B log2(hi) - shift, with one shift making the
      // coupling row exact.  Equal log-slack maximizes the thinnest margin
      // (a dead layer's corridor can demand u below one, i.e. negative e),
      // and is a capacity-shaped split across carriers besides.
      const double shift = (capsum[a] - rowsum[a]) / N;
      if (!(shift > 0 && shift * N > 1e-3 * capsum[a])) {
        if (std::getenv("GMRS_START_DEBUG"))
          std::fprintf(stderr, "[start] tau=%.2e a=%d capsum=%.6e rowsum=%.6e\n", tau, a,
                       capsum[a], rowsum[a]);
        ok = false;
        break;
      }
      for (int n = 0; n < N; ++n) {
        e0(n, a) = cap_e(n, a) - shift;
        u0(n, a) = std::exp2((2.0 * cap_e(n, a) - shift) / (2.0 * B));  // geomean of corridor
      }
    }
    if (!ok) continue;
    for (int j = 0; j < lay.num_subs; ++j) x0[lay.r_index(j)] = r0[j];
    for (int n = 0; n < N; ++n)
      for (int a = 0; a < AUX; ++a) {
        x0[lay.e_index(n, a)] = e0(n, a);
        x0[lay.u_index(n, a)] = u0(n, a);
      }
    return true;
  }
  return false;
}

SolutionState lift_to_state(const LayerStructure& layers, const ChannelState& ch,
                            const SystemParams& params, const BeamformerSet& beams,
                            const Eigen::VectorXd& sub_rates) {
  const SubproblemLayout lay = make_layout(layers, ch.num_antennas, ch.num_subcarriers, params);
  if (sub_rates.size() != lay.num_subs)
    throw std::invalid_argument("lift_to_state: rate vector mismatch");
  const int N = lay.num_subcarriers, AUX = lay.aux;
  SolutionState s;
  s.beams = beams;
  s.beams.params = params;
  s.sub_rates = sub_rates.cwiseMax(0.0);
  s.rate_shares.resize(N * AUX);
  s.sinr_bounds.resize(N * AUX);
  const double B = params.bandwidth, sigma2 = params.noise_power;

  for (int a = 0; a < AUX; ++a) {
    const int k = lay.aux_user[a];
    const auto xset = subset_layers(layers, lay, a);
    const auto iset = interference_layers(layers, k);
    double rowsum = 0;
    for (int li : xset)
      for (int j : layers.subs_of_layer[li]) rowsum += s.sub_rates[j];
    Eigen::VectorXd cap(N);
    double total_cap = 0;
    for (int n = 0; n < N; ++n) {
      const Eigen::VectorXcd h = ch.col(k, n);
      double sig = 0, intf = 0;
      for (int li : xset) sig += std::norm(h.dot(beams.w.at(n).col(li)));
      for (int li : iset) intf += std::norm(h.dot(beams.w.at(n).col(li)));
      cap[n] = B * std::log2(1.0 + sig / (intf + sigma2));
      total_cap += cap[n];
    }
    if (rowsum > total_cap + 1e-6 * (1.0 + total_cap))
      throw std::invalid_argument("lift_to_state: rates exceed the region for user " +
                                  std::to_string(k) + " (excess " +
                                  std::to_string(rowsum - total_cap) + ")");
    const double deficit = std::max(total_cap - rowsum, 0.0) / N;
    for (int n = 0; n < N; ++n) {
      const double e = cap[n] - deficit;
      s.rate_shares[n * AUX + a] = e;
      s.sinr_bounds[n * AUX + a] = std::exp2(e / B);
    }
  }
  return s;
}

}  // namespace gmrs
