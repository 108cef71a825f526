#include "rissim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rissim::metrics {

namespace {

// In-place radix-2 FFT; n must be a power of two.
void fft_radix2(std::vector<cd>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -kTwoPi / static_cast<double>(len);
    const cd wlen = std::polar(1.0, ang);
    for (std::size_t i = 0; i < n; i += len) {
      cd w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Index of the largest-magnitude bin after zero-padding to a power of two.
std::size_t dominant_bin(std::span<const cd> samples, std::size_t& n_fft_out) {
  std::vector<cd> buf(samples.begin(), samples.end());
  buf.resize(next_pow2(buf.size()), cd(0.0, 0.0));
  fft_radix2(buf);
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t k = 0; k < buf.size(); ++k) {
    const double m = std::norm(buf[k]);
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  n_fft_out = buf.size();
  return best;
}

}  // namespace

double rss_logdistance(double p_t_db, double alpha, double d, double sigma_db, Rng& rng) {
  if (d <= 0.0) throw std::invalid_argument("rss_logdistance: distance must be positive");
  double p = p_t_db - 10.0 * alpha * std::log10(d);
  if (sigma_db > 0.0) p += rng.normal(0.0, sigma_db);
  return p;
}

double rss_of(std::span<const cd> y) {
  if (y.empty()) throw std::invalid_argument("rss_of: empty input");
  double acc = 0.0;
  for (const cd& v : y) acc += std::norm(v);
  acc /= static_cast<double>(y.size());
  if (acc == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(acc);
}

TofEstimate tof_estimate_ofdm(std::span<const cd> y, std::span<const cd> x,
                              const channel::SubcarrierGrid& grid, int oversample) {
  if (y.size() != x.size() || y.empty())
    throw std::invalid_argument("tof_estimate_ofdm: y and x must be nonempty and equal length");
  if (static_cast<int>(y.size()) != grid.count)
    throw std::invalid_argument("tof_estimate_ofdm: input length must equal subcarrier count");
  if (grid.spacing <= 0.0)
    throw std::invalid_argument("tof_estimate_ofdm: need positive subcarrier spacing");
  if (oversample < 1) throw std::invalid_argument("tof_estimate_ofdm: oversample must be >= 1");

  const int n = grid.count;
  std::vector<cd> h(n);
  for (int i = 0; i < n; ++i) {
    if (x[i] == cd(0.0, 0.0)) throw std::invalid_argument("tof_estimate_ofdm: zero pilot symbol");
    h[i] = y[i] / x[i];
  }

  const int grid_points = n * oversample;
  const double step = 1.0 / (grid.spacing * grid_points);
  std::vector<double> spectrum(grid_points);
  double best = -1.0;
  int best_k = 0;
  for (int k = 0; k < grid_points; ++k) {
    const double tau = k * step;
    cd acc(0.0, 0.0);
    for (int i = 0; i < n; ++i) acc += h[i] * std::polar(1.0, kTwoPi * i * grid.spacing * tau);
    spectrum[k] = std::norm(acc);
    if (spectrum[k] > best) {
      best = spectrum[k];
      best_k = k;
    }
  }

  // Leakage floor: mean power outside the main lobe (one non-oversampled
  // delay bin around the peak, circularly).
  double off_peak = 0.0;
  int off_count = 0;
  for (int k = 0; k < grid_points; ++k) {
    int d = std::abs(k - best_k);
    d = std::min(d, grid_points - d);
    if (d > oversample) {
      off_peak += spectrum[k];
      ++off_count;
    }
  }
  TofEstimate est;
  est.tau = best_k * step;
  est.peak_to_leakage =
      off_count > 0 && off_peak > 0.0 ? best / (off_peak / off_count)
                                      : std::numeric_limits<double>::infinity();
  est.resolved = est.peak_to_leakage > 4.0;
  return est;
}

double fmcw_tof(double f_d, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("fmcw_tof: chirp slope must be positive");
  if (f_d < 0.0) throw std::invalid_argument("fmcw_tof: beat frequency must be nonnegative");
  return f_d / eta;
}

double fmcw_beat(std::span<const cd> mixed, double fs) {
  if (mixed.empty()) throw std::invalid_argument("fmcw_beat: empty input");
  if (fs <= 0.0) throw std::invalid_argument("fmcw_beat: sample rate must be positive");
  std::size_t n_fft = 0;
  const std::size_t k = dominant_bin(mixed, n_fft);
  // Beat tones live below Nyquist; fold the two-sided index.
  const double signed_k =
      k <= n_fft / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n_fft);
  return std::abs(signed_k) * fs / static_cast<double>(n_fft);
}

double doppler_shift(double v, double phi, double f) {
  return 2.0 * v * std::cos(phi) * f / kSpeedOfLight;
}

double doppler_estimate(std::span<const cd> slow_time, double prf) {
  if (slow_time.empty()) throw std::invalid_argument("doppler_estimate: empty input");
  if (prf <= 0.0) throw std::invalid_argument("doppler_estimate: prf must be positive");
  std::size_t n_fft = 0;
  const std::size_t k = dominant_bin(slow_time, n_fft);
  const double signed_k =
      k <= n_fft / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n_fft);
  const double f = signed_k * prf / static_cast<double>(n_fft);
  if (std::abs(f) > prf / 2.0)
    throw std::domain_error("doppler_estimate: aliased estimate");
  return f;
}

double aoa_geometric(const Vec2& u, const Vec2& a, double sigma_aoa, Rng& rng) {
  if (u.x == a.x && u.y == a.y)
    throw std::invalid_argument("aoa_geometric: coincident points");
  double phi = std::atan2(u.y - a.y, u.x - a.x);
  if (sigma_aoa > 0.0) phi += rng.normal(0.0, sigma_aoa);
  return phi;
}

Vec2 triangulate_aoa(std::span<const BearingMeasurement> measurements) {
  if (measurements.size() < 2)
    throw std::invalid_argument("triangulate_aoa: need at least two anchors");
  // Minimize sum of squared distances to the bearing lines:
  // sum_i (I - d_i d_i^T) u = sum_i (I - d_i d_i^T) a_i.
  Eigen::Matrix2d lhs = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  for (const auto& m : measurements) {
    const Eigen::Vector2d d(std::cos(m.aoa), std::sin(m.aoa));
    const Eigen::Matrix2d proj = Eigen::Matrix2d::Identity() - d * d.transpose();
    lhs += proj;
    rhs += proj * Eigen::Vector2d(m.anchor.x, m.anchor.y);
  }
  const double det = lhs.determinant();
  if (std::abs(det) < 1e-12 * (1.0 + lhs.norm() * lhs.norm()))
    throw std::domain_error("triangulate_aoa: degenerate geometry (parallel bearings)");
  const Eigen::Vector2d u = lhs.inverse() * rhs;
  return {u(0), u(1)};
}

double beamscan_aoa(const Eigen::VectorXcd& snapshot, double spacing, double lambda,
                    int grid_points) {
  if (snapshot.size() < 2) throw std::invalid_argument("beamscan_aoa: need >= 2 antennas");
  double best = -1.0;
  double best_theta = 0.0;
  for (int k = 0; k < grid_points; ++k) {
    const double theta = -kPi / 2.0 + kPi * (k + 0.5) / grid_points;
    const Eigen::VectorXcd a =
        channel::ula_steering(static_cast<int>(snapshot.size()), spacing, theta, lambda);
    const double mag = std::abs(a.dot(snapshot));
    if (mag > best) {
      best = mag;
      best_theta = theta;
    }
  }
  return best_theta;
}

}  // namespace rissim::metrics
