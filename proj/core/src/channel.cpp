#include "rissim/channel.hpp"

#include <cmath>

namespace rissim::channel {

cd los_gain(double d_los, double g_t, double g_r, double lambda) {
  if (d_los <= 0.0) throw std::invalid_argument("los_gain: distance must be positive");
  if (lambda <= 0.0) throw std::invalid_argument("los_gain: wavelength must be positive");
  const double amp = lambda / (4.0 * kPi) * std::sqrt(g_t * g_r) / d_los;
  return std::polar(amp, -kTwoPi * d_los / lambda);
}

cd ris_path_gain(double d_t, double d_r, cd gamma, double g_t, double g_r, double lambda) {
  if (d_t <= 0.0 || d_r <= 0.0) throw std::invalid_argument("ris_path_gain: distances must be positive");
  if (lambda <= 0.0) throw std::invalid_argument("ris_path_gain: wavelength must be positive");
  const double amp = lambda * std::sqrt(g_t * g_r) / (8.0 * std::pow(kPi, 1.5) * d_t * d_r);
  return amp * gamma * std::polar(1.0, -kTwoPi * (d_t + d_r) / lambda);
}

namespace {

// Tx -> element -> block -> Rx; one more scattering hop than ris_path_gain,
// so one more 1/(sqrt(4pi) d) factor: lambda sqrt(gT gR) / ((4pi)^2 d1 d2 d3).
cd cascade_gain(double d1, double d2, double d3, cd gamma, cd nu, double g_t, double g_r,
                double lambda) {
  if (d1 <= 0.0 || d2 <= 0.0 || d3 <= 0.0)
    throw std::invalid_argument("two_bounce_gain: degenerate geometry (zero segment)");
  const double four_pi = 4.0 * kPi;
  const double amp = lambda * std::sqrt(g_t * g_r) / (four_pi * four_pi * d1 * d2 * d3);
  return amp * gamma * nu * std::polar(1.0, -kTwoPi * (d1 + d2 + d3) / lambda);
}

}  // namespace

cd two_bounce_gain(const Scene& scene, int element, int block, cd nu,
                   const ris::RisConfig& config, double lambda) {
  if (!scene.panel) throw std::invalid_argument("two_bounce_gain: scene has no panel");
  const auto responses = ris::expand_config(*scene.panel, config);
  const Vec3 p = scene.panel->element_position(element);
  const Vec3 b = scene.soi.block_center(block);
  const double d1 = distance(scene.tx.position, p);
  const double d2 = distance(p, b);
  const double d3 = distance(b, scene.rx.position);
  return cascade_gain(d1, d2, d3, responses[element], nu, scene.tx.gain, scene.rx.gain, lambda);
}

cd scatter_gain(const Scene& scene, Rng& rng) {
  if (scene.scatter_variance < 0.0)
    throw std::invalid_argument("scatter_gain: variance must be nonnegative");
  if (scene.scatter_variance == 0.0) return {0.0, 0.0};
  return rng.complex_normal(scene.scatter_variance);
}

TwoBounceTable::TwoBounceTable(const Scene& scene, double lambda) {
  if (!scene.panel) throw std::invalid_argument("TwoBounceTable: scene has no panel");
  const int m_count = scene.panel->element_count();
  const int q_count = scene.soi.block_count();
  base_.resize(m_count, q_count);
  for (int m = 0; m < m_count; ++m) {
    const Vec3 p = scene.panel->element_position(m);
    const double d1 = distance(scene.tx.position, p);
    for (int q = 0; q < q_count; ++q) {
      const Vec3 b = scene.soi.block_center(q);
      const double d2 = distance(p, b);
      const double d3 = distance(b, scene.rx.position);
      base_(m, q) =
          cascade_gain(d1, d2, d3, cd(1.0, 0.0), cd(1.0, 0.0), scene.tx.gain, scene.rx.gain, lambda);
    }
  }
}

Eigen::RowVectorXcd TwoBounceTable::block_gains(std::span<const cd> element_responses) const {
  if (static_cast<Eigen::Index>(element_responses.size()) != base_.rows())
    throw std::invalid_argument("TwoBounceTable: response length must equal element count");
  Eigen::Map<const Eigen::VectorXcd> r(element_responses.data(), base_.rows());
  return r.transpose() * base_;
}

std::vector<cd> channel_gains(const Scene& scene, const ris::RisConfig* config,
                              const Composition& parts) {
  const int n_sub = scene.subcarriers.count;
  if (!parts.occupancy.empty() &&
      static_cast<int>(parts.occupancy.size()) != scene.soi.block_count())
    throw std::invalid_argument("channel_gains: occupancy length must equal block count");
  if (!parts.scatter_draws.empty() && static_cast<int>(parts.scatter_draws.size()) != n_sub)
    throw std::invalid_argument("channel_gains: need one scatter draw per subcarrier");

  std::vector<cd> responses;
  if (scene.panel && config) responses = ris::expand_config(*scene.panel, *config);

  const double d_los = distance(scene.tx.position, scene.rx.position);
  std::vector<cd> h(n_sub, cd(0.0, 0.0));
  for (int n = 0; n < n_sub; ++n) {
    const double lambda = scene.subcarriers.wavelength(n);
    cd sum(0.0, 0.0);
    if (parts.los) sum += los_gain(d_los, scene.tx.gain, scene.rx.gain, lambda);
    if (parts.ris_reflect && !responses.empty()) {
      for (int m = 0; m < scene.panel->element_count(); ++m) {
        const Vec3 p = scene.panel->element_position(m);
        sum += ris_path_gain(distance(scene.tx.position, p), distance(p, scene.rx.position),
                             responses[m], scene.tx.gain, scene.rx.gain, lambda);
      }
    }
    if (!parts.occupancy.empty() && !responses.empty()) {
      const TwoBounceTable table(scene, lambda);
      Eigen::Map<const Eigen::VectorXcd> nu(parts.occupancy.data(), scene.soi.block_count());
      sum += (table.block_gains(responses) * nu)(0, 0);
    }
    if (!parts.scatter_draws.empty()) sum += parts.scatter_draws[n];
    h[n] = sum;
  }
  return h;
}

std::vector<cd> received_symbol(const Scene& scene, const ris::RisConfig* config,
                                std::span<const cd> x, double noise_power, Rng& rng,
                                const Composition& parts) {
  if (static_cast<int>(x.size()) != scene.subcarriers.count)
    throw std::invalid_argument("received_symbol: symbol length must equal subcarrier count");
  if (noise_power < 0.0) throw std::invalid_argument("received_symbol: negative noise power");
  const auto h = channel_gains(scene, config, parts);
  std::vector<cd> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    cd w(0.0, 0.0);
    if (noise_power > 0.0) w = rng.complex_normal(noise_power);
    y[n] = h[n] * x[n] + w;
  }
  return y;
}

Eigen::VectorXcd ula_steering(int antenna_count, double spacing, double aoa, double lambda) {
  Eigen::VectorXcd a(antenna_count);
  const double s = std::sin(aoa);
  for (int v = 0; v < antenna_count; ++v) {
    const double offset = (v - (antenna_count - 1) / 2.0) * spacing;
    a(v) = std::polar(1.0, -kTwoPi * offset * s / lambda);
  }
  return a;
}

}  // namespace rissim::channel
