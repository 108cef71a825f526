#ifndef RISSIM_CHANNEL_HPP
#define RISSIM_CHANNEL_HPP

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <vector>

#include "rissim/common.hpp"
#include "rissim/ris.hpp"
#include "rissim/rng.hpp"

namespace rissim::channel {

struct Antenna {
  Vec3 position{};
  double gain = 1.0;  // linear
};

/// Uniform linear receive array. `position` is the array reference point;
/// antenna v sits at position + (v - (V-1)/2) * spacing * axis.
struct RxArray {
  Vec3 position{};
  double gain = 1.0;
  int antenna_count = 1;
  double spacing = 0.05;  // m
  Vec3 axis{0.0, 1.0, 0.0};

  Vec3 antenna_position(int v) const {
    return position + axis.normalized() * ((v - (antenna_count - 1) / 2.0) * spacing);
  }
};

/// Axis-aligned space of interest discretized into uniform blocks.
struct SoiGrid {
  Vec3 origin{};            // min corner
  Vec3 side{1.0, 1.0, 1.0};  // box side lengths
  std::array<int, 3> divisions{1, 1, 1};

  int block_count() const { return divisions[0] * divisions[1] * divisions[2]; }
  Vec3 block_size() const {
    return {side.x / divisions[0], side.y / divisions[1], side.z / divisions[2]};
  }
  Vec3 block_center(int q) const {
    const int nx = divisions[0];
    const int ny = divisions[1];
    const int ix = q % nx;
    const int iy = (q / nx) % ny;
    const int iz = q / (nx * ny);
    const Vec3 b = block_size();
    return {origin.x + (ix + 0.5) * b.x, origin.y + (iy + 0.5) * b.y, origin.z + (iz + 0.5) * b.z};
  }
};

/// OFDM subcarrier layout. Subcarrier n (0-based) sits at
/// center_frequency + (n - (N-1)/2) * spacing, each with its own wavelength.
struct SubcarrierGrid {
  int count = 1;
  double center_frequency = 3.198e9;  // Hz
  double spacing = 0.0;               // Hz

  double frequency(int n) const {
    return center_frequency + (n - (count - 1) / 2.0) * spacing;
  }
  double wavelength(int n) const {
    const double f = frequency(n);
    if (f <= 0.0) throw std::domain_error("SubcarrierGrid: nonpositive subcarrier frequency");
    return kSpeedOfLight / f;
  }
};

struct Scene {
  Antenna tx;
  RxArray rx;
  std::optional<ris::RisPanel> panel;
  SoiGrid soi;
  SubcarrierGrid subcarriers;
  double scatter_variance = 0.0;  // variance of the lumped multipath gain
  double noise_power = 0.0;       // sigma^2 of the receiver noise
};

/// Free-space line-of-sight gain: (lambda/4pi) * sqrt(gT*gR) * e^{-j2pi d/lambda} / d.
cd los_gain(double d_los, double g_t, double g_r, double lambda);

/// Single-element reflection path gain:
/// lambda * sqrt(gT*gR) * gamma * e^{-j2pi (dT+dR)/lambda} / (8 pi^{3/2} dT dR).
cd ris_path_gain(double d_t, double d_r, cd gamma, double g_t, double g_r, double lambda);

/// Tx -> element m -> block q -> Rx cascade with block reflectivity nu.
/// Continues the per-hop amplitude pattern of the one-bounce path:
/// lambda * sqrt(gT*gR) * gamma_m * nu / ((4pi)^2 d1 d2 d3), phase over the
/// full path length.
cd two_bounce_gain(const Scene& scene, int element, int block, cd nu,
                   const ris::RisConfig& config, double lambda);

/// Lumped environmental scattering gain: one CN(0, scatter_variance) draw
/// from the given stream. Callers freeze it per cycle by drawing once from a
/// cycle-scoped stream.
cd scatter_gain(const Scene& scene, Rng& rng);

/// Precomputed Tx->element->block->Rx geometry for one wavelength. Row m,
/// column q holds the unit-reflectivity cascade gain of element m via block
/// q, so the panel-summed gain toward occupancy nu is responses^T * B * nu.
class TwoBounceTable {
 public:
  TwoBounceTable(const Scene& scene, double lambda);

  const Eigen::MatrixXcd& base() const { return base_; }

  /// Sum over elements of the cascade gain toward every block, weighted by
  /// the per-element responses: returns the Q-vector responses^T * B.
  Eigen::RowVectorXcd block_gains(std::span<const cd> element_responses) const;

 private:
  Eigen::MatrixXcd base_;  // M x Q
};

/// Which propagation terms to compose into a received symbol.
struct Composition {
  bool los = true;
  bool ris_reflect = true;
  std::span<const cd> occupancy = {};      // per-block reflectivity; enables two-bounce paths
  std::span<const cd> scatter_draws = {};  // frozen per-subcarrier scattering gains
};

/// Per-subcarrier channel gain at the Rx reference point (no symbol, no noise).
std::vector<cd> channel_gains(const Scene& scene, const ris::RisConfig* config,
                              const Composition& parts = {});

/// Received OFDM symbol y_n = h_n x_n + w_n with w_n ~ CN(0, noise_power).
/// `config` may be null when the panel is absent or ignored.
std::vector<cd> received_symbol(const Scene& scene, const ris::RisConfig* config,
                                std::span<const cd> x, double noise_power, Rng& rng,
                                const Composition& parts = {});

/// ULA steering phase for a plane wave from bearing aoa (radians, measured
/// against the array axis normal plane): element v response
/// e^{-j 2 pi spacing (v - (V-1)/2) sin(aoa) / lambda}.
Eigen::VectorXcd ula_steering(int antenna_count, double spacing, double aoa, double lambda);

}  // namespace rissim::channel

#endif  // RISSIM_CHANNEL_HPP
