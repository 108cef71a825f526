#ifndef RISSIM_METRICS_HPP
#define RISSIM_METRICS_HPP

#include <span>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/common.hpp"
#include "rissim/rng.hpp"

namespace rissim::metrics {

/// Log-distance path loss in dB: P_T - 10*alpha*log10(d) + N(0, sigma^2).
double rss_logdistance(double p_t_db, double alpha, double d, double sigma_db, Rng& rng);

/// Mean received power in dB: 10*log10(mean |y_n|^2). All-zero input gives -inf.
double rss_of(std::span<const cd> y);

struct TofEstimate {
  double tau = 0.0;              // seconds
  double peak_to_leakage = 0.0;  // peak power over mean off-peak power
  bool resolved = true;
};

/// Delay-spectrum peak estimator over the deconvolved per-subcarrier channel
/// H_n = y_n / x_n. Scans |sum_n H_n e^{+j2pi n spacing tau}| on a grid of
/// N*oversample delays in [0, 1/spacing) and returns the peak with its
/// peak-to-leakage score; a flat spectrum is reported unresolved.
TofEstimate tof_estimate_ofdm(std::span<const cd> y, std::span<const cd> x,
                              const channel::SubcarrierGrid& grid, int oversample = 16);

/// Dechirped-FMCW delay: tau = f_d / eta for chirp slope eta (Hz/s).
double fmcw_tof(double f_d, double eta);

/// Dominant discrete-spectrum frequency (Hz, absolute value) of a dechirped
/// signal sampled at fs.
double fmcw_beat(std::span<const cd> mixed, double fs);

/// Forward Doppler model: 2 v cos(phi) f / c.
double doppler_shift(double v, double phi, double f);

/// Dominant signed slow-time frequency in (-prf/2, prf/2].
double doppler_estimate(std::span<const cd> slow_time, double prf);

/// Bearing of u as seen from anchor a, plus Gaussian noise.
double aoa_geometric(const Vec2& u, const Vec2& a, double sigma_aoa, Rng& rng);

struct BearingMeasurement {
  Vec2 anchor;
  double aoa = 0.0;  // radians
};

/// Least-squares intersection of bearing lines; needs >= 2 anchors with
/// nonparallel bearings.
Vec2 triangulate_aoa(std::span<const BearingMeasurement> measurements);

/// Beamscan AoA over the ULA steering model: argmax_theta |a(theta)^H y| on a
/// uniform grid over (-pi/2, pi/2). Angular resolution is roughly
/// lambda / (V * spacing) radians.
double beamscan_aoa(const Eigen::VectorXcd& snapshot, double spacing, double lambda,
                    int grid_points = 2048);

}  // namespace rissim::metrics

#endif  // RISSIM_METRICS_HPP
