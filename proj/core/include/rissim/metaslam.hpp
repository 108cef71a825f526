#ifndef RISSIM_METASLAM_HPP
#define RISSIM_METASLAM_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "rissim/common.hpp"
#include "rissim/ris.hpp"
#include "rissim/rng.hpp"

namespace rissim::metaslam {

/// Infinite planar reflector, n.x = offset with |n| = 1.
struct Plane3 {
  Vec3 normal;
  double offset = 0.0;
};

/// Infinite line reflector in the 2D world, n.x = offset with |n| = 1.
struct Line2 {
  Vec2 normal;
  double offset = 0.0;
};

Vec3 mirror(const Vec3& p, const Plane3& plane);
Vec2 mirror(const Vec2& p, const Line2& line);

enum class PathKind { kDirect, kReflector, kScatterer, kScattererReflector };

/// Noise-free synthesized multipath component with its generating geometry.
struct SynthPath {
  PathKind kind = PathKind::kDirect;
  int scatterer = -1;
  int reflector = -1;
  double delay = 0.0;          // seconds
  double aoa = 0.0;            // bearing of the apparent source seen from the Rx
  cd amplitude;
  Vec2 apparent_source;        // VT, scatterer, or VS position
};

/// What the receiver actually reports for one path.
struct PathObservation {
  double delay = 0.0;
  double aoa = 0.0;
  cd amplitude;
  int cycle = 0;
};

/// Path measurement errors scale inversely with path amplitude: a stronger
/// path is timed and resolved more accurately.
struct NoiseModel {
  double sigma_tau = 0.0;       // s at the reference amplitude
  double sigma_aoa = 0.0;       // rad at the reference amplitude
  double sigma_amp = 0.0;       // absolute complex amplitude noise
  double ref_amplitude = 1e-3;
  double max_scale = 100.0;

  double scale(double amp_mag) const;
  double tau_std(double amp_mag) const { return sigma_tau * scale(amp_mag); }
  double aoa_std(double amp_mag) const { return sigma_aoa * scale(amp_mag); }
};

/// Planar room: line reflectors, point scatterers (one may be the RIS,
/// reduced to a point with a group-averaged controllable response), and a
/// two-antenna agent (Tx and Rx at fixed body offsets, no rotation).
struct SlamScene {
  std::vector<Line2> reflectors;
  std::vector<Vec2> scatterers;
  int ris_scatterer = -1;  // index into scatterers, -1 when absent
  ris::PhaseCodebook codebook = ris::table1_codebook();
  int ris_groups = 4;
  // Aperture gain of the panel collapsed to a point: a phase-aligned panel
  // scatters coherently over its elements, so its equivalent coefficient can
  // exceed a unit point scatterer's.
  double ris_aperture_gain = 8.0;
  double wavelength = kSpeedOfLight / 3.198e9;
  double tx_gain = 1.0;
  double rx_gain = 1.0;
  double reflect_coeff = 0.8;
  Vec2 tx_offset{0.15, 0.0};
  Vec2 rx_offset{-0.15, 0.0};
  NoiseModel noise;

  bool has_ris() const { return ris_scatterer >= 0; }
  /// Aperture-scaled group-averaged element response; unit response when the
  /// config is null.
  cd ris_response(const ris::RisConfig* config) const;
  SlamScene without_ris() const;
};

/// All multipath components at one agent pose: the direct Tx-Rx path, one
/// path per reflector (via the mirrored virtual transmitter), one per
/// scatterer, and one per scatterer-reflector pair (via the mirrored virtual
/// scatterer).
std::vector<SynthPath> synthesize_paths(const SlamScene& scene, const Vec2& pose,
                                        const ris::RisConfig* config);

PathObservation measure_path(const SynthPath& path, const NoiseModel& noise, int cycle, Rng& rng);

/// Position-information matrix: sum over paths of the delay and bearing
/// gradient outer products weighted by their inverse noise variances.
Eigen::Matrix2d fisher_information(const SlamScene& scene, const Vec2& pose,
                                   std::span<const SynthPath> paths);

/// Localization error bound trace(J^-1); throws "unlocalizable pose" when the
/// information matrix is singular.
double crlb_trace(const Eigen::Matrix2d& info);

struct CrlbSearchResult {
  ris::RisConfig config;
  double crlb = 0.0;
  std::vector<double> best_trace;
  int evaluations = 0;
};

/// Random-restart neighbor descent minimizing the CRLB of the static-path
/// geometry at the pose estimate.
CrlbSearchResult select_config_crlb(const SlamScene& scene, const Vec2& pose_estimate, int budget,
                                    Rng& rng);

/// Single-linkage clustering of observations on the circular bearing metric;
/// each returned group is a list of observation indices.
std::vector<std::vector<int>> group_paths(std::span<const PathObservation> observations,
                                          double angle_threshold);

/// Invert the two-segment (Tx -> point -> Rx) geometry for one observation;
/// empty when the delay/bearing pair is inconsistent with any such point.
std::optional<Vec2> back_project(const SlamScene& scene, const Vec2& pose, double delay,
                                 double aoa);

struct LandmarkBelief {
  Eigen::VectorXd p;

  void validate(double tol = 1e-12) const;
  static LandmarkBelief uniform(int n);
};

/// Bayes update of "which landmark is the RIS" from per-landmark amplitude
/// magnitudes: candidate i predicts the configured amplitude for landmark i
/// and the neutral amplitude for the rest.
LandmarkBelief ris_landmark_update(const LandmarkBelief& belief,
                                   std::span<const double> amplitudes,
                                   std::span<const double> predicted_configured,
                                   std::span<const double> predicted_neutral, double sigma_amp);

struct Particle {
  Vec2 pose;
  double weight = 0.0;
  std::vector<Vec2> landmark_mean;
  std::vector<Eigen::Matrix2d> landmark_cov;
};

struct ParticleSet {
  std::vector<Particle> particles;
  bool degenerate = false;

  Vec2 mean_pose() const;
  double effective_sample_size() const;
  static ParticleSet initialize(int count, const Vec2& pose);
};

/// One associated static-landmark measurement consumed by the filter.
struct LandmarkObservation {
  int landmark = 0;  // index into the particles' landmark arrays (may extend by one)
  double delay = 0.0;
  double aoa = 0.0;
  double amp_mag = 0.0;
};

/// Rao-Blackwellized step: propagate poses through the motion input plus
/// noise, run per-particle EKF updates of the landmark Gaussians under the
/// two-segment observation model, reweight by the innovation likelihood with
/// per-path inverse-variance weights, and resample systematically when the
/// effective sample size drops below half the particle count.
ParticleSet pf_step(ParticleSet particles, std::span<const LandmarkObservation> observations,
                    const SlamScene& scene, const Vec2& motion, double motion_noise_std, Rng& rng);

enum class Scheme { kProposed, kRandomConfig, kNoRis };

struct SlamTrace {
  std::vector<double> pose_error;        // per cycle, meters
  std::vector<double> ris_belief_truth;  // per cycle; 0 when the RIS is not yet mapped
  std::vector<int> landmarks;            // mapped static landmarks per cycle
};

struct SlamOptions {
  int particles = 500;
  int config_budget = 24;
  double motion_noise_std = 0.0;
  double angle_threshold = 0.35;        // rad, association gate
  double range_gate = 0.75;             // m, mapped-landmark range gate
  double consistency_threshold = 0.30;  // m, static-vs-moving split
  int classify_after = 2;               // sightings before a group can enter the map
};

/// Full per-cycle loop: configuration selection per scheme, path synthesis
/// and measurement, bearing grouping with cross-cycle consistency
/// classification, RIS landmark belief update, particle-filter update.
SlamTrace slam_run(const SlamScene& scene, std::span<const Vec2> trajectory, Scheme scheme,
                   const SlamOptions& options, Rng& rng);

}  // namespace rissim::metaslam

#endif  // RISSIM_METASLAM_HPP
