#ifndef RISSIM_METARADAR_HPP
#define RISSIM_METARADAR_HPP

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/common.hpp"
#include "rissim/ris.hpp"
#include "rissim/rng.hpp"

namespace rissim::metaradar {

/// Candidate world state: which angular blocks hold a target. Blocks are
/// strictly increasing; the target count is blocks.size().
struct Hypothesis {
  std::vector<int> blocks;

  int target_count() const { return static_cast<int>(blocks.size()); }
  bool operator==(const Hypothesis&) const = default;
};

/// All block combinations for every target count in [r_min, r_max].
std::vector<Hypothesis> enumerate_hypotheses(int r_min, int r_max, int block_count);

/// Collocated MIMO array plus an optional panel in front of it. Targets snap
/// to angular blocks; range information survives only as a sub-carrier-cycle
/// delay phase (narrowband model), so target amplitudes are kept real
/// nonnegative and the ML delay grid spans one carrier period.
struct RadarScene {
  channel::RxArray array;
  std::optional<ris::RisPanel> panel;
  std::vector<double> block_angles;  // bearing of each angular block, radians
  double wavelength = kSpeedOfLight / 3.198e9;
  double noise_power = 1e-2;  // sigma^2 per antenna
  int delay_grid = 16;        // ML grid points over one carrier period

  int block_count() const { return static_cast<int>(block_angles.size()); }
  double carrier_frequency() const { return kSpeedOfLight / wavelength; }
};

/// Per-cycle transmit weights and panel configurations. Transmit and receive
/// configurations may differ.
struct RadarParams {
  Eigen::VectorXcd waveform;  // unit total power
  ris::RisConfig tx_config;
  ris::RisConfig rx_config;
};

RadarParams uniform_params(const RadarScene& scene);

/// Composite steering vector toward bearing `angle`: the far-field ULA
/// response plus, when a panel and configuration are present, the
/// panel-relayed response summed over elements with exact antenna-to-element
/// geometry. Reduces to the plain ULA vector without the panel.
Eigen::VectorXcd composite_steering(const RadarScene& scene, double angle,
                                    const ris::RisConfig* config);

/// Expected array echo under a hypothesis:
/// ybar = sum_r amp_r * v_rx(theta_r) * (v_tx(theta_r)^T w) * e^{-j 2 pi f tau_r}.
Eigen::VectorXcd expected_echo(const RadarScene& scene, const Hypothesis& hyp,
                               std::span<const double> delays, std::span<const double> amplitudes,
                               const RadarParams& params, bool use_ris = true);

struct TargetFit {
  std::vector<double> delays;      // seconds, on the ML grid
  std::vector<double> amplitudes;  // real, nonnegative
  double residual = 0.0;           // sum over cycles of ||y - ybar||^2
  bool identifiable = true;
};

/// Joint grid/least-squares nuisance fit over the full measurement history:
/// delays scanned on the grid, amplitudes solved in closed form (real
/// nonnegative least squares). A rank-deficient steering stack is reported
/// unidentifiable.
TargetFit ml_fit(std::span<const Eigen::VectorXcd> y_history, const Hypothesis& hyp,
                 std::span<const RadarParams> params_history, const RadarScene& scene,
                 bool use_ris = true);

/// Gaussian log-likelihood of the history under the hypothesis with fitted
/// nuisances: -residual / sigma^2 (additive constant dropped).
double log_likelihood(std::span<const Eigen::VectorXcd> y_history, const Hypothesis& hyp,
                      std::span<const RadarParams> params_history, const RadarScene& scene,
                      bool use_ris = true, TargetFit* fit_out = nullptr);

/// Symmetric Gaussian divergence between two expected echoes at equal noise:
/// ||ybar_a - ybar_b||^2 / sigma^2 (both divergence directions summed).
double symmetric_kl(const Eigen::VectorXcd& echo_a, const Eigen::VectorXcd& echo_b,
                    double noise_power);

struct Posterior {
  Eigen::VectorXd p;

  void validate(double tol = 1e-12) const;
  static Posterior uniform(int n);
};

/// Posterior over hypotheses from the fixed initial prior and full-history
/// log-likelihoods, normalized in log space.
Posterior bayes_update(const Posterior& initial_prior, const Eigen::VectorXd& log_likelihoods);

/// Alternating ascent on the posterior-weighted minimum pairwise divergence
/// among the top-ranked hypotheses: normalized-gradient waveform steps and
/// greedy group-wise configuration selection. Accepted steps never lower the
/// objective; with fewer than two live hypotheses the input is returned
/// unchanged.
RadarParams optimize_params(const Posterior& posterior, const std::vector<Hypothesis>& hypotheses,
                            const std::vector<TargetFit>& fits, const RadarScene& scene,
                            const RadarParams& initial, int budget, Rng& rng, int top_p = 4);

enum class Scheme { kOptimized, kRandom, kNoRis };

struct Truth {
  Hypothesis hypothesis;
  std::vector<double> delays;
  std::vector<double> amplitudes;
};

struct DetectResult {
  int chosen = -1;
  Eigen::MatrixXd posterior_trace;       // cycles x hypotheses
  std::vector<double> truth_posterior;   // per cycle
  std::vector<int> correct;              // per cycle, argmax == truth
};

/// Full per-cycle loop: parameter selection per scheme, echo synthesis with
/// noise, per-hypothesis refit over the history, Bayes update. Deterministic
/// given the stream.
DetectResult detect(const RadarScene& scene, const std::vector<Hypothesis>& hypotheses,
                    const Truth& truth, int cycles, int budget, Scheme scheme, Rng& rng);

}  // namespace rissim::metaradar

#endif  // RISSIM_METARADAR_HPP
