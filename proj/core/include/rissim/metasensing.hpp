#ifndef RISSIM_METASENSING_HPP
#define RISSIM_METASENSING_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/common.hpp"
#include "rissim/ris.hpp"
#include "rissim/rng.hpp"

namespace rissim::metasensing {

/// Per-cycle frame plan: the configuration applied in each data-collection
/// frame plus the calibration default.
struct FrameSchedule {
  std::vector<ris::RisConfig> configs;  // one per frame
  ris::RisConfig default_config;

  int frames() const { return static_cast<int>(configs.size()); }
};

/// One recognizable object state: block reflectivities, prior mass, and the
/// per-decision cost row chi[label][decided].
struct Posture {
  std::string label;
  Eigen::VectorXcd reflectivity;  // length Q
  double prior = 0.0;
};

struct PostureLibrary {
  std::vector<Posture> postures;
  Eigen::MatrixXd cost;  // chi[i][i'], zero diagonal, nonnegative

  int size() const { return static_cast<int>(postures.size()); }
  void validate() const;

  /// 0-1 cost matrix (cost 1 for every wrong label).
  static Eigen::MatrixXd zero_one_cost(int n);
};

/// F x Q difference-gain matrix: row f holds, per block, the panel-summed
/// cascade gain under configs[f] minus the gain under the default
/// configuration, at unit block reflectivity. The second form reuses a
/// prebuilt geometry table across evaluations.
Eigen::MatrixXcd measurement_matrix(const channel::Scene& scene, const FrameSchedule& schedule);
Eigen::MatrixXcd measurement_matrix(const channel::Scene& scene, const FrameSchedule& schedule,
                                    const channel::TwoBounceTable& table);

/// Frame-wise differences against the calibration record y0.
Eigen::VectorXcd measurement_vector(const Eigen::VectorXcd& y_frames, cd y0);

/// Mean absolute normalized inner product over ordered column pairs,
/// conjugate-transposed so the value stays in [0, 1]. Rejects zero columns.
double mutual_coherence(const Eigen::MatrixXcd& gamma);

struct ScheduleSearchResult {
  FrameSchedule schedule;
  double objective = 0.0;
  std::vector<double> best_trace;  // best-so-far after each evaluation
  int evaluations = 0;
};

/// Greedy coordinate descent with random restarts minimizing the mutual
/// coherence of the schedule's measurement matrix. Deterministic given the
/// stream; never returns a schedule worse than any evaluated candidate.
ScheduleSearchResult optimize_schedule_coherence(const channel::Scene& scene, int frames,
                                                 int budget, Rng& rng);

/// Bayes decision rule minimizing the expected recognition cost under the
/// Gaussian measurement model with per-entry variance 2*sigma^2:
/// argmin_{i'} sum_i p_i chi[i][i'] N(y_hat; Gamma nu_i x, 2 sigma^2 I).
/// Ties break to the lowest index; sigma^2 = 0 degenerates to the
/// nearest-mean weighting.
int map_classify(const Eigen::VectorXcd& y_hat, const Eigen::MatrixXcd& gamma,
                 const PostureLibrary& library, double noise_power, cd x);

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

using DecisionRule = std::function<int(const Eigen::VectorXcd&)>;

/// Monte Carlo estimate of the average recognition cost of an arbitrary rule
/// under the library's priors and the 2*sigma^2 Gaussian measurement model.
CostEstimate avg_cost(const DecisionRule& rule, const PostureLibrary& library,
                      const Eigen::MatrixXcd& gamma, double noise_power, cd x, int trials,
                      Rng& rng);

struct OccupancyMapping {
  double ridge_scale = 1e-6;  // epsilon = ridge_scale * trace(G^H G) / Q
  double threshold = 0.5;     // |nu_hat| level mapped to p = 0.5
  double scale = 0.5 / 6.0;   // logistic softness
};

/// Ridge least-squares block reflectivity estimate squashed to per-block
/// occupancy probabilities: p_q = logistic((|nu_hat_q| - threshold)/scale).
Eigen::VectorXd reconstruct_occupancy(const Eigen::VectorXcd& y_hat,
                                      const Eigen::MatrixXcd& gamma, cd x,
                                      const OccupancyMapping& mapping = {});

/// Binary cross-entropy between estimated occupancy probabilities and the
/// support of the true reflectivity vector, with estimates clipped to
/// [1e-9, 1 - 1e-9].
double cross_entropy(const Eigen::VectorXd& p_hat, const Eigen::VectorXcd& nu_truth);

using ScheduleLoss = std::function<double(const FrameSchedule&)>;

/// Greedy traversal of the frame-major, group-minor decision sequence: at
/// each (frame, group) state every codebook action is scored by evaluating
/// the terminal schedule with the remainder frozen, and the best is kept.
/// Returns the best evaluated schedule within the budget.
ScheduleSearchResult greedy_config_search(const channel::Scene& scene, int frames,
                                          const ScheduleLoss& eval, int budget, Rng& rng);

/// Simulate one sensing cycle: calibration record under the default
/// configuration followed by F frames, all sharing one frozen scattering
/// draw. Returns the measurement vector y - y0.
Eigen::VectorXcd simulate_cycle(const channel::Scene& scene, const FrameSchedule& schedule,
                                const Eigen::VectorXcd& reflectivity, cd x, double noise_power,
                                Rng& rng);

}  // namespace rissim::metasensing

#endif  // RISSIM_METASENSING_HPP
