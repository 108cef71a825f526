#ifndef RISSIM_METALOCALIZATION_HPP
#define RISSIM_METALOCALIZATION_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/common.hpp"
#include "rissim/ris.hpp"
#include "rissim/rng.hpp"

namespace rissim::metalocalization {

/// Expected RSS (dB) per space block under one panel configuration,
/// evaluated noise-free at every block center.
struct RadioMap {
  std::vector<double> rss_db;

  int block_count() const { return static_cast<int>(rss_db.size()); }
};

RadioMap build_radio_map(const channel::Scene& scene, const ris::RisConfig& config);

/// Pairwise Euclidean distances between block centers: the mislocalization
/// weight gamma[q][q'].
Eigen::MatrixXd mislocalization_weights(const channel::SoiGrid& soi);

using LocalizationRule = std::function<int(double)>;

/// Loss-minimizing estimator for a scalar RSS measurement: returns
/// argmin_{q'} sum_q prior_q * gamma[q][q'] * N(s; map_q, sigma^2); ties break
/// to the lowest block index. sigma = 0 degenerates to exact map matching.
class DecisionRule {
 public:
  DecisionRule(RadioMap map, Eigen::VectorXd prior, Eigen::MatrixXd weights, double sigma);

  int block_for(double s) const;
  int operator()(double s) const { return block_for(s); }

 private:
  RadioMap map_;
  Eigen::VectorXd prior_;
  Eigen::MatrixXd weights_;
  double sigma_;
};

DecisionRule optimal_rule(const RadioMap& map, const Eigen::VectorXd& prior,
                          const Eigen::MatrixXd& weights, double sigma);

struct LossEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo expected mislocalization distance of a rule: draw the true
/// block from the prior, draw the RSS around the map value, score the
/// decision by the block-distance weight.
LossEstimate localization_loss(const RadioMap& map, const LocalizationRule& rule,
                               const Eigen::VectorXd& prior, const Eigen::MatrixXd& weights,
                               double sigma, int samples, Rng& rng);

/// Deterministic quadrature counterpart of localization_loss; used as the
/// search objective so configuration selection is reproducible.
double expected_loss(const RadioMap& map, const LocalizationRule& rule,
                     const Eigen::VectorXd& prior, const Eigen::MatrixXd& weights, double sigma,
                     int quad_points = 481);

enum class Scheme { kFixed, kRandom, kGreedy, kSimAnneal };

struct ConfigSearchResult {
  ris::RisConfig config;
  double loss = 0.0;
  int evaluations = 0;
};

struct AnnealOptions {
  double initial_temperature = -1.0;  // < 0: sized from the first candidate's loss
  double cooling = 0.92;
};

/// Per-cycle configuration choice. fixed returns the all-zero default;
/// random draws uniformly; greedy runs multi-start neighbor descent on the
/// summed per-user expected loss; sim_anneal runs geometric-cooling annealing
/// on the same objective (temperature zero degenerates to pure descent).
/// Search schemes return the best evaluated configuration.
ConfigSearchResult select_config(const channel::Scene& scene,
                                 const std::vector<Eigen::VectorXd>& user_priors,
                                 const Eigen::MatrixXd& weights, double sigma, Scheme scheme,
                                 int budget, Rng& rng, const AnnealOptions& anneal = {});

/// Bayes filtering of a static user's block prior against one RSS
/// measurement; computed in log space.
Eigen::VectorXd cycle_update(const Eigen::VectorXd& prior, double s, const RadioMap& map,
                             double sigma);

struct LocalizeTrace {
  std::vector<double> mean_error;                 // per cycle, meters
  std::vector<std::vector<int>> estimated_blocks; // per cycle per user
};

/// Full localization loop: configuration selection, map generation, per-user
/// single-tone measurement, loss-optimal estimation, prior refinement.
LocalizeTrace localize_run(const channel::Scene& scene, const std::vector<int>& user_blocks,
                           int cycles, Scheme scheme, int budget, double sigma, Rng& rng);

}  // namespace rissim::metalocalization

#endif  // RISSIM_METALOCALIZATION_HPP
