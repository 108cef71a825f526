#include "rissim/metalocalization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rissim::metalocalization {

RadioMap build_radio_map(const channel::Scene& scene, const ris::RisConfig& config) {
  RadioMap map;
  map.rss_db.resize(scene.soi.block_count());
  channel::Scene probe = scene;
  for (int q = 0; q < scene.soi.block_count(); ++q) {
    probe.rx.position = scene.soi.block_center(q);
    const auto h = channel::channel_gains(probe, &config);
    double acc = 0.0;
    for (const cd& v : h) acc += std::norm(v);
    map.rss_db[q] = 10.0 * std::log10(acc / static_cast<double>(h.size()));
  }
  return map;
}

Eigen::MatrixXd mislocalization_weights(const channel::SoiGrid& soi) {
  const int q_count = soi.block_count();
  Eigen::MatrixXd w(q_count, q_count);
  for (int a = 0; a < q_count; ++a)
    for (int b = 0; b < q_count; ++b)
      w(a, b) = distance(soi.block_center(a), soi.block_center(b));
  return w;
}

DecisionRule::DecisionRule(RadioMap map, Eigen::VectorXd prior, Eigen::MatrixXd weights,
                           double sigma)
    : map_(std::move(map)), prior_(std::move(prior)), weights_(std::move(weights)), sigma_(sigma) {
  const int q_count = map_.block_count();
  if (prior_.size() != q_count || weights_.rows() != q_count || weights_.cols() != q_count)
    throw std::invalid_argument("DecisionRule: prior/weight shape mismatch");
  if (sigma_ < 0.0) throw std::invalid_argument("DecisionRule: negative sigma");
}

int DecisionRule::block_for(double s) const {
  const int q_count = map_.block_count();
  // Gaussian evidence per candidate true block, max-shifted for stability.
  Eigen::VectorXd evidence(q_count);
  if (sigma_ > 0.0) {
    double min_sq = std::numeric_limits<double>::infinity();
    for (int q = 0; q < q_count; ++q) {
      const double d = s - map_.rss_db[q];
      evidence(q) = d * d;
      min_sq = std::min(min_sq, evidence(q));
    }
    for (int q = 0; q < q_count; ++q)
      evidence(q) = std::exp(-(evidence(q) - min_sq) / (2.0 * sigma_ * sigma_));
  } else {
    double best = std::numeric_limits<double>::infinity();
    for (int q = 0; q < q_count; ++q) best = std::min(best, std::abs(s - map_.rss_db[q]));
    for (int q = 0; q < q_count; ++q)
      evidence(q) = std::abs(s - map_.rss_db[q]) <= best + 1e-12 ? 1.0 : 0.0;
  }

  int best_q = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int cand = 0; cand < q_count; ++cand) {
    double cost = 0.0;
    for (int q = 0; q < q_count; ++q) cost += prior_(q) * evidence(q) * weights_(q, cand);
    if (cost < best_cost) {
      best_cost = cost;
      best_q = cand;
    }
  }
  return best_q;
}

DecisionRule optimal_rule(const RadioMap& map, const Eigen::VectorXd& prior,
                          const Eigen::MatrixXd& weights, double sigma) {
  return DecisionRule(map, prior, weights, sigma);
}

LossEstimate localization_loss(const RadioMap& map, const LocalizationRule& rule,
                               const Eigen::VectorXd& prior, const Eigen::MatrixXd& weights,
                               double sigma, int samples, Rng& rng) {
  if (samples < 1) throw std::invalid_argument("localization_loss: samples must be >= 1");
  const int q_count = map.block_count();
  double acc = 0.0;
  double acc2 = 0.0;
  for (int t = 0; t < samples; ++t) {
    const double u = rng.uniform();
    int truth = q_count - 1;
    double cum = 0.0;
    for (int q = 0; q < q_count; ++q) {
      cum += prior(q);
      if (u < cum) {
        truth = q;
        break;
      }
    }
    double s = map.rss_db[truth];
    if (sigma > 0.0) s += rng.normal(0.0, sigma);
    const double cost = weights(truth, rule(s));
    acc += cost;
    acc2 += cost * cost;
  }
  LossEstimate est;
  est.mean = acc / samples;
  const double var = std::max(0.0, acc2 / samples - est.mean * est.mean);
  est.std_error = std::sqrt(var / samples);
  return est;
}

double expected_loss(const RadioMap& map, const LocalizationRule& rule,
                     const Eigen::VectorXd& prior, const Eigen::MatrixXd& weights, double sigma,
                     int quad_points) {
  const int q_count = map.block_count();
  if (sigma == 0.0) {
    double loss = 0.0;
    for (int q = 0; q < q_count; ++q) loss += prior(q) * weights(q, rule(map.rss_db[q]));
    return loss;
  }
  const double lo = *std::min_element(map.rss_db.begin(), map.rss_db.end()) - 6.0 * sigma;
  const double hi = *std::max_element(map.rss_db.begin(), map.rss_db.end()) + 6.0 * sigma;
  const double ds = (hi - lo) / (quad_points - 1);
  const double norm = 1.0 / (sigma * std::sqrt(kTwoPi));
  double loss = 0.0;
  for (int k = 0; k < quad_points; ++k) {
    const double s = lo + k * ds;
    const int decided = rule(s);
    double density_weighted = 0.0;
    for (int q = 0; q < q_count; ++q) {
      const double d = (s - map.rss_db[q]) / sigma;
      density_weighted += prior(q) * weights(q, decided) * std::exp(-0.5 * d * d);
    }
    const double trapezoid = (k == 0 || k == quad_points - 1) ? 0.5 : 1.0;
    loss += trapezoid * density_weighted * norm * ds;
  }
  return loss;
}

namespace {

ris::RisConfig default_config(const channel::Scene& scene) {
  if (!scene.panel) throw std::invalid_argument("metalocalization: scene has no panel");
  return ris::RisConfig{std::vector<int>(scene.panel->group_count(), 0)};
}

}  // namespace

ConfigSearchResult select_config(const channel::Scene& scene,
                                 const std::vector<Eigen::VectorXd>& user_priors,
                                 const Eigen::MatrixXd& weights, double sigma, Scheme scheme,
                                 int budget, Rng& rng, const AnnealOptions& anneal) {
  if (user_priors.empty()) throw std::invalid_argument("select_config: no users");
  const auto& panel = *scene.panel;
  const int groups = panel.group_count();

  ConfigSearchResult result;
  result.loss = std::numeric_limits<double>::infinity();

  const auto evaluate = [&](const ris::RisConfig& config) {
    const RadioMap map = build_radio_map(scene, config);
    double loss = 0.0;
    for (const auto& prior : user_priors) {
      const DecisionRule rule = optimal_rule(map, prior, weights, sigma);
      loss += expected_loss(map, rule, prior, weights, sigma);
    }
    ++result.evaluations;
    if (loss < result.loss) {
      result.loss = loss;
      result.config = config;
    }
    return loss;
  };

  switch (scheme) {
    case Scheme::kFixed:
      evaluate(default_config(scene));
      break;
    case Scheme::kRandom:
      evaluate(ris::random_config(groups, panel.codebook(), rng));
      break;
    case Scheme::kGreedy: {
      if (budget < 1) throw std::invalid_argument("select_config: budget must be >= 1");
      while (result.evaluations < budget) {
        ris::RisConfig current = ris::random_config(groups, panel.codebook(), rng);
        double current_loss = evaluate(current);
        bool improved = true;
        while (improved && result.evaluations < budget) {
          improved = false;
          for (const auto& n : ris::neighbor_configs(current, panel.codebook())) {
            if (result.evaluations >= budget) break;
            const double v = evaluate(n);
            if (v < current_loss) {
              current = n;
              current_loss = v;
              improved = true;
            }
          }
        }
      }
      break;
    }
    case Scheme::kSimAnneal: {
      if (budget < 1) throw std::invalid_argument("select_config: budget must be >= 1");
      ris::RisConfig current = ris::random_config(groups, panel.codebook(), rng);
      double current_loss = evaluate(current);
      // Geometric cooling sized to the loss scale of the first candidate
      // unless the caller pinned the temperature.
      double temperature = anneal.initial_temperature >= 0.0
                               ? anneal.initial_temperature
                               : std::max(current_loss * 0.1, 1e-9);
      const double cooling = anneal.cooling;
      while (result.evaluations < budget) {
        ris::RisConfig next = current;
        const int g = rng.uniform_int(groups);
        int s = rng.uniform_int(panel.codebook().size() - 1);
        if (s >= next.states[g]) ++s;  // uniform over the other states
        next.states[g] = s;
        const double v = evaluate(next);
        const double delta = v - current_loss;
        if (delta < 0.0 || (temperature > 0.0 && rng.uniform() < std::exp(-delta / temperature))) {
          current = next;
          current_loss = v;
        }
        temperature *= cooling;
      }
      break;
    }
  }
  return result;
}

Eigen::VectorXd cycle_update(const Eigen::VectorXd& prior, double s, const RadioMap& map,
                             double sigma) {
  const int q_count = map.block_count();
  if (prior.size() != q_count) throw std::invalid_argument("cycle_update: prior length mismatch");
  if (sigma < 0.0) throw std::invalid_argument("cycle_update: sigma must be nonnegative");
  if (std::isinf(sigma)) return prior;  // uninformative measurement
  if (sigma == 0.0) {
    // Degenerate likelihood: mass survives only on exact map matches.
    double best = std::numeric_limits<double>::infinity();
    for (int q = 0; q < q_count; ++q) best = std::min(best, std::abs(s - map.rss_db[q]));
    Eigen::VectorXd post = Eigen::VectorXd::Zero(q_count);
    double sum = 0.0;
    for (int q = 0; q < q_count; ++q) {
      if (std::abs(s - map.rss_db[q]) <= best + 1e-12) post(q) = prior(q);
      sum += post(q);
    }
    if (sum <= 0.0) throw std::domain_error("cycle_update: numerical underflow");
    return post / sum;
  }

  Eigen::VectorXd log_post(q_count);
  double max_lp = -std::numeric_limits<double>::infinity();
  for (int q = 0; q < q_count; ++q) {
    const double d = (s - map.rss_db[q]) / sigma;
    log_post(q) = prior(q) > 0.0 ? std::log(prior(q)) - 0.5 * d * d
                                 : -std::numeric_limits<double>::infinity();
    max_lp = std::max(max_lp, log_post(q));
  }
  if (!std::isfinite(max_lp)) throw std::domain_error("cycle_update: numerical underflow");
  Eigen::VectorXd post(q_count);
  double denom = 0.0;
  for (int q = 0; q < q_count; ++q) denom += std::exp(log_post(q) - max_lp);
  for (int q = 0; q < q_count; ++q) post(q) = std::exp(log_post(q) - max_lp) / denom;
  return post;
}

LocalizeTrace localize_run(const channel::Scene& scene, const std::vector<int>& user_blocks,
                           int cycles, Scheme scheme, int budget, double sigma, Rng& rng) {
  const int q_count = scene.soi.block_count();
  for (const int q : user_blocks)
    if (q < 0 || q >= q_count) throw std::invalid_argument("localize_run: user block out of range");
  const Eigen::MatrixXd weights = mislocalization_weights(scene.soi);
  const int users = static_cast<int>(user_blocks.size());

  std::vector<Eigen::VectorXd> priors(users, Eigen::VectorXd::Constant(q_count, 1.0 / q_count));
  LocalizeTrace trace;

  for (int c = 0; c < cycles; ++c) {
    Rng cycle_rng = rng.fork(static_cast<std::uint64_t>(c));
    Rng select_rng = cycle_rng.fork("select");
    const ConfigSearchResult selected =
        select_config(scene, priors, weights, sigma, scheme, budget, select_rng);
    const RadioMap map = build_radio_map(scene, selected.config);

    Rng measure_rng = cycle_rng.fork("measure");
    double err_sum = 0.0;
    std::vector<int> estimates(users);
    for (int i = 0; i < users; ++i) {
      double s = map.rss_db[user_blocks[i]];
      if (sigma > 0.0) s += measure_rng.normal(0.0, sigma);
      const DecisionRule rule = optimal_rule(map, priors[i], weights, sigma);
      estimates[i] = rule(s);
      err_sum += weights(user_blocks[i], estimates[i]);
      priors[i] = cycle_update(priors[i], s, map, sigma);
    }
    trace.mean_error.push_back(err_sum / users);
    trace.estimated_blocks.push_back(std::move(estimates));
  }
  return trace;
}

}  // namespace rissim::metalocalization
