#include "rissim/metasensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rissim::metasensing {

namespace {

double center_wavelength(const channel::Scene& scene) {
  return kSpeedOfLight / scene.subcarriers.center_frequency;
}

ris::RisConfig all_zero_config(const channel::Scene& scene) {
  if (!scene.panel) throw std::invalid_argument("metasensing: scene has no panel");
  return ris::RisConfig{std::vector<int>(scene.panel->group_count(), 0)};
}

// Coherence with zero-column candidates scored worst instead of rejected;
// search internals only.
double guarded_coherence(const Eigen::MatrixXcd& gamma) {
  for (Eigen::Index q = 0; q < gamma.cols(); ++q)
    if (gamma.col(q).norm() == 0.0) return 1.0;
  return mutual_coherence(gamma);
}

}  // namespace

void PostureLibrary::validate() const {
  if (postures.empty()) throw std::invalid_argument("PostureLibrary: empty");
  const int n = size();
  if (cost.rows() != n || cost.cols() != n)
    throw std::invalid_argument("PostureLibrary: cost matrix shape mismatch");
  double prior_sum = 0.0;
  const Eigen::Index q = postures.front().reflectivity.size();
  for (const auto& p : postures) {
    if (p.prior < 0.0) throw std::invalid_argument("PostureLibrary: negative prior");
    if (p.reflectivity.size() != q)
      throw std::invalid_argument("PostureLibrary: reflectivity length mismatch");
    prior_sum += p.prior;
  }
  if (std::abs(prior_sum - 1.0) > 1e-9)
    throw std::invalid_argument("PostureLibrary: priors must sum to 1");
  for (int i = 0; i < n; ++i) {
    if (cost(i, i) != 0.0) throw std::invalid_argument("PostureLibrary: cost diagonal must be 0");
    for (int j = 0; j < n; ++j)
      if (cost(i, j) < 0.0) throw std::invalid_argument("PostureLibrary: negative cost");
  }
}

Eigen::MatrixXd PostureLibrary::zero_one_cost(int n) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(n, n);
  c.diagonal().setZero();
  return c;
}

Eigen::MatrixXcd measurement_matrix(const channel::Scene& scene, const FrameSchedule& schedule) {
  if (!scene.panel) throw std::invalid_argument("measurement_matrix: scene has no panel");
  return measurement_matrix(scene, schedule,
                            channel::TwoBounceTable(scene, center_wavelength(scene)));
}

Eigen::MatrixXcd measurement_matrix(const channel::Scene& scene, const FrameSchedule& schedule,
                                    const channel::TwoBounceTable& table) {
  if (!scene.panel) throw std::invalid_argument("measurement_matrix: scene has no panel");
  const auto default_resp = ris::expand_config(*scene.panel, schedule.default_config);
  const Eigen::RowVectorXcd default_gains = table.block_gains(default_resp);

  Eigen::MatrixXcd gamma(schedule.frames(), scene.soi.block_count());
  for (int f = 0; f < schedule.frames(); ++f) {
    const auto resp = ris::expand_config(*scene.panel, schedule.configs[f]);
    gamma.row(f) = table.block_gains(resp) - default_gains;
  }
  return gamma;
}

Eigen::VectorXcd measurement_vector(const Eigen::VectorXcd& y_frames, cd y0) {
  return y_frames - Eigen::VectorXcd::Constant(y_frames.size(), y0);
}

double mutual_coherence(const Eigen::MatrixXcd& gamma) {
  const Eigen::Index q_count = gamma.cols();
  if (q_count < 2) throw std::invalid_argument("mutual_coherence: need at least two columns");
  std::vector<double> norms(q_count);
  for (Eigen::Index q = 0; q < q_count; ++q) {
    norms[q] = gamma.col(q).norm();
    if (norms[q] == 0.0) throw std::invalid_argument("mutual_coherence: zero column");
  }
  double acc = 0.0;
  for (Eigen::Index a = 0; a < q_count; ++a)
    for (Eigen::Index b = 0; b < q_count; ++b) {
      if (a == b) continue;
      acc += std::abs(gamma.col(a).dot(gamma.col(b))) / (norms[a] * norms[b]);
    }
  return acc / (static_cast<double>(q_count) * static_cast<double>(q_count - 1));
}

ScheduleSearchResult optimize_schedule_coherence(const channel::Scene& scene, int frames,
                                                 int budget, Rng& rng) {
  if (budget < 1) throw std::invalid_argument("optimize_schedule_coherence: budget must be >= 1");
  const auto& panel = *scene.panel;
  const int groups = panel.group_count();
  const int k = panel.codebook().size();

  ScheduleSearchResult result;
  result.objective = std::numeric_limits<double>::infinity();
  const channel::TwoBounceTable table(scene, center_wavelength(scene));

  const auto evaluate = [&](const FrameSchedule& s) {
    const double v = guarded_coherence(measurement_matrix(scene, s, table));
    ++result.evaluations;
    if (v < result.objective) {
      result.objective = v;
      result.schedule = s;
    }
    result.best_trace.push_back(result.objective);
    return v;
  };

  while (result.evaluations < budget) {
    FrameSchedule current;
    current.default_config = all_zero_config(scene);
    current.configs.reserve(frames);
    for (int f = 0; f < frames; ++f)
      current.configs.push_back(ris::random_config(groups, panel.codebook(), rng));
    double current_value = evaluate(current);
    if (result.evaluations >= budget) break;

    bool improved = true;
    while (improved && result.evaluations < budget) {
      improved = false;
      for (int f = 0; f < frames && result.evaluations < budget; ++f) {
        for (int g = 0; g < groups && result.evaluations < budget; ++g) {
          const int original = current.configs[f].states[g];
          int best_state = original;
          double best_value = current_value;
          for (int s = 0; s < k && result.evaluations < budget; ++s) {
            if (s == original) continue;
            current.configs[f].states[g] = s;
            const double v = evaluate(current);
            if (v < best_value) {
              best_value = v;
              best_state = s;
            }
          }
          current.configs[f].states[g] = best_state;
          if (best_value < current_value) {
            current_value = best_value;
            improved = true;
          }
        }
      }
    }
  }
  return result;
}

int map_classify(const Eigen::VectorXcd& y_hat, const Eigen::MatrixXcd& gamma,
                 const PostureLibrary& library, double noise_power, cd x) {
  library.validate();
  const int n = library.size();
  std::vector<double> sq_dist(n);
  for (int i = 0; i < n; ++i)
    sq_dist[i] = (y_hat - gamma * library.postures[i].reflectivity * x).squaredNorm();

  // Posterior-proportional weights under the CN(mean, 2 sigma^2 I) model.
  std::vector<double> weight(n, 0.0);
  if (noise_power > 0.0) {
    double max_exp = -std::numeric_limits<double>::infinity();
    std::vector<double> log_w(n);
    for (int i = 0; i < n; ++i) {
      const double lp = library.postures[i].prior > 0.0
                            ? std::log(library.postures[i].prior)
                            : -std::numeric_limits<double>::infinity();
      log_w[i] = lp - sq_dist[i] / (2.0 * noise_power);
      max_exp = std::max(max_exp, log_w[i]);
    }
    for (int i = 0; i < n; ++i) weight[i] = std::exp(log_w[i] - max_exp);
  } else {
    const double d_min = *std::min_element(sq_dist.begin(), sq_dist.end());
    for (int i = 0; i < n; ++i)
      if (sq_dist[i] <= d_min * (1.0 + 1e-12) + 1e-300)
        weight[i] = library.postures[i].prior;
  }

  int best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int decided = 0; decided < n; ++decided) {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += weight[i] * library.cost(i, decided);
    if (c < best_cost) {
      best_cost = c;
      best = decided;
    }
  }
  return best;
}

CostEstimate avg_cost(const DecisionRule& rule, const PostureLibrary& library,
                      const Eigen::MatrixXcd& gamma, double noise_power, cd x, int trials,
                      Rng& rng) {
  library.validate();
  if (trials < 1) throw std::invalid_argument("avg_cost: trials must be >= 1");
  const int n = library.size();
  std::vector<Eigen::VectorXcd> means(n);
  for (int i = 0; i < n; ++i) means[i] = gamma * library.postures[i].reflectivity * x;

  double acc = 0.0;
  double acc2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    // Draw the true posture from the priors.
    const double u = rng.uniform();
    int truth = n - 1;
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
      cum += library.postures[i].prior;
      if (u < cum) {
        truth = i;
        break;
      }
    }
    Eigen::VectorXcd y_hat = means[truth];
    if (noise_power > 0.0)
      for (Eigen::Index f = 0; f < y_hat.size(); ++f)
        y_hat(f) += rng.complex_normal(2.0 * noise_power);
    const double c = library.cost(truth, rule(y_hat));
    acc += c;
    acc2 += c * c;
  }
  CostEstimate est;
  est.mean = acc / trials;
  const double var = std::max(0.0, acc2 / trials - est.mean * est.mean);
  est.std_error = std::sqrt(var / trials);
  return est;
}

Eigen::VectorXd reconstruct_occupancy(const Eigen::VectorXcd& y_hat,
                                      const Eigen::MatrixXcd& gamma, cd x,
                                      const OccupancyMapping& mapping) {
  if (x == cd(0.0, 0.0)) throw std::invalid_argument("reconstruct_occupancy: zero probe symbol");
  const Eigen::Index q_count = gamma.cols();
  const Eigen::MatrixXcd gram = gamma.adjoint() * gamma;
  const double epsilon =
      std::max(mapping.ridge_scale * gram.real().trace() / static_cast<double>(q_count), 1e-30);
  const Eigen::MatrixXcd reg =
      gram + epsilon * Eigen::MatrixXcd::Identity(q_count, q_count);
  const Eigen::VectorXcd nu_hat = reg.ldlt().solve(gamma.adjoint() * (y_hat / x));

  Eigen::VectorXd p(q_count);
  for (Eigen::Index q = 0; q < q_count; ++q)
    p(q) = 1.0 / (1.0 + std::exp(-(std::abs(nu_hat(q)) - mapping.threshold) / mapping.scale));
  return p;
}

double cross_entropy(const Eigen::VectorXd& p_hat, const Eigen::VectorXcd& nu_truth) {
  if (p_hat.size() != nu_truth.size())
    throw std::invalid_argument("cross_entropy: length mismatch");
  constexpr double kClip = 1e-9;
  double acc = 0.0;
  for (Eigen::Index q = 0; q < p_hat.size(); ++q) {
    const double p = std::clamp(p_hat(q), kClip, 1.0 - kClip);
    const bool occupied = std::abs(nu_truth(q)) > 0.0;
    acc -= occupied ? std::log(p) : std::log(1.0 - p);
  }
  return acc;
}

ScheduleSearchResult greedy_config_search(const channel::Scene& scene, int frames,
                                          const ScheduleLoss& eval, int budget, Rng& rng) {
  if (budget < 1) throw std::invalid_argument("greedy_config_search: budget must be >= 1");
  const auto& panel = *scene.panel;
  const int groups = panel.group_count();
  const int k = panel.codebook().size();

  ScheduleSearchResult result;
  result.objective = std::numeric_limits<double>::infinity();

  const auto evaluate = [&](const FrameSchedule& s) {
    const double v = eval(s);
    ++result.evaluations;
    if (v < result.objective) {
      result.objective = v;
      result.schedule = s;
    }
    result.best_trace.push_back(result.objective);
    return v;
  };

  FrameSchedule current;
  current.default_config = all_zero_config(scene);
  for (int f = 0; f < frames; ++f)
    current.configs.push_back(ris::random_config(groups, panel.codebook(), rng));
  double current_value = evaluate(current);

  // Visit decisions frame-major, group-minor; each action is scored on the
  // terminal schedule with every later decision frozen at its current value.
  for (int f = 0; f < frames && result.evaluations < budget && k > 1; ++f) {
    for (int g = 0; g < groups && result.evaluations < budget; ++g) {
      const int original = current.configs[f].states[g];
      int best_state = original;
      double best_value = current_value;
      for (int s = 0; s < k && result.evaluations < budget; ++s) {
        if (s == original) continue;
        current.configs[f].states[g] = s;
        const double v = evaluate(current);
        if (v < best_value) {
          best_value = v;
          best_state = s;
        }
      }
      current.configs[f].states[g] = best_state;
      current_value = best_value;
    }
  }
  return result;
}

Eigen::VectorXcd simulate_cycle(const channel::Scene& scene, const FrameSchedule& schedule,
                                const Eigen::VectorXcd& reflectivity, cd x, double noise_power,
                                Rng& rng) {
  if (!scene.panel) throw std::invalid_argument("simulate_cycle: scene has no panel");
  if (reflectivity.size() != scene.soi.block_count())
    throw std::invalid_argument("simulate_cycle: reflectivity length must equal block count");
  const double lambda = center_wavelength(scene);
  const channel::TwoBounceTable table(scene, lambda);
  const cd h_los = channel::los_gain(distance(scene.tx.position, scene.rx.position),
                                     scene.tx.gain, scene.rx.gain, lambda);
  // One scattering draw per cycle; the calibration subtraction cancels it
  // exactly along with the LoS term. The panel-to-Rx specular bounce is taken
  // to miss the receiver in the sensing geometry, so the frame differences
  // stay linear in the block reflectivities.
  const cd h_sc = channel::scatter_gain(scene, rng);

  const auto frame_signal = [&](const ris::RisConfig& config) {
    const auto resp = ris::expand_config(*scene.panel, config);
    const cd gain = h_los + (table.block_gains(resp) * reflectivity)(0, 0) + h_sc;
    cd w(0.0, 0.0);
    if (noise_power > 0.0) w = rng.complex_normal(noise_power);
    return gain * x + w;
  };

  const cd y0 = frame_signal(schedule.default_config);
  Eigen::VectorXcd y(schedule.frames());
  for (int f = 0; f < schedule.frames(); ++f) y(f) = frame_signal(schedule.configs[f]);
  return measurement_vector(y, y0);
}

}  // namespace rissim::metasensing
