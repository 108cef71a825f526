#include "rissim/metaradar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rissim::metaradar {

namespace {

void combinations_rec(int block_count, int r, int start, std::vector<int>& picked,
                      std::vector<Hypothesis>& out) {
  if (static_cast<int>(picked.size()) == r) {
    out.push_back(Hypothesis{picked});
    return;
  }
  for (int b = start; b < block_count; ++b) {
    picked.push_back(b);
    combinations_rec(block_count, r, b + 1, picked, out);
    picked.pop_back();
  }
}

// Per-target steering product b_r = v_rx(theta_r) * (v_tx(theta_r)^T w).
Eigen::VectorXcd target_response(const RadarScene& scene, int block, const RadarParams& params,
                                 bool use_ris) {
  const double theta = scene.block_angles.at(block);
  const ris::RisConfig* tx_cfg = use_ris && scene.panel ? &params.tx_config : nullptr;
  const ris::RisConfig* rx_cfg = use_ris && scene.panel ? &params.rx_config : nullptr;
  const Eigen::VectorXcd v_tx = composite_steering(scene, theta, tx_cfg);
  const Eigen::VectorXcd v_rx = composite_steering(scene, theta, rx_cfg);
  const cd illumination = v_tx.transpose() * params.waveform;
  return v_rx * illumination;
}

}  // namespace

std::vector<Hypothesis> enumerate_hypotheses(int r_min, int r_max, int block_count) {
  if (r_min < 0 || r_max < r_min || r_max > block_count)
    throw std::invalid_argument("enumerate_hypotheses: need 0 <= r_min <= r_max <= blocks");
  std::vector<Hypothesis> out;
  std::vector<int> picked;
  for (int r = r_min; r <= r_max; ++r) combinations_rec(block_count, r, 0, picked, out);
  return out;
}

RadarParams uniform_params(const RadarScene& scene) {
  RadarParams p;
  const int v = scene.array.antenna_count;
  p.waveform = Eigen::VectorXcd::Constant(v, cd(1.0 / std::sqrt(static_cast<double>(v)), 0.0));
  const int groups = scene.panel ? scene.panel->group_count() : 0;
  p.tx_config.states.assign(groups, 0);
  p.rx_config.states.assign(groups, 0);
  return p;
}

Eigen::VectorXcd composite_steering(const RadarScene& scene, double angle,
                                    const ris::RisConfig* config) {
  const int v_count = scene.array.antenna_count;
  Eigen::VectorXcd v =
      channel::ula_steering(v_count, scene.array.spacing, angle, scene.wavelength);
  if (!config || !scene.panel) return v;

  const auto responses = ris::expand_config(*scene.panel, *config);
  const Vec3 u{std::cos(angle), std::sin(angle), 0.0};
  const Vec3 center = scene.array.position;
  const double lambda = scene.wavelength;
  for (int a = 0; a < v_count; ++a) {
    const Vec3 q = scene.array.antenna_position(a);
    cd relay(0.0, 0.0);
    for (int m = 0; m < scene.panel->element_count(); ++m) {
      const Vec3 p = scene.panel->element_position(m);
      const double d_am = distance(q, p);
      // Exact antenna-to-element segment, far-field element-to-target segment
      // referenced to the array center; amplitude is the extra-hop factor
      // relative to the direct path.
      const double extra = d_am - (p - center).dot(u);
      const double amp = lambda / (std::sqrt(4.0 * kPi) * d_am);
      relay += responses[m] * amp * std::polar(1.0, -kTwoPi * extra / lambda);
    }
    v(a) += relay;
  }
  return v;
}

Eigen::VectorXcd expected_echo(const RadarScene& scene, const Hypothesis& hyp,
                               std::span<const double> delays, std::span<const double> amplitudes,
                               const RadarParams& params, bool use_ris) {
  if (delays.size() != hyp.blocks.size() || amplitudes.size() != hyp.blocks.size())
    throw std::invalid_argument("expected_echo: per-target delay/amplitude length mismatch");
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(scene.array.antenna_count);
  const double f = scene.carrier_frequency();
  for (std::size_t r = 0; r < hyp.blocks.size(); ++r) {
    const Eigen::VectorXcd b = target_response(scene, hyp.blocks[r], params, use_ris);
    y += amplitudes[r] * std::polar(1.0, -kTwoPi * f * delays[r]) * b;
  }
  return y;
}

TargetFit ml_fit(std::span<const Eigen::VectorXcd> y_history, const Hypothesis& hyp,
                 std::span<const RadarParams> params_history, const RadarScene& scene,
                 bool use_ris) {
  if (y_history.size() != params_history.size())
    throw std::invalid_argument("ml_fit: history length mismatch");
  const int r_count = hyp.target_count();
  const int cycles = static_cast<int>(y_history.size());

  double y_energy = 0.0;
  for (const auto& y : y_history) y_energy += y.squaredNorm();

  TargetFit fit;
  fit.residual = y_energy;
  if (r_count == 0 || cycles == 0) return fit;

  // Precompute steering inner products so each delay tuple costs O(R^2).
  std::vector<std::vector<Eigen::VectorXcd>> b(cycles);  // [cycle][target]
  for (int i = 0; i < cycles; ++i) {
    b[i].reserve(r_count);
    for (int r = 0; r < r_count; ++r)
      b[i].push_back(target_response(scene, hyp.blocks[r], params_history[i], use_ris));
  }
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(r_count, r_count);
  Eigen::VectorXcd corr = Eigen::VectorXcd::Zero(r_count);
  for (int i = 0; i < cycles; ++i)
    for (int r = 0; r < r_count; ++r) {
      corr(r) += b[i][r].dot(y_history[i]);
      for (int s = 0; s < r_count; ++s) gram(r, s) += b[i][r].dot(b[i][s]);
    }

  const double f = scene.carrier_frequency();
  const int g = scene.delay_grid;
  const double tau_step = 1.0 / (f * g);

  // Real nonnegative least squares on the phase-rotated gram system.
  const auto solve_tuple = [&](const std::vector<int>& tuple, Eigen::VectorXd& amps) {
    Eigen::VectorXcd e(r_count);
    for (int r = 0; r < r_count; ++r)
      e(r) = std::polar(1.0, -kTwoPi * f * (tuple[r] * tau_step));
    Eigen::MatrixXd h(r_count, r_count);
    Eigen::VectorXd c(r_count);
    for (int r = 0; r < r_count; ++r) {
      c(r) = (std::conj(e(r)) * corr(r)).real();
      for (int s = 0; s < r_count; ++s) h(r, s) = (std::conj(e(r)) * gram(r, s) * e(s)).real();
    }
    // Active-set projection: drop negative amplitudes and re-solve.
    std::vector<int> active(r_count);
    std::iota(active.begin(), active.end(), 0);
    amps = Eigen::VectorXd::Zero(r_count);
    while (!active.empty()) {
      const int n = static_cast<int>(active.size());
      Eigen::MatrixXd ha(n, n);
      Eigen::VectorXd ca(n);
      for (int r = 0; r < n; ++r) {
        ca(r) = c(active[r]);
        for (int s = 0; s < n; ++s) ha(r, s) = h(active[r], active[s]);
      }
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(ha);
      if (!lu.isInvertible()) return false;
      const Eigen::VectorXd sol = lu.solve(ca);
      int worst = -1;
      double worst_val = 0.0;
      for (int r = 0; r < n; ++r)
        if (sol(r) < worst_val) {
          worst_val = sol(r);
          worst = r;
        }
      if (worst < 0) {
        for (int r = 0; r < n; ++r) amps(active[r]) = sol(r);
        return true;
      }
      active.erase(active.begin() + worst);
    }
    return true;  // all amplitudes clamped to zero
  };

  double best_residual = std::numeric_limits<double>::infinity();
  std::vector<int> best_tuple;
  Eigen::VectorXd best_amps;
  bool any_identifiable = false;

  std::vector<int> tuple(r_count, 0);
  while (true) {
    Eigen::VectorXd amps;
    if (solve_tuple(tuple, amps)) {
      any_identifiable = true;
      // residual = ||y||^2 - 2 a.c + a^T H a with the rotated system.
      Eigen::VectorXcd e(r_count);
      for (int r = 0; r < r_count; ++r)
        e(r) = std::polar(1.0, -kTwoPi * f * (tuple[r] * tau_step));
      double lin = 0.0;
      double quad = 0.0;
      for (int r = 0; r < r_count; ++r) {
        lin += amps(r) * (std::conj(e(r)) * corr(r)).real();
        for (int s = 0; s < r_count; ++s)
          quad += amps(r) * amps(s) * (std::conj(e(r)) * gram(r, s) * e(s)).real();
      }
      const double residual = y_energy - 2.0 * lin + quad;
      if (residual < best_residual) {
        best_residual = residual;
        best_tuple = tuple;
        best_amps = amps;
      }
    }
    int pos = r_count - 1;
    while (pos >= 0 && tuple[pos] == g - 1) tuple[pos--] = 0;
    if (pos < 0) break;
    ++tuple[pos];
  }

  if (!any_identifiable) {
    fit.identifiable = false;
    return fit;
  }
  fit.residual = std::max(0.0, best_residual);
  fit.delays.resize(r_count);
  fit.amplitudes.resize(r_count);
  for (int r = 0; r < r_count; ++r) {
    fit.delays[r] = best_tuple[r] * tau_step;
    fit.amplitudes[r] = best_amps(r);
  }
  return fit;
}

double log_likelihood(std::span<const Eigen::VectorXcd> y_history, const Hypothesis& hyp,
                      std::span<const RadarParams> params_history, const RadarScene& scene,
                      bool use_ris, TargetFit* fit_out) {
  if (scene.noise_power <= 0.0)
    throw std::invalid_argument("log_likelihood: noise power must be positive");
  const TargetFit fit = ml_fit(y_history, hyp, params_history, scene, use_ris);
  if (fit_out) *fit_out = fit;
  return -fit.residual / scene.noise_power;
}

double symmetric_kl(const Eigen::VectorXcd& echo_a, const Eigen::VectorXcd& echo_b,
                    double noise_power) {
  if (noise_power <= 0.0) throw std::invalid_argument("symmetric_kl: noise power must be positive");
  return (echo_a - echo_b).squaredNorm() / noise_power;
}

void Posterior::validate(double tol) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) < 0.0) throw std::domain_error("Posterior: negative mass");
    sum += p(i);
  }
  if (std::abs(sum - 1.0) > tol) throw std::domain_error("Posterior: mass does not sum to 1");
}

Posterior Posterior::uniform(int n) {
  if (n < 1) throw std::invalid_argument("Posterior::uniform: need at least one hypothesis");
  Posterior post;
  post.p = Eigen::VectorXd::Constant(n, 1.0 / n);
  return post;
}

Posterior bayes_update(const Posterior& initial_prior, const Eigen::VectorXd& log_likelihoods) {
  initial_prior.validate();
  if (initial_prior.p.size() != log_likelihoods.size())
    throw std::invalid_argument("bayes_update: size mismatch");
  const Eigen::Index n = log_likelihoods.size();
  Eigen::VectorXd log_post(n);
  double max_lp = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    log_post(i) = initial_prior.p(i) > 0.0
                      ? std::log(initial_prior.p(i)) + log_likelihoods(i)
                      : -std::numeric_limits<double>::infinity();
    max_lp = std::max(max_lp, log_post(i));
  }
  if (!std::isfinite(max_lp)) throw std::domain_error("bayes_update: numerical underflow");
  double denom = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) denom += std::exp(log_post(i) - max_lp);
  Posterior out;
  out.p.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.p(i) = std::exp(log_post(i) - max_lp) / denom;
  return out;
}

namespace {

struct LivePair {
  std::vector<int> indices;   // hypothesis indices entering the objective
  std::vector<double> mass;   // their posterior masses
};

LivePair top_hypotheses(const Posterior& posterior, int top_p) {
  std::vector<int> order(posterior.p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return posterior.p(a) > posterior.p(b); });
  LivePair live;
  for (int idx : order) {
    if (posterior.p(idx) <= 1e-12) break;
    live.indices.push_back(idx);
    live.mass.push_back(posterior.p(idx));
    if (static_cast<int>(live.indices.size()) == top_p) break;
  }
  return live;
}

}  // namespace

RadarParams optimize_params(const Posterior& posterior, const std::vector<Hypothesis>& hypotheses,
                            const std::vector<TargetFit>& fits, const RadarScene& scene,
                            const RadarParams& initial, int budget, Rng& rng, int top_p) {
  if (budget < 1) throw std::invalid_argument("optimize_params: budget must be >= 1");
  posterior.validate();
  const LivePair live = top_hypotheses(posterior, top_p);
  if (live.indices.size() < 2) return initial;

  const auto hyp_echo = [&](int idx, const RadarParams& params) {
    const auto& hyp = hypotheses[idx];
    std::vector<double> delays(hyp.blocks.size(), 0.0);
    std::vector<double> amps(hyp.blocks.size(), 1.0);
    if (idx < static_cast<int>(fits.size()) && fits[idx].identifiable &&
        fits[idx].delays.size() == hyp.blocks.size()) {
      delays = fits[idx].delays;
      amps = fits[idx].amplitudes;
    }
    return expected_echo(scene, hyp, delays, amps, params);
  };

  int evaluations = 0;
  const auto objective = [&](const RadarParams& params) {
    ++evaluations;
    std::vector<Eigen::VectorXcd> echoes(live.indices.size());
    for (std::size_t j = 0; j < live.indices.size(); ++j)
      echoes[j] = hyp_echo(live.indices[j], params);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < echoes.size(); ++a)
      for (std::size_t b = a + 1; b < echoes.size(); ++b) {
        const double d =
            live.mass[a] * live.mass[b] * symmetric_kl(echoes[a], echoes[b], scene.noise_power);
        worst = std::min(worst, d);
      }
    return worst;
  };

  const int v_count = scene.array.antenna_count;
  const int groups = scene.panel ? scene.panel->group_count() : 0;
  const int k = scene.panel ? scene.panel->codebook().size() : 0;

  RadarParams best = initial;
  double best_value = objective(best);

  RadarParams current = best;
  double current_value = best_value;
  const auto keep_best = [&]() {
    if (current_value > best_value) {
      best = current;
      best_value = current_value;
    }
  };

  while (evaluations < budget) {
    bool improved = true;
    while (improved && evaluations < budget) {
      improved = false;

      // Waveform: normalized numerical-gradient ascent with backtracking.
      double step = 0.25;
      for (int iter = 0; iter < 4 && evaluations + 2 * v_count + 1 < budget; ++iter) {
        const double eps = 1e-6;
        Eigen::VectorXcd grad = Eigen::VectorXcd::Zero(v_count);
        for (int a = 0; a < v_count; ++a) {
          RadarParams probe = current;
          probe.waveform(a) += eps;
          probe.waveform.normalize();
          const double d_re = objective(probe) - current_value;
          probe = current;
          probe.waveform(a) += cd(0.0, eps);
          probe.waveform.normalize();
          const double d_im = objective(probe) - current_value;
          grad(a) = cd(d_re / eps, d_im / eps);
        }
        const double g_norm = grad.norm();
        if (g_norm < 1e-9 * (1.0 + std::abs(current_value))) break;
        RadarParams trial = current;
        trial.waveform += (step / g_norm) * grad;
        trial.waveform.normalize();
        const double v = objective(trial);
        if (v > current_value) {
          current = trial;
          current_value = v;
          improved = true;
        } else {
          step *= 0.5;
        }
      }

      // Configurations: greedy group-wise state selection, transmit then
      // receive.
      for (int side = 0; side < 2 && scene.panel; ++side) {
        auto& cfg = side == 0 ? current.tx_config : current.rx_config;
        for (int g = 0; g < groups && evaluations < budget; ++g) {
          const int original = cfg.states[g];
          int best_state = original;
          double local_best = current_value;
          for (int s = 0; s < k && evaluations < budget; ++s) {
            if (s == original) continue;
            cfg.states[g] = s;
            const double v = objective(current);
            if (v > local_best) {
              local_best = v;
              best_state = s;
            }
          }
          cfg.states[g] = best_state;
          if (local_best > current_value) {
            current_value = local_best;
            improved = true;
          }
        }
      }
      keep_best();
    }

    // Ascent converged; restart from a random point with the leftover budget.
    if (evaluations >= budget) break;
    RadarParams restart = current;
    for (int a = 0; a < v_count; ++a) restart.waveform(a) = rng.complex_normal(1.0);
    restart.waveform.normalize();
    if (scene.panel) {
      restart.tx_config = ris::random_config(groups, scene.panel->codebook(), rng);
      restart.rx_config = ris::random_config(groups, scene.panel->codebook(), rng);
    }
    current = restart;
    current_value = objective(current);
    keep_best();
  }
  return best;
}

DetectResult detect(const RadarScene& scene, const std::vector<Hypothesis>& hypotheses,
                    const Truth& truth, int cycles, int budget, Scheme scheme, Rng& rng) {
  const int j_count = static_cast<int>(hypotheses.size());
  const auto truth_it = std::find(hypotheses.begin(), hypotheses.end(), truth.hypothesis);
  if (truth_it == hypotheses.end())
    throw std::invalid_argument("detect: truth must belong to the hypothesis set");
  const int truth_idx = static_cast<int>(truth_it - hypotheses.begin());
  const bool use_ris = scheme != Scheme::kNoRis && scene.panel.has_value();

  const Posterior prior = Posterior::uniform(j_count);
  Posterior posterior = prior;
  std::vector<Eigen::VectorXcd> y_history;
  std::vector<RadarParams> params_history;
  std::vector<TargetFit> fits(j_count);

  DetectResult result;
  result.posterior_trace.resize(cycles, j_count);
  result.truth_posterior.resize(cycles);
  result.correct.resize(cycles);

  for (int c = 0; c < cycles; ++c) {
    Rng cycle_rng = rng.fork(static_cast<std::uint64_t>(c));
    RadarParams params = uniform_params(scene);
    switch (scheme) {
      case Scheme::kOptimized: {
        Rng opt_rng = cycle_rng.fork("optimize");
        params = optimize_params(posterior, hypotheses, fits, scene, params, budget, opt_rng);
        break;
      }
      case Scheme::kRandom: {
        Rng cfg_rng = cycle_rng.fork("config");
        if (scene.panel) {
          params.tx_config =
              ris::random_config(scene.panel->group_count(), scene.panel->codebook(), cfg_rng);
          params.rx_config =
              ris::random_config(scene.panel->group_count(), scene.panel->codebook(), cfg_rng);
        }
        break;
      }
      case Scheme::kNoRis:
        break;
    }

    Eigen::VectorXcd y =
        expected_echo(scene, truth.hypothesis, truth.delays, truth.amplitudes, params, use_ris);
    Rng noise_rng = cycle_rng.fork("noise");
    for (Eigen::Index a = 0; a < y.size(); ++a)
      y(a) += noise_rng.complex_normal(scene.noise_power);

    y_history.push_back(std::move(y));
    params_history.push_back(params);

    // Fitted-nuisance likelihoods need a model-order penalty: a hypothesis
    // containing the true target set plus silent extras matches the history
    // just as well, so raw residuals cannot separate nested models. BIC-style
    // charge of ln(observation count) per fitted target parameter pair.
    const double order_penalty = std::log(2.0 * scene.array.antenna_count * (c + 1));
    Eigen::VectorXd log_liks(j_count);
    for (int j = 0; j < j_count; ++j) {
      log_liks(j) =
          log_likelihood(y_history, hypotheses[j], params_history, scene, use_ris, &fits[j]) -
          order_penalty * hypotheses[j].target_count();
    }
    posterior = bayes_update(prior, log_liks);

    result.posterior_trace.row(c) = posterior.p.transpose();
    result.truth_posterior[c] = posterior.p(truth_idx);
    Eigen::Index argmax = 0;
    posterior.p.maxCoeff(&argmax);
    result.correct[c] = argmax == truth_idx ? 1 : 0;
  }

  Eigen::Index argmax = 0;
  posterior.p.maxCoeff(&argmax);
  result.chosen = static_cast<int>(argmax);
  return result;
}

}  // namespace rissim::metaradar
