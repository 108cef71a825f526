#include "rissim/metaslam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rissim/channel.hpp"

namespace rissim::metaslam {

namespace {

Vec2 tx_position(const SlamScene& scene, const Vec2& pose) { return pose + scene.tx_offset; }
Vec2 rx_position(const SlamScene& scene, const Vec2& pose) { return pose + scene.rx_offset; }

double bearing(const Vec2& from, const Vec2& to) { return std::atan2(to.y - from.y, to.x - from.x); }

double circular_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

Eigen::Vector2d to_eigen(const Vec2& v) { return {v.x, v.y}; }

}  // namespace

Vec3 mirror(const Vec3& p, const Plane3& plane) {
  const Vec3 n = plane.normal.normalized();
  const double d = p.dot(n) - plane.offset;
  return p - n * (2.0 * d);
}

Vec2 mirror(const Vec2& p, const Line2& line) {
  const Vec2 n = line.normal.normalized();
  const double d = p.dot(n) - line.offset;
  return p - n * (2.0 * d);
}

double NoiseModel::scale(double amp_mag) const {
  if (amp_mag <= 0.0) return max_scale;
  return std::clamp(ref_amplitude / amp_mag, 0.25, max_scale);
}

cd SlamScene::ris_response(const ris::RisConfig* config) const {
  if (!config) return {1.0, 0.0};
  if (static_cast<int>(config->states.size()) != ris_groups)
    throw std::invalid_argument("SlamScene: config length must equal RIS group count");
  cd acc(0.0, 0.0);
  for (const int s : config->states)
    acc += ris::element_response(codebook.state(s), ris::RisType::kReflective, 0.0,
                                 ris::Branch::kReflect);
  return ris_aperture_gain * acc / static_cast<double>(ris_groups);
}

SlamScene SlamScene::without_ris() const {
  SlamScene copy = *this;
  if (ris_scatterer >= 0) {
    copy.scatterers.erase(copy.scatterers.begin() + ris_scatterer);
    copy.ris_scatterer = -1;
  }
  return copy;
}

std::vector<SynthPath> synthesize_paths(const SlamScene& scene, const Vec2& pose,
                                        const ris::RisConfig* config) {
  const Vec2 tx = tx_position(scene, pose);
  const Vec2 rx = rx_position(scene, pose);
  const double lambda = scene.wavelength;
  std::vector<SynthPath> paths;

  const double d_direct = distance(tx, rx);
  if (d_direct > 1e-9) {
    SynthPath p;
    p.kind = PathKind::kDirect;
    p.delay = d_direct / kSpeedOfLight;
    p.amplitude = channel::los_gain(d_direct, scene.tx_gain, scene.rx_gain, lambda);
    p.aoa = bearing(rx, tx);
    p.apparent_source = tx;
    paths.push_back(p);
  }

  for (std::size_t k = 0; k < scene.reflectors.size(); ++k) {
    const Vec2 vt = mirror(tx, scene.reflectors[k]);
    const double d = distance(vt, rx);
    if (d <= 1e-9) continue;
    SynthPath p;
    p.kind = PathKind::kReflector;
    p.reflector = static_cast<int>(k);
    p.delay = d / kSpeedOfLight;
    p.amplitude = scene.reflect_coeff * channel::los_gain(d, scene.tx_gain, scene.rx_gain, lambda);
    p.aoa = bearing(rx, vt);
    p.apparent_source = vt;
    paths.push_back(p);
  }

  for (std::size_t i = 0; i < scene.scatterers.size(); ++i) {
    const Vec2 s = scene.scatterers[i];
    const cd kappa =
        static_cast<int>(i) == scene.ris_scatterer ? scene.ris_response(config) : cd(1.0, 0.0);
    const double d1 = distance(tx, s);
    const double d2 = distance(s, rx);
    if (d1 <= 1e-9 || d2 <= 1e-9) continue;
    SynthPath p;
    p.kind = PathKind::kScatterer;
    p.scatterer = static_cast<int>(i);
    p.delay = (d1 + d2) / kSpeedOfLight;
    p.amplitude = channel::ris_path_gain(d1, d2, kappa, scene.tx_gain, scene.rx_gain, lambda);
    p.aoa = bearing(rx, s);
    p.apparent_source = s;
    paths.push_back(p);

    for (std::size_t k = 0; k < scene.reflectors.size(); ++k) {
      const Vec2 vs = mirror(s, scene.reflectors[k]);
      const double d3 = distance(vs, rx);
      if (d3 <= 1e-9) continue;
      SynthPath pr;
      pr.kind = PathKind::kScattererReflector;
      pr.scatterer = static_cast<int>(i);
      pr.reflector = static_cast<int>(k);
      pr.delay = (d1 + d3) / kSpeedOfLight;
      pr.amplitude = scene.reflect_coeff *
                     channel::ris_path_gain(d1, d3, kappa, scene.tx_gain, scene.rx_gain, lambda);
      pr.aoa = bearing(rx, vs);
      pr.apparent_source = vs;
      paths.push_back(pr);
    }
  }
  return paths;
}

PathObservation measure_path(const SynthPath& path, const NoiseModel& noise, int cycle, Rng& rng) {
  PathObservation obs;
  obs.cycle = cycle;
  const double amp_mag = std::abs(path.amplitude);
  obs.delay = path.delay + rng.normal(0.0, noise.tau_std(amp_mag));
  obs.aoa = wrap_angle(path.aoa + rng.normal(0.0, noise.aoa_std(amp_mag)));
  obs.amplitude = path.amplitude + rng.complex_normal(noise.sigma_amp * noise.sigma_amp);
  if (obs.delay < 0.0) obs.delay = 0.0;
  return obs;
}

Eigen::Matrix2d fisher_information(const SlamScene& scene, const Vec2& pose,
                                   std::span<const SynthPath> paths) {
  const Vec2 tx = tx_position(scene, pose);
  const Vec2 rx = rx_position(scene, pose);
  Eigen::Matrix2d info = Eigen::Matrix2d::Zero();

  for (const SynthPath& path : paths) {
    Eigen::Vector2d grad_tau = Eigen::Vector2d::Zero();
    Eigen::Vector2d grad_theta = Eigen::Vector2d::Zero();

    switch (path.kind) {
      case PathKind::kDirect:
        break;  // rigid with the agent; carries no position information
      case PathKind::kReflector: {
        const Vec2 n = scene.reflectors[path.reflector].normal.normalized();
        const Vec2 delta = path.apparent_source - rx;
        const double d = delta.norm();
        if (d <= 1e-12) break;
        // Both endpoints move with the pose; only the mirrored component of
        // the Tx motion survives in the difference.
        const Eigen::Vector2d en = to_eigen(n);
        const Eigen::Vector2d u = to_eigen(delta) / d;
        grad_tau = -2.0 * en * en.dot(u) / kSpeedOfLight;
        const Eigen::Vector2d g(-delta.y / (d * d), delta.x / (d * d));
        grad_theta = -2.0 * en * en.dot(g);
        break;
      }
      case PathKind::kScatterer: {
        const Vec2 s = path.apparent_source;
        grad_tau = (to_eigen((tx - s).normalized()) + to_eigen((rx - s).normalized())) /
                   kSpeedOfLight;
        const Vec2 delta = s - rx;
        const double d2 = delta.dot(delta);
        grad_theta = Eigen::Vector2d(delta.y / d2, -delta.x / d2);
        break;
      }
      case PathKind::kScattererReflector: {
        const Vec2 s = scene.scatterers[path.scatterer];
        const Vec2 vs = path.apparent_source;
        grad_tau = (to_eigen((tx - s).normalized()) + to_eigen((rx - vs).normalized())) /
                   kSpeedOfLight;
        const Vec2 delta = vs - rx;
        const double d2 = delta.dot(delta);
        grad_theta = Eigen::Vector2d(delta.y / d2, -delta.x / d2);
        break;
      }
    }

    const double amp = std::abs(path.amplitude);
    const double st = scene.noise.tau_std(amp);
    const double sa = scene.noise.aoa_std(amp);
    if (st > 0.0) info += grad_tau * grad_tau.transpose() / (st * st);
    if (sa > 0.0) info += grad_theta * grad_theta.transpose() / (sa * sa);
  }
  return info;
}

double crlb_trace(const Eigen::Matrix2d& info) {
  const double det = info.determinant();
  if (std::abs(det) <= 1e-12 * std::max(1.0, info.squaredNorm()))
    throw std::domain_error("unlocalizable pose");
  return (info.inverse()).trace();
}

CrlbSearchResult select_config_crlb(const SlamScene& scene, const Vec2& pose_estimate, int budget,
                                    Rng& rng) {
  if (!scene.has_ris()) throw std::invalid_argument("select_config_crlb: scene has no RIS");
  if (budget < 1) throw std::invalid_argument("select_config_crlb: budget must be >= 1");

  CrlbSearchResult result;
  result.crlb = std::numeric_limits<double>::infinity();

  const auto evaluate = [&](const ris::RisConfig& config) {
    const auto paths = synthesize_paths(scene, pose_estimate, &config);
    std::vector<SynthPath> usable;
    for (const auto& p : paths)
      if (p.kind == PathKind::kScatterer) usable.push_back(p);
    double value = std::numeric_limits<double>::infinity();
    try {
      value = crlb_trace(fisher_information(scene, pose_estimate, usable));
    } catch (const std::domain_error&) {
    }
    ++result.evaluations;
    // The first candidate seeds the result so a degenerate (all-singular)
    // landscape still yields a usable configuration.
    if (value < result.crlb || result.evaluations == 1) {
      result.crlb = value;
      result.config = config;
    }
    result.best_trace.push_back(result.crlb);
    return value;
  };

  while (result.evaluations < budget) {
    ris::RisConfig current = ris::random_config(scene.ris_groups, scene.codebook, rng);
    double current_value = evaluate(current);
    bool improved = true;
    while (improved && result.evaluations < budget) {
      improved = false;
      for (const auto& n : ris::neighbor_configs(current, scene.codebook)) {
        if (result.evaluations >= budget) break;
        const double v = evaluate(n);
        if (v < current_value) {
          current = n;
          current_value = v;
          improved = true;
        }
      }
    }
  }
  return result;
}

std::vector<std::vector<int>> group_paths(std::span<const PathObservation> observations,
                                          double angle_threshold) {
  if (angle_threshold <= 0.0) throw std::invalid_argument("group_paths: threshold must be positive");
  const int n = static_cast<int>(observations.size());
  if (n == 0) return {};

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return observations[a].aoa < observations[b].aoa;
  });

  // Circular single linkage: cut every sorted gap wider than the threshold.
  std::vector<int> cut_after;  // positions i where the gap (i -> i+1 mod n) is cut
  for (int i = 0; i < n; ++i) {
    const double a = observations[order[i]].aoa;
    const double b = observations[order[(i + 1) % n]].aoa;
    const double gap = i + 1 < n ? b - a : b + kTwoPi - a;
    if (gap > angle_threshold) cut_after.push_back(i);
  }

  std::vector<std::vector<int>> groups;
  if (cut_after.empty()) {
    groups.emplace_back(order.begin(), order.end());
    return groups;
  }
  for (std::size_t c = 0; c < cut_after.size(); ++c) {
    const int start = (cut_after[c] + 1) % n;
    const int end = cut_after[(c + 1) % cut_after.size()];
    std::vector<int> group;
    for (int i = start;; i = (i + 1) % n) {
      group.push_back(order[i]);
      if (i == end) break;
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

std::optional<Vec2> back_project(const SlamScene& scene, const Vec2& pose, double delay,
                                 double aoa) {
  const Vec2 tx = tx_position(scene, pose);
  const Vec2 rx = rx_position(scene, pose);
  const Vec2 u{std::cos(aoa), std::sin(aoa)};
  const Vec2 offset = tx - rx;
  const double total = delay * kSpeedOfLight;
  const double denom = 2.0 * (total - offset.dot(u));
  if (denom <= 1e-12) return std::nullopt;
  const double r = (total * total - offset.dot(offset)) / denom;
  if (r <= 0.0 || r > total) return std::nullopt;
  return rx + u * r;
}

void LandmarkBelief::validate(double tol) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) < 0.0) throw std::domain_error("LandmarkBelief: negative mass");
    sum += p(i);
  }
  if (std::abs(sum - 1.0) > tol) throw std::domain_error("LandmarkBelief: mass does not sum to 1");
}

LandmarkBelief LandmarkBelief::uniform(int n) {
  if (n < 1) throw std::invalid_argument("LandmarkBelief::uniform: need at least one landmark");
  LandmarkBelief b;
  b.p = Eigen::VectorXd::Constant(n, 1.0 / n);
  return b;
}

LandmarkBelief ris_landmark_update(const LandmarkBelief& belief,
                                   std::span<const double> amplitudes,
                                   std::span<const double> predicted_configured,
                                   std::span<const double> predicted_neutral, double sigma_amp) {
  belief.validate();
  const int n = static_cast<int>(belief.p.size());
  if (static_cast<int>(amplitudes.size()) != n ||
      static_cast<int>(predicted_configured.size()) != n ||
      static_cast<int>(predicted_neutral.size()) != n)
    throw std::invalid_argument("ris_landmark_update: length mismatch");
  if (sigma_amp <= 0.0) throw std::invalid_argument("ris_landmark_update: sigma must be positive");

  Eigen::VectorXd log_post(n);
  double max_lp = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double ll = 0.0;
    for (int l = 0; l < n; ++l) {
      const double mean = l == i ? predicted_configured[l] : predicted_neutral[l];
      const double d = (amplitudes[l] - mean) / sigma_amp;
      ll -= 0.5 * d * d;
    }
    log_post(i) = belief.p(i) > 0.0 ? std::log(belief.p(i)) + ll
                                    : -std::numeric_limits<double>::infinity();
    max_lp = std::max(max_lp, log_post(i));
  }
  if (!std::isfinite(max_lp)) throw std::domain_error("ris_landmark_update: numerical underflow");
  LandmarkBelief out;
  out.p.resize(n);
  double denom = 0.0;
  for (int i = 0; i < n; ++i) denom += std::exp(log_post(i) - max_lp);
  for (int i = 0; i < n; ++i) out.p(i) = std::exp(log_post(i) - max_lp) / denom;
  return out;
}

Vec2 ParticleSet::mean_pose() const {
  Vec2 acc;
  for (const auto& p : particles) acc += p.pose * p.weight;
  return acc;
}

double ParticleSet::effective_sample_size() const {
  double sum_sq = 0.0;
  for (const auto& p : particles) sum_sq += p.weight * p.weight;
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

ParticleSet ParticleSet::initialize(int count, const Vec2& pose) {
  if (count < 1) throw std::invalid_argument("ParticleSet: need at least one particle");
  ParticleSet set;
  set.particles.resize(count);
  for (auto& p : set.particles) {
    p.pose = pose;
    p.weight = 1.0 / count;
  }
  return set;
}

namespace {

struct Measurement2 {
  double tau;
  double theta;
};

Measurement2 predict_observation(const SlamScene& scene, const Vec2& pose, const Vec2& landmark) {
  const Vec2 tx = tx_position(scene, pose);
  const Vec2 rx = rx_position(scene, pose);
  Measurement2 z;
  z.tau = (distance(tx, landmark) + distance(landmark, rx)) / kSpeedOfLight;
  z.theta = bearing(rx, landmark);
  return z;
}

Eigen::Matrix2d observation_jacobian(const SlamScene& scene, const Vec2& pose,
                                     const Vec2& landmark) {
  const Vec2 tx = tx_position(scene, pose);
  const Vec2 rx = rx_position(scene, pose);
  const Eigen::Vector2d dtau =
      (to_eigen((landmark - tx).normalized()) + to_eigen((landmark - rx).normalized())) /
      kSpeedOfLight;
  const Vec2 delta = landmark - rx;
  const double d2 = delta.dot(delta);
  Eigen::Matrix2d h;
  h.row(0) = dtau.transpose();
  h.row(1) = Eigen::RowVector2d(-delta.y / d2, delta.x / d2);
  return h;
}

void systematic_resample(ParticleSet& set, Rng& rng) {
  const int n = static_cast<int>(set.particles.size());
  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += set.particles[i].weight;
    cumulative[i] = acc;
  }
  std::vector<Particle> next;
  next.reserve(n);
  const double start = rng.uniform() / n;
  int idx = 0;
  for (int i = 0; i < n; ++i) {
    const double target = start + static_cast<double>(i) / n;
    while (idx < n - 1 && cumulative[idx] < target * acc) ++idx;
    next.push_back(set.particles[idx]);
    next.back().weight = 1.0 / n;
  }
  set.particles = std::move(next);
}

}  // namespace

ParticleSet pf_step(ParticleSet particles, std::span<const LandmarkObservation> observations,
                    const SlamScene& scene, const Vec2& motion, double motion_noise_std, Rng& rng) {
  const int n = static_cast<int>(particles.particles.size());
  if (n == 0) throw std::invalid_argument("pf_step: empty particle set");

  std::vector<double> log_w(n);
  for (int i = 0; i < n; ++i) {
    Particle& p = particles.particles[i];
    p.pose += motion;
    if (motion_noise_std > 0.0) {
      p.pose.x += rng.normal(0.0, motion_noise_std);
      p.pose.y += rng.normal(0.0, motion_noise_std);
    }
    log_w[i] = p.weight > 0.0 ? std::log(p.weight) : -std::numeric_limits<double>::infinity();

    for (const LandmarkObservation& obs : observations) {
      const double st = scene.noise.tau_std(obs.amp_mag);
      const double sa = scene.noise.aoa_std(obs.amp_mag);
      Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
      r(0, 0) = std::max(st * st, 1e-30);
      r(1, 1) = std::max(sa * sa, 1e-30);

      if (obs.landmark == static_cast<int>(p.landmark_mean.size())) {
        // First sighting: seed the Gaussian from this particle's own
        // back-projection; no likelihood contribution yet.
        const auto seed = back_project(scene, p.pose, obs.delay, obs.aoa);
        Vec2 mean;
        if (seed) {
          mean = *seed;
        } else {
          const double half = obs.delay * kSpeedOfLight / 2.0;
          mean = rx_position(scene, p.pose) + Vec2{std::cos(obs.aoa), std::sin(obs.aoa)} * half;
        }
        p.landmark_mean.push_back(mean);
        p.landmark_cov.push_back(Eigen::Matrix2d::Identity() * 0.25 * 0.25);
        continue;
      }
      if (obs.landmark < 0 || obs.landmark > static_cast<int>(p.landmark_mean.size()))
        throw std::invalid_argument("pf_step: landmark index out of order");

      Vec2& mean = p.landmark_mean[obs.landmark];
      Eigen::Matrix2d& cov = p.landmark_cov[obs.landmark];
      const Measurement2 pred = predict_observation(scene, p.pose, mean);
      const Eigen::Matrix2d h = observation_jacobian(scene, p.pose, mean);
      const Eigen::Vector2d innovation(obs.delay - pred.tau, wrap_angle(obs.aoa - pred.theta));
      const Eigen::Matrix2d s = h * cov * h.transpose() + r;
      const double det = s.determinant();
      if (det <= 0.0) continue;
      const Eigen::Matrix2d s_inv = s.inverse();
      const Eigen::Matrix2d gain = cov * h.transpose() * s_inv;
      const Eigen::Vector2d correction = gain * innovation;
      mean.x += correction(0);
      mean.y += correction(1);
      cov = (Eigen::Matrix2d::Identity() - gain * h) * cov;
      cov = 0.5 * (cov + cov.transpose());
      log_w[i] += -0.5 * innovation.dot(s_inv * innovation) -
                  0.5 * std::log(det * kTwoPi * kTwoPi);
    }
  }

  // Exp-normalize the weights; a fully collapsed set is reset to uniform.
  const double max_lw = *std::max_element(log_w.begin(), log_w.end());
  particles.degenerate = !std::isfinite(max_lw);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = particles.degenerate ? 1.0 : std::exp(log_w[i] - max_lw);
    particles.particles[i].weight = w;
    sum += w;
  }
  for (auto& p : particles.particles) p.weight /= sum;

  if (particles.effective_sample_size() < n / 2.0) systematic_resample(particles, rng);
  return particles;
}

namespace {

struct Candidate {
  double bearing = 0.0;
  double delay = 0.0;
  std::vector<Vec2> projections;
  int sightings = 0;
};

Vec2 estimated_landmark(const ParticleSet& particles, int landmark) {
  Vec2 acc{};
  for (const auto& p : particles.particles) acc += p.landmark_mean[landmark] * p.weight;
  return acc;
}

}  // namespace

SlamTrace slam_run(const SlamScene& scene, std::span<const Vec2> trajectory, Scheme scheme,
                   const SlamOptions& options, Rng& rng) {
  if (trajectory.empty()) throw std::invalid_argument("slam_run: empty trajectory");
  const SlamScene world = scheme == Scheme::kNoRis ? scene.without_ris() : scene;
  const bool use_config = scheme != Scheme::kNoRis && world.has_ris();

  ParticleSet particles = ParticleSet::initialize(options.particles, trajectory[0]);
  std::vector<Candidate> candidates;
  LandmarkBelief belief;
  int map_size = 0;

  SlamTrace trace;
  trace.pose_error.reserve(trajectory.size());

  for (std::size_t c = 0; c < trajectory.size(); ++c) {
    Rng cycle_rng = rng.fork(static_cast<std::uint64_t>(c));
    const Vec2 motion = c == 0 ? Vec2{} : trajectory[c] - trajectory[c - 1];
    const Vec2 pose_pred = particles.mean_pose() + motion;

    ris::RisConfig config;
    if (use_config) {
      Rng select_rng = cycle_rng.fork("select");
      if (scheme == Scheme::kProposed)
        config = select_config_crlb(world, pose_pred, options.config_budget, select_rng).config;
      else
        config = ris::random_config(world.ris_groups, world.codebook, select_rng);
    }

    const auto paths = synthesize_paths(world, trajectory[c], use_config ? &config : nullptr);
    Rng measure_rng = cycle_rng.fork("measure");
    std::vector<PathObservation> observations;
    observations.reserve(paths.size());
    for (const auto& p : paths)
      observations.push_back(measure_path(p, world.noise, static_cast<int>(c), measure_rng));

    // Mapped landmarks claim their observations first, gated on the bearing
    // AND the range predicted from the estimated landmark position. The range
    // gate keeps wall-image paths that momentarily share a bearing from
    // polluting a mapped landmark.
    std::vector<LandmarkObservation> lm_obs;
    std::vector<char> taken(observations.size(), 0);
    for (int lm = 0; lm < map_size; ++lm) {
      const Vec2 pos = estimated_landmark(particles, lm);
      const Measurement2 pred = predict_observation(world, pose_pred, pos);
      int best = -1;
      double best_gap = options.angle_threshold;
      for (std::size_t o = 0; o < observations.size(); ++o) {
        if (taken[o]) continue;
        const double gap = circular_distance(observations[o].aoa, pred.theta);
        const double range_gap = std::abs(observations[o].delay - pred.tau) * kSpeedOfLight;
        if (gap <= best_gap && range_gap <= options.range_gate) {
          best_gap = gap;
          best = static_cast<int>(o);
        }
      }
      if (best >= 0) {
        taken[best] = 1;
        lm_obs.push_back({lm, observations[best].delay, observations[best].aoa,
                          std::abs(observations[best].amplitude)});
      }
    }

    // Leftover observations feed the candidate registry through bearing
    // clustering; a candidate is promoted once its back-projected source
    // proves stationary across cycles. Sources rigid with the agent (the Tx
    // and its wall images) drift under the two-segment inversion and never
    // promote.
    std::vector<PathObservation> leftovers;
    for (std::size_t o = 0; o < observations.size(); ++o)
      if (!taken[o]) leftovers.push_back(observations[o]);
    const auto clusters = group_paths(leftovers, options.angle_threshold);
    for (const auto& cluster : clusters) {
      const PathObservation* rep = &leftovers[cluster.front()];
      for (const int idx : cluster)
        if (std::abs(leftovers[idx].amplitude) > std::abs(rep->amplitude))
          rep = &leftovers[idx];

      int entry = -1;
      double best_gap = options.angle_threshold;
      for (std::size_t e = 0; e < candidates.size(); ++e) {
        const double gap = circular_distance(candidates[e].bearing, rep->aoa);
        const double range_gap = std::abs(candidates[e].delay - rep->delay) * kSpeedOfLight;
        if (gap <= best_gap && range_gap <= 2.0 * options.range_gate) {
          best_gap = gap;
          entry = static_cast<int>(e);
        }
      }
      if (entry < 0) {
        candidates.push_back({});
        entry = static_cast<int>(candidates.size()) - 1;
      }
      Candidate& cand = candidates[entry];
      cand.bearing = rep->aoa;
      cand.delay = rep->delay;
      ++cand.sightings;
      if (const auto bp = back_project(world, pose_pred, rep->delay, rep->aoa)) {
        cand.projections.push_back(*bp);
        if (cand.projections.size() > 6) cand.projections.erase(cand.projections.begin());
      }

      if (cand.sightings < options.classify_after ||
          static_cast<int>(cand.projections.size()) < options.classify_after)
        continue;
      double spread = 0.0;
      for (std::size_t a = 0; a < cand.projections.size(); ++a)
        for (std::size_t b = a + 1; b < cand.projections.size(); ++b)
          spread = std::max(spread, distance(cand.projections[a], cand.projections[b]));
      if (spread >= options.consistency_threshold) continue;

      // A candidate sitting on top of an already-mapped landmark is a
      // duplicate born during a drift episode, not a new source. Only
      // landmarks the filter already carries can be compared.
      const int known = static_cast<int>(particles.particles.front().landmark_mean.size());
      bool duplicate = false;
      for (int lm = 0; lm < known && !duplicate; ++lm)
        if (distance(estimated_landmark(particles, lm), cand.projections.back()) <
            options.range_gate)
          duplicate = true;
      if (duplicate) {
        candidates.erase(candidates.begin() + entry);
        continue;
      }

      // Promote: this cycle's sighting seeds the per-particle Gaussians.
      const int new_index = map_size++;
      lm_obs.push_back({new_index, rep->delay, rep->aoa, std::abs(rep->amplitude)});
      candidates.erase(candidates.begin() + entry);
      if (belief.p.size() == 0) {
        belief = LandmarkBelief::uniform(1);
      } else {
        Eigen::VectorXd grown(map_size);
        grown.head(map_size - 1) = belief.p * (static_cast<double>(map_size - 1) / map_size);
        grown(map_size - 1) = 1.0 / map_size;
        belief.p = grown;
      }
    }
    std::sort(lm_obs.begin(), lm_obs.end(),
              [](const auto& a, const auto& b) { return a.landmark < b.landmark; });

    Rng pf_rng = cycle_rng.fork("pf");
    particles = pf_step(std::move(particles), lm_obs, world, motion, options.motion_noise_std,
                        pf_rng);

    // RIS identification from how amplitudes track the applied configuration.
    if (use_config && map_size >= 1 && lm_obs.size() == static_cast<std::size_t>(map_size)) {
      std::vector<double> amps(map_size), conf(map_size), neutral(map_size);
      const double response = std::abs(world.ris_response(&config));
      bool ready = true;
      for (const auto& obs : lm_obs) {
        const Vec2 lm_mean = estimated_landmark(particles, obs.landmark);
        const Vec2 tx = trajectory[c] + world.tx_offset;
        const Vec2 rx = trajectory[c] + world.rx_offset;
        const double d1 = distance(tx, lm_mean);
        const double d2 = distance(lm_mean, rx);
        if (d1 <= 1e-9 || d2 <= 1e-9) {
          ready = false;
          break;
        }
        const double base = std::abs(channel::ris_path_gain(d1, d2, cd(1.0, 0.0), world.tx_gain,
                                                            world.rx_gain, world.wavelength));
        amps[obs.landmark] = obs.amp_mag;
        conf[obs.landmark] = base * response;
        neutral[obs.landmark] = base;
      }
      if (ready)
        belief = ris_landmark_update(belief, amps, conf, neutral,
                                     std::max(world.noise.sigma_amp, 1e-12));
    }

    trace.pose_error.push_back(distance(particles.mean_pose(), trajectory[c]));
    trace.landmarks.push_back(map_size);

    // Diagnostic: belief mass on the landmark nearest the true RIS position.
    double truth_mass = 0.0;
    if (world.has_ris() && map_size > 0) {
      const Vec2 ris_pos = world.scatterers[world.ris_scatterer];
      int best = -1;
      double best_d = 0.5;
      for (int lm = 0; lm < map_size; ++lm) {
        const double d = distance(estimated_landmark(particles, lm), ris_pos);
        if (d < best_d) {
          best_d = d;
          best = lm;
        }
      }
      if (best >= 0 && best < belief.p.size()) truth_mass = belief.p(best);
    }
    trace.ris_belief_truth.push_back(truth_mass);
  }
  return trace;
}

}  // namespace rissim::metaslam
