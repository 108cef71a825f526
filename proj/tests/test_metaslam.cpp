#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rissim/metaslam.hpp"

using namespace rissim;
using namespace rissim::metaslam;

namespace {

SlamScene room_scene(bool with_ris = true, bool with_walls = true) {
  SlamScene scene;
  if (with_walls)
    scene.reflectors = {{{1.0, 0.0}, 3.0}, {{-1.0, 0.0}, 3.0}, {{0.0, 1.0}, 3.0},
                        {{0.0, -1.0}, 3.0}};
  scene.scatterers = {{2.2, 1.6}, {-2.0, 1.2}, {0.8, -2.1}};
  if (with_ris) {
    scene.scatterers.push_back({-1.2, 2.4});
    scene.ris_scatterer = 3;
  }
  scene.noise.sigma_tau = 2e-10;
  scene.noise.sigma_aoa = 0.015;
  scene.noise.sigma_amp = 4e-5;
  scene.noise.ref_amplitude = 1e-3;
  return scene;
}

const SynthPath* find_path(const std::vector<SynthPath>& paths, PathKind kind, int scatterer = -1,
                           int reflector = -1) {
  for (const auto& p : paths)
    if (p.kind == kind && p.scatterer == scatterer && p.reflector == reflector) return &p;
  return nullptr;
}

}  // namespace

TEST_CASE("mirror geometry") {
  const Plane3 ground{{0.0, 0.0, 1.0}, 0.0};
  SUBCASE("a point on the plane maps to itself") {
    const Vec3 p{0.3, -0.2, 0.0};
    CHECK(distance(mirror(p, ground), p) < 1e-15);
  }
  SUBCASE("unit point across z = 0") {
    const Vec3 m = mirror({0.0, 0.0, 1.0}, ground);
    CHECK(m.x == doctest::Approx(0.0));
    CHECK(m.y == doctest::Approx(0.0));
    CHECK(m.z == doctest::Approx(-1.0));
  }
  SUBCASE("involution and isometry") {
    const Plane3 tilted{Vec3{1.0, 2.0, -0.5}.normalized(), 0.7};
    Rng rng(1);
    std::vector<Vec3> pts;
    for (int i = 0; i < 10; ++i)
      pts.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)});
    std::vector<Vec3> mirrored;
    for (const auto& p : pts) {
      const Vec3 m = mirror(p, tilted);
      CHECK(distance(mirror(m, tilted), p) < 1e-12);
      mirrored.push_back(m);
    }
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b)
        CHECK(std::abs(distance(pts[a], pts[b]) - distance(mirrored[a], mirrored[b])) < 1e-12);
  }
  SUBCASE("2D line mirror") {
    const Line2 wall{{0.0, 1.0}, 3.0};  // y = 3
    const Vec2 m = mirror(Vec2{1.0, 1.0}, wall);
    CHECK(m.x == doctest::Approx(1.0));
    CHECK(m.y == doctest::Approx(5.0));
  }
}

TEST_CASE("an empty room produces only the direct path") {
  SlamScene scene;
  scene.noise.ref_amplitude = 1e-3;
  const auto paths = synthesize_paths(scene, {0.5, -0.4}, nullptr);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].kind == PathKind::kDirect);
  const double d = distance(Vec2{0.5, -0.4} + scene.tx_offset, Vec2{0.5, -0.4} + scene.rx_offset);
  CHECK(paths[0].delay == doctest::Approx(d / kSpeedOfLight).epsilon(1e-15));
}

TEST_CASE("reflector path delay equals the mirrored single-segment geometry") {
  SlamScene scene = room_scene(false, true);
  scene.scatterers.clear();
  const Vec2 pose{0.7, -0.9};
  const auto paths = synthesize_paths(scene, pose, nullptr);
  const Vec2 tx = pose + scene.tx_offset;
  const Vec2 rx = pose + scene.rx_offset;
  for (std::size_t k = 0; k < scene.reflectors.size(); ++k) {
    const SynthPath* p = find_path(paths, PathKind::kReflector, -1, static_cast<int>(k));
    REQUIRE(p != nullptr);
    const Vec2 vt = mirror(tx, scene.reflectors[k]);
    CHECK(std::abs(p->delay - distance(vt, rx) / kSpeedOfLight) < 1e-12 * p->delay + 1e-24);
    CHECK(distance(p->apparent_source, vt) < 1e-12);

    // Specular construction: the wall point on the VT-Rx segment turns the
    // mirrored length back into the physical two-segment length.
    const Vec2 n = scene.reflectors[k].normal;
    const double t =
        (scene.reflectors[k].offset - n.dot(rx)) / (n.dot(vt) - n.dot(rx));
    const Vec2 bounce = rx + (vt - rx) * t;
    const double physical = distance(tx, bounce) + distance(bounce, rx);
    CHECK(std::abs(physical - distance(vt, rx)) < 1e-12);
  }
}

TEST_CASE("RIS path amplitude scales with the configured response") {
  SlamScene scene = room_scene(true, false);
  scene.ris_groups = 4;
  const Vec2 pose{0.0, 0.0};
  const ris::RisConfig aligned{{0, 0, 0, 0}};
  const ris::RisConfig mixed{{0, 2, 0, 2}};  // opposing phases average near zero
  const auto paths_aligned = synthesize_paths(scene, pose, &aligned);
  const auto paths_mixed = synthesize_paths(scene, pose, &mixed);
  const SynthPath* ris_aligned = find_path(paths_aligned, PathKind::kScatterer, 3);
  const SynthPath* ris_mixed = find_path(paths_mixed, PathKind::kScatterer, 3);
  REQUIRE(ris_aligned != nullptr);
  REQUIRE(ris_mixed != nullptr);
  const double ratio = std::abs(scene.ris_response(&mixed)) / std::abs(scene.ris_response(&aligned));
  CHECK(std::abs(ris_mixed->amplitude) ==
        doctest::Approx(std::abs(ris_aligned->amplitude) * ratio).epsilon(1e-12));

  // A plain scatterer is untouched by the configuration.
  const SynthPath* plain_a = find_path(paths_aligned, PathKind::kScatterer, 0);
  const SynthPath* plain_b = find_path(paths_mixed, PathKind::kScatterer, 0);
  CHECK(std::abs(plain_a->amplitude) == doctest::Approx(std::abs(plain_b->amplitude)));
}

TEST_CASE("fisher information gradients match finite differences") {
  SlamScene scene = room_scene(true, true);
  const Vec2 pose{0.4, 0.2};
  const auto paths = synthesize_paths(scene, pose, nullptr);

  // Extract |grad tau| for one path at a time by muting the bearing term.
  SlamScene tau_only = scene;
  tau_only.noise.sigma_tau = 1.0;
  tau_only.noise.sigma_aoa = 0.0;
  tau_only.noise.ref_amplitude = 1.0;
  tau_only.noise.max_scale = 1.0;  // unit weights regardless of amplitude

  const double h = 1e-6;
  for (const auto& path : paths) {
    if (path.kind == PathKind::kDirect) continue;
    std::vector<SynthPath> single{path};
    // Undo the amplitude scaling so the weight is exactly 1.
    single[0].amplitude = cd(1.0, 0.0);
    const Eigen::Matrix2d info = fisher_information(tau_only, pose, single);

    const auto delay_at = [&](const Vec2& p) {
      const auto perturbed = synthesize_paths(scene, p, nullptr);
      const SynthPath* match = find_path(perturbed, path.kind, path.scatterer, path.reflector);
      REQUIRE(match != nullptr);
      return match->delay;
    };
    const double gx = (delay_at({pose.x + h, pose.y}) - delay_at({pose.x - h, pose.y})) / (2 * h);
    const double gy = (delay_at({pose.x, pose.y + h}) - delay_at({pose.x, pose.y - h})) / (2 * h);
    const Eigen::Vector2d fd(gx, gy);
    const Eigen::Matrix2d expected = fd * fd.transpose();
    CHECK((info - expected).norm() <= 1e-6 * (expected.norm() + 1e-30));
  }
}

TEST_CASE("fisher information shape cases") {
  SlamScene scene = room_scene(false, false);
  scene.noise.sigma_tau = 1e-10;
  scene.noise.sigma_aoa = 0.01;
  scene.noise.ref_amplitude = 1.0;
  scene.noise.max_scale = 1.0;
  const Vec2 pose{0.0, 0.0};

  SUBCASE("a single path is rank deficient") {
    scene.scatterers = {{2.0, 0.0}};
    auto paths = synthesize_paths(scene, pose, nullptr);
    std::vector<SynthPath> only_scatter;
    for (auto& p : paths)
      if (p.kind == PathKind::kScatterer) {
        p.amplitude = cd(1.0, 0.0);
        only_scatter.push_back(p);
      }
    SlamScene tau_only = scene;
    tau_only.noise.sigma_aoa = 0.0;  // keep just the delay information
    const Eigen::Matrix2d info = fisher_information(tau_only, pose, only_scatter);
    CHECK(std::abs(info.determinant()) <= 1e-12 * info.squaredNorm());
    CHECK_THROWS_AS(crlb_trace(info), std::domain_error);
  }
  SUBCASE("two orthogonal bearings with equal weights are isotropic") {
    // Symmetric placement: sources on the two diagonals at equal range from
    // the agent center, with tx/rx offsets zeroed so ranges match exactly.
    scene.tx_offset = {0.0, 0.0};
    scene.rx_offset = {0.0, 0.0};
    scene.scatterers = {{2.0, 2.0}, {2.0, -2.0}};
    auto paths = synthesize_paths(scene, pose, nullptr);
    std::vector<SynthPath> use;
    for (auto& p : paths)
      if (p.kind == PathKind::kScatterer) {
        p.amplitude = cd(1.0, 0.0);
        use.push_back(p);
      }
    REQUIRE(use.size() == 2);
    const Eigen::Matrix2d info = fisher_information(scene, pose, use);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(info);
    CHECK(eig.eigenvalues()(0) == doctest::Approx(eig.eigenvalues()(1)).epsilon(1e-9));
  }
}

TEST_CASE("crlb-driven configuration selection") {
  const SlamScene scene = room_scene(true, false);
  const Vec2 pose{0.3, -0.2};
  Rng rng(2);
  const auto result = select_config_crlb(scene, pose, 40, rng);
  CHECK(std::isfinite(result.crlb));
  for (std::size_t i = 1; i < result.best_trace.size(); ++i)
    CHECK(result.best_trace[i] <= result.best_trace[i - 1]);

  Rng random_rng(3);
  double acc = 0.0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const auto config = ris::random_config(scene.ris_groups, scene.codebook, random_rng);
    const auto paths = synthesize_paths(scene, pose, &config);
    std::vector<SynthPath> usable;
    for (const auto& p : paths)
      if (p.kind == PathKind::kScatterer) usable.push_back(p);
    acc += crlb_trace(fisher_information(scene, pose, usable));
  }
  CHECK(result.crlb <= acc / trials);
}

TEST_CASE("bearing clustering") {
  SUBCASE("identical bearings form one group") {
    std::vector<PathObservation> obs(3);
    for (auto& o : obs) o.aoa = 0.5;
    CHECK(group_paths(obs, 0.1).size() == 1);
  }
  SUBCASE("two separated bearings form two groups") {
    std::vector<PathObservation> obs(2);
    obs[0].aoa = 0.0;
    obs[1].aoa = kPi / 2.0;
    CHECK(group_paths(obs, 0.1).size() == 2);
  }
  SUBCASE("wraparound bearings merge across the seam") {
    std::vector<PathObservation> obs(2);
    obs[0].aoa = kPi - 0.01;
    obs[1].aoa = -kPi + 0.01;
    CHECK(group_paths(obs, 0.1).size() == 1);
  }
  SUBCASE("synthesized scatterer bearings recover the scatterer count") {
    const SlamScene scene = room_scene(false, false);
    const auto paths = synthesize_paths(scene, {0.0, 0.0}, nullptr);
    std::vector<PathObservation> obs;
    for (const auto& p : paths)
      if (p.kind == PathKind::kScatterer)
        obs.push_back({p.delay, p.aoa, p.amplitude, 0});
    CHECK(group_paths(obs, 0.2).size() == 3);
  }
}

TEST_CASE("back projection inverts the two-segment geometry") {
  const SlamScene scene = room_scene(false, false);
  const Vec2 pose{0.2, 0.1};
  const auto paths = synthesize_paths(scene, pose, nullptr);
  for (const auto& p : paths) {
    if (p.kind != PathKind::kScatterer) continue;
    const auto back = back_project(scene, pose, p.delay, p.aoa);
    REQUIRE(back.has_value());
    CHECK(distance(*back, scene.scatterers[p.scatterer]) < 1e-9);
  }
}

TEST_CASE("ris landmark belief update") {
  SUBCASE("equal likelihoods leave the belief unchanged") {
    const LandmarkBelief belief = LandmarkBelief::uniform(3);
    const std::vector<double> amps{1.0, 1.0, 1.0};
    const std::vector<double> conf{1.0, 1.0, 1.0};
    const std::vector<double> neutral{1.0, 1.0, 1.0};
    const LandmarkBelief out = ris_landmark_update(belief, amps, conf, neutral, 0.1);
    for (int i = 0; i < 3; ++i) CHECK(out.p(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("normalization within 1e-12 over many cycles") {
    LandmarkBelief belief = LandmarkBelief::uniform(4);
    Rng rng(4);
    for (int c = 0; c < 200; ++c) {
      std::vector<double> amps(4), conf(4), neutral(4);
      for (int i = 0; i < 4; ++i) {
        amps[i] = rng.uniform(0.5, 1.5);
        conf[i] = rng.uniform(0.5, 1.5);
        neutral[i] = 1.0;
      }
      belief = ris_landmark_update(belief, amps, conf, neutral, 0.2);
      belief.validate(1e-12);
    }
  }
  SUBCASE("the landmark tracking the configuration wins") {
    Rng rng(5);
    const int seeds = 50;
    int wins = 0;
    for (int seed = 0; seed < seeds; ++seed) {
      Rng stream = rng.fork(static_cast<std::uint64_t>(seed));
      LandmarkBelief belief = LandmarkBelief::uniform(3);
      const int truth = 1;
      for (int c = 0; c < 12; ++c) {
        const double response = c % 2 == 0 ? 1.0 : 0.25;  // configuration flips
        std::vector<double> amps(3), conf(3), neutral(3);
        for (int i = 0; i < 3; ++i) {
          const double base = 1.0;
          const double mean = i == truth ? base * response : base;
          amps[i] = mean + stream.normal(0.0, 0.1);
          conf[i] = base * response;
          neutral[i] = base;
        }
        belief = ris_landmark_update(belief, amps, conf, neutral, 0.1);
      }
      Eigen::Index argmax = 0;
      belief.p.maxCoeff(&argmax);
      if (argmax == truth) ++wins;
    }
    CHECK(wins >= seeds * 9 / 10);
  }
}

TEST_CASE("particle filter step contracts") {
  const SlamScene scene = room_scene(false, false);

  SUBCASE("noise-free observations keep an exact start exact") {
    ParticleSet particles = ParticleSet::initialize(50, {0.0, 0.0});
    Rng rng(6);
    Vec2 pose{0.0, 0.0};
    for (int c = 0; c < 5; ++c) {
      const Vec2 motion{0.05, -0.02};
      pose += motion;
      const auto paths = synthesize_paths(scene, pose, nullptr);
      std::vector<LandmarkObservation> obs;
      int next = 0;
      for (const auto& p : paths)
        if (p.kind == PathKind::kScatterer)
          obs.push_back({next++, p.delay, p.aoa, std::abs(p.amplitude)});
      particles = pf_step(std::move(particles), obs, scene, motion, 0.0, rng);
      CHECK(distance(particles.mean_pose(), pose) < 1e-9);
      double sum = 0.0;
      for (const auto& p : particles.particles) {
        CHECK(p.weight >= 0.0);
        sum += p.weight;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      const double ess = particles.effective_sample_size();
      CHECK(ess >= 1.0 - 1e-12);
      CHECK(ess <= particles.particles.size() + 1e-9);
    }
  }

  SUBCASE("posterior pose matches a dense grid filter") {
    // Two known landmarks, a diffuse initial pose cloud, one update.
    SlamScene known = scene;
    known.scatterers = {{2.0, 0.5}, {-0.5, 2.0}};
    known.noise.sigma_tau = 3e-10;
    known.noise.sigma_aoa = 0.02;
    known.noise.ref_amplitude = 1.0;
    known.noise.max_scale = 1.0;  // unit scaling: fixed R for the oracle

    const Vec2 truth{0.1, -0.05};
    const auto paths = synthesize_paths(known, truth, nullptr);
    std::vector<LandmarkObservation> obs;
    int next = 0;
    for (const auto& p : paths)
      if (p.kind == PathKind::kScatterer)
        obs.push_back({next++, p.delay, p.aoa, std::abs(p.amplitude)});

    const double prior_std = 0.08;
    Rng rng(7);
    ParticleSet particles = ParticleSet::initialize(20000, {0.0, 0.0});
    for (auto& p : particles.particles) {
      p.pose.x += rng.normal(0.0, prior_std);
      p.pose.y += rng.normal(0.0, prior_std);
      // Known map: tight landmark Gaussians at the truth.
      for (const auto& s : known.scatterers) {
        p.landmark_mean.push_back(s);
        p.landmark_cov.push_back(Eigen::Matrix2d::Identity() * 1e-12);
      }
    }
    Rng step_rng(8);
    particles = pf_step(std::move(particles), obs, known, {0.0, 0.0}, 0.0, step_rng);
    const Vec2 pf_mean = particles.mean_pose();

    // Dense grid filter over the pose plane with the same prior and
    // likelihood model.
    const double cell = 0.004;
    double wsum = 0.0;
    Vec2 acc{};
    for (double x = -0.3; x <= 0.3; x += cell) {
      for (double y = -0.3; y <= 0.3; y += cell) {
        const Vec2 pose{x, y};
        double log_w = -(x * x + y * y) / (2.0 * prior_std * prior_std);
        for (const auto& o : obs) {
          const Vec2 lm = known.scatterers[o.landmark];
          const Vec2 tx = pose + known.tx_offset;
          const Vec2 rx = pose + known.rx_offset;
          const double tau = (distance(tx, lm) + distance(lm, rx)) / kSpeedOfLight;
          const double theta = std::atan2(lm.y - rx.y, lm.x - rx.x);
          const double st = known.noise.sigma_tau;
          const double sa = known.noise.sigma_aoa;
          const double dt = (o.delay - tau) / st;
          const double da = wrap_angle(o.aoa - theta) / sa;
          log_w += -0.5 * (dt * dt + da * da);
        }
        const double w = std::exp(log_w);
        wsum += w;
        acc += pose * w;
      }
    }
    const Vec2 grid_mean = acc * (1.0 / wsum);
    CHECK(distance(pf_mean, grid_mean) < 3.0 * cell);
  }
}

TEST_CASE("noise-free slam run stays on the trajectory") {
  SlamScene scene = room_scene(true, false);
  scene.noise.sigma_tau = 0.0;
  scene.noise.sigma_aoa = 0.0;
  scene.noise.sigma_amp = 0.0;
  std::vector<Vec2> trajectory;
  for (int c = 0; c < 8; ++c)
    trajectory.push_back({0.8 * std::cos(kTwoPi * c / 8.0), 0.8 * std::sin(kTwoPi * c / 8.0)});
  SlamOptions options;
  options.particles = 100;
  options.config_budget = 8;
  options.motion_noise_std = 0.0;
  Rng rng(9);
  const auto trace = slam_run(scene, trajectory, Scheme::kProposed, options, rng);
  for (const double err : trace.pose_error) CHECK(err < 1e-2);
}

TEST_CASE("slam run is deterministic") {
  SlamScene scene = room_scene(true, true);
  std::vector<Vec2> trajectory;
  for (int c = 0; c < 6; ++c)
    trajectory.push_back({1.0 * std::cos(kTwoPi * c / 6.0), 1.0 * std::sin(kTwoPi * c / 6.0)});
  SlamOptions options;
  options.particles = 80;
  options.config_budget = 8;
  options.motion_noise_std = 0.02;
  Rng a(10), b(10);
  const auto ta = slam_run(scene, trajectory, Scheme::kRandomConfig, options, a);
  const auto tb = slam_run(scene, trajectory, Scheme::kRandomConfig, options, b);
  CHECK(ta.pose_error == tb.pose_error);
  CHECK(ta.ris_belief_truth == tb.ris_belief_truth);
}
