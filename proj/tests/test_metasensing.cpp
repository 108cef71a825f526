#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rissim/metasensing.hpp"
#include "test_scenes.hpp"

using namespace rissim;
using namespace rissim::metasensing;

namespace {

FrameSchedule random_schedule(const channel::Scene& scene, int frames, Rng& rng) {
  FrameSchedule s;
  s.default_config = testing::zero_config(scene);
  for (int f = 0; f < frames; ++f)
    s.configs.push_back(
        ris::random_config(scene.panel->group_count(), scene.panel->codebook(), rng));
  return s;
}

PostureLibrary two_posture_scalar_library() {
  PostureLibrary lib;
  Posture a;
  a.label = "empty";
  a.reflectivity = Eigen::VectorXcd::Zero(1);
  a.prior = 0.5;
  Posture b;
  b.label = "occupied";
  b.reflectivity = Eigen::VectorXcd::Constant(1, cd(1.0, 0.0));
  b.prior = 0.5;
  lib.postures = {a, b};
  lib.cost = PostureLibrary::zero_one_cost(2);
  return lib;
}

}  // namespace

TEST_CASE("measurement matrix is zero when every frame uses the default") {
  const auto scene = testing::small_scene();
  FrameSchedule s;
  s.default_config = testing::zero_config(scene);
  s.configs.assign(4, s.default_config);
  const Eigen::MatrixXcd gamma = measurement_matrix(scene, s);
  CHECK(gamma.norm() == 0.0);
}

TEST_CASE("single frame single block matches the gain difference") {
  auto scene = testing::small_scene(1, 1);
  scene.panel = ris::RisPanel::grid(1, 1, 0.015, {0, 0, 0}, {0, 1, 0}, {0, 0, 1}, 1, 1,
                                    ris::RisType::kReflective, 0.0, ris::table1_codebook());
  FrameSchedule s;
  s.default_config = ris::RisConfig{{0}};
  s.configs = {ris::RisConfig{{2}}};
  const Eigen::MatrixXcd gamma = measurement_matrix(scene, s);
  const double lambda = scene.subcarriers.wavelength(0);
  const cd expected =
      channel::two_bounce_gain(scene, 0, 0, cd(1.0, 0.0), s.configs[0], lambda) -
      channel::two_bounce_gain(scene, 0, 0, cd(1.0, 0.0), s.default_config, lambda);
  CHECK(std::abs(gamma(0, 0) - expected) < 1e-18);
}

TEST_CASE("simulated cycle equals the linear model without noise") {
  auto scene = testing::small_scene();
  scene.scatter_variance = 4e-8;  // frozen draw must cancel exactly
  Rng rng(5);
  const auto schedule = random_schedule(scene, 6, rng);
  const Eigen::MatrixXcd gamma = measurement_matrix(scene, schedule);
  Eigen::VectorXcd nu(scene.soi.block_count());
  for (int q = 0; q < nu.size(); ++q) nu(q) = cd(0.2 * q, 0.1 - 0.05 * q);
  const cd x(0.8, -0.6);
  Rng cycle_rng = rng.fork("cycle");
  const Eigen::VectorXcd y_hat = simulate_cycle(scene, schedule, nu, x, 0.0, cycle_rng);
  const Eigen::VectorXcd expected = gamma * nu * x;
  CHECK((y_hat - expected).norm() <= 1e-9 * expected.norm());
}

TEST_CASE("measurement pipeline is linear in the reflectivity") {
  auto scene = testing::small_scene();
  Rng rng(6);
  const auto schedule = random_schedule(scene, 5, rng);
  const cd x(1.0, 0.0);
  Eigen::VectorXcd nu1(scene.soi.block_count());
  Eigen::VectorXcd nu2(scene.soi.block_count());
  for (int q = 0; q < nu1.size(); ++q) {
    nu1(q) = cd(0.3, 0.1 * q);
    nu2(q) = cd(-0.2 * q, 0.4);
  }
  Rng r1 = rng.fork(1);
  Rng r2 = rng.fork(1);
  Rng r3 = rng.fork(1);
  const cd a(2.0, 0.5);
  const cd b(-1.0, 0.25);
  const Eigen::VectorXcd lhs =
      simulate_cycle(scene, schedule, a * nu1 + b * nu2, x, 0.0, r1);
  const Eigen::VectorXcd rhs = a * simulate_cycle(scene, schedule, nu1, x, 0.0, r2) +
                               b * simulate_cycle(scene, schedule, nu2, x, 0.0, r3);
  CHECK((lhs - rhs).norm() <= 1e-9 * (lhs.norm() + 1e-300));
}

TEST_CASE("empty space yields a zero measurement vector; doubling scales it") {
  auto scene = testing::small_scene();
  Rng rng(7);
  const auto schedule = random_schedule(scene, 4, rng);
  const cd x(1.0, 0.0);
  Rng r1 = rng.fork(1);
  const Eigen::VectorXcd zero =
      simulate_cycle(scene, schedule, Eigen::VectorXcd::Zero(scene.soi.block_count()), x, 0.0, r1);
  CHECK(zero.norm() == 0.0);

  Eigen::VectorXcd nu = Eigen::VectorXcd::Constant(scene.soi.block_count(), cd(0.5, 0.5));
  Rng r2 = rng.fork(2);
  Rng r3 = rng.fork(2);
  const Eigen::VectorXcd once = simulate_cycle(scene, schedule, nu, x, 0.0, r2);
  const Eigen::VectorXcd twice = simulate_cycle(scene, schedule, 2.0 * nu, x, 0.0, r3);
  CHECK((twice - 2.0 * once).norm() <= 1e-12 * once.norm());
}

TEST_CASE("measurement noise has per-entry variance 2 sigma^2") {
  auto scene = testing::small_scene();
  Rng rng(8);
  const auto schedule = random_schedule(scene, 3, rng);
  const cd x(1.0, 0.0);
  const Eigen::VectorXcd nu = Eigen::VectorXcd::Zero(scene.soi.block_count());
  const double sigma2 = 1e-9;
  const int trials = 30000;
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng trial_rng = rng.fork(static_cast<std::uint64_t>(t));
    const Eigen::VectorXcd y_hat = simulate_cycle(scene, schedule, nu, x, sigma2, trial_rng);
    acc += y_hat.squaredNorm() / y_hat.size();
  }
  CHECK(acc / trials == doctest::Approx(2.0 * sigma2).epsilon(0.03));
}

TEST_CASE("mutual coherence of hand matrices") {
  Eigen::MatrixXcd orth(2, 2);
  orth << cd(1, 0), cd(1, 0), cd(1, 0), cd(-1, 0);
  CHECK(mutual_coherence(orth) == doctest::Approx(0.0).epsilon(1e-15));

  Eigen::MatrixXcd same(3, 2);
  same << cd(1, 0), cd(2, 0), cd(0, 1), cd(0, 2), cd(-1, 1), cd(-2, 2);
  CHECK(mutual_coherence(same) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXcd zero(2, 2);
  zero << cd(1, 0), cd(0, 0), cd(1, 0), cd(0, 0);
  CHECK_THROWS_AS(mutual_coherence(zero), std::invalid_argument);
}

TEST_CASE("mutual coherence matches a naive double loop") {
  Rng rng(9);
  Eigen::MatrixXcd m(8, 4);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = cd(rng.normal(), rng.normal());
  double acc = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      if (a == b) continue;
      cd inner(0.0, 0.0);
      double na = 0.0, nb = 0.0;
      for (int r = 0; r < 8; ++r) {
        inner += std::conj(m(r, a)) * m(r, b);
        na += std::norm(m(r, a));
        nb += std::norm(m(r, b));
      }
      acc += std::abs(inner) / std::sqrt(na * nb);
    }
  const double oracle = acc / (4.0 * 3.0);
  CHECK(mutual_coherence(m) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("mutual coherence is bounded and permutation invariant") {
  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXcd m(5, 4);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = cd(rng.normal(), rng.normal());
    const double mu = mutual_coherence(m);
    CHECK(mu >= 0.0);
    CHECK(mu <= 1.0 + 1e-12);
    Eigen::MatrixXcd perm(5, 4);
    perm.col(0) = m.col(2);
    perm.col(1) = m.col(0);
    perm.col(2) = m.col(3);
    perm.col(3) = m.col(1);
    CHECK(mutual_coherence(perm) == doctest::Approx(mu).epsilon(1e-12));
  }
}

TEST_CASE("coherence optimizer honors the budget and its contracts") {
  const auto scene = testing::small_scene();
  SUBCASE("budget of one returns the first random schedule") {
    Rng rng(11);
    const auto result = optimize_schedule_coherence(scene, 4, 1, rng);
    CHECK(result.evaluations == 1);
    CHECK(result.best_trace.size() == 1);
  }
  SUBCASE("trace is nonincreasing and beats random on average") {
    Rng rng(12);
    const auto result = optimize_schedule_coherence(scene, 4, 120, rng);
    for (std::size_t i = 1; i < result.best_trace.size(); ++i)
      CHECK(result.best_trace[i] <= result.best_trace[i - 1]);

    Rng random_rng(13);
    double acc = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
      const auto schedule = random_schedule(scene, 4, random_rng);
      acc += mutual_coherence(measurement_matrix(scene, schedule));
    }
    CHECK(result.objective <= acc / trials);
  }
}

TEST_CASE("classifier returns the exact posture under zero noise") {
  const auto scene = testing::small_scene();
  Rng rng(14);
  const auto schedule = random_schedule(scene, 6, rng);
  const Eigen::MatrixXcd gamma = measurement_matrix(scene, schedule);
  const int q_count = scene.soi.block_count();

  PostureLibrary lib;
  for (int i = 0; i < 3; ++i) {
    Posture p;
    p.label = "p" + std::to_string(i);
    p.reflectivity = Eigen::VectorXcd::Zero(q_count);
    p.reflectivity(i) = cd(1.0, 0.0);
    p.prior = 1.0 / 3.0;
    lib.postures.push_back(p);
  }
  lib.cost = PostureLibrary::zero_one_cost(3);

  const cd x(1.0, 0.0);
  for (int i = 0; i < 3; ++i) {
    const Eigen::VectorXcd y_hat = gamma * lib.postures[i].reflectivity * x;
    CHECK(map_classify(y_hat, gamma, lib, 0.0, x) == i);
  }
}

namespace {

// Expected cost of an arbitrary scalar decision rule under the two-posture
// instance, by quadrature over the real axis (the imaginary component is
// common to both densities and cancels).
double scalar_rule_cost(const PostureLibrary& lib, double noise_power,
                        const std::function<int(double)>& rule) {
  const double mu0 = 0.0;
  const double mu1 = 1.0;
  const double sigma = std::sqrt(noise_power);  // per-component std of CN(0, 2 sigma^2)
  const double lo = mu0 - 8.0 * sigma;
  const double hi = mu1 + 8.0 * sigma;
  const int steps = 20001;
  const double ds = (hi - lo) / (steps - 1);
  double cost = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double s = lo + k * ds;
    const int decided = rule(s);
    const double w = (k == 0 || k == steps - 1) ? 0.5 : 1.0;
    const double d0 = (s - mu0) / sigma;
    const double d1 = (s - mu1) / sigma;
    const double dens0 = std::exp(-0.5 * d0 * d0) / (sigma * std::sqrt(kTwoPi));
    const double dens1 = std::exp(-0.5 * d1 * d1) / (sigma * std::sqrt(kTwoPi));
    cost += w * ds *
            (lib.postures[0].prior * dens0 * lib.cost(0, decided) +
             lib.postures[1].prior * dens1 * lib.cost(1, decided));
  }
  return cost;
}

int classify_scalar(const PostureLibrary& lib, double noise_power, double s) {
  const Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Identity(1, 1);
  Eigen::VectorXcd y(1);
  y(0) = cd(s, 0.0);
  return map_classify(y, gamma, lib, noise_power, cd(1.0, 0.0));
}

}  // namespace

TEST_CASE("scalar Bayes rule thresholds at the midpoint for symmetric costs") {
  const PostureLibrary lib = two_posture_scalar_library();
  const double noise_power = 0.04;
  CHECK(classify_scalar(lib, noise_power, 0.499) == 0);
  CHECK(classify_scalar(lib, noise_power, 0.501) == 1);

  // The implemented rule's quadrature cost must not exceed any threshold
  // rule's cost; the best threshold sits at the midpoint.
  const double bayes_cost = scalar_rule_cost(lib, noise_power, [&](double s) {
    return classify_scalar(lib, noise_power, s);
  });
  double best_threshold_cost = std::numeric_limits<double>::infinity();
  for (double t = -0.5; t <= 1.5; t += 0.01) {
    const double c =
        scalar_rule_cost(lib, noise_power, [&](double s) { return s < t ? 0 : 1; });
    best_threshold_cost = std::min(best_threshold_cost, c);
  }
  CHECK(bayes_cost <= best_threshold_cost + 1e-6);
}

TEST_CASE("asymmetric costs shift the threshold toward the expensive posture") {
  PostureLibrary lib = two_posture_scalar_library();
  lib.cost(0, 1) = 10.0;  // deciding "occupied" when empty is expensive
  lib.cost(1, 0) = 1.0;
  const double noise_power = 0.04;
  // Find the empirical switch point of the Bayes rule.
  double switch_at = 0.0;
  for (double s = -0.5; s <= 1.5; s += 1e-3) {
    if (classify_scalar(lib, noise_power, s) == 1) {
      switch_at = s;
      break;
    }
  }
  CHECK(switch_at > 0.55);  // moved toward posture 1's mean

  const double bayes_cost = scalar_rule_cost(lib, noise_power, [&](double s) {
    return classify_scalar(lib, noise_power, s);
  });
  double best_threshold_cost = std::numeric_limits<double>::infinity();
  for (double t = -0.5; t <= 1.5; t += 0.005) {
    const double c =
        scalar_rule_cost(lib, noise_power, [&](double s) { return s < t ? 0 : 1; });
    best_threshold_cost = std::min(best_threshold_cost, c);
  }
  CHECK(bayes_cost <= best_threshold_cost + 1e-6);
}

TEST_CASE("average cost endpoints") {
  const PostureLibrary lib = two_posture_scalar_library();
  const Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Identity(1, 1);
  const cd x(1.0, 0.0);
  const auto rule = [&](double noise_power) {
    return DecisionRule([&lib, noise_power](const Eigen::VectorXcd& y) {
      Eigen::MatrixXcd g = Eigen::MatrixXcd::Identity(1, 1);
      return map_classify(y, g, lib, noise_power, cd(1.0, 0.0));
    });
  };
  SUBCASE("no noise, distinct postures: zero cost") {
    Rng rng(15);
    const auto est = avg_cost(rule(0.0), lib, gamma, 0.0, x, 2000, rng);
    CHECK(est.mean == 0.0);
  }
  SUBCASE("overwhelming noise approaches chance level") {
    Rng rng(16);
    const auto est = avg_cost(rule(1e8), lib, gamma, 1e8, x, 20000, rng);
    CHECK(std::abs(est.mean - 0.5) <= 3.0 * est.std_error + 0.01);
  }
  SUBCASE("matches the closed-form error probability") {
    const double noise_power = 0.0625;  // per-component sigma = 0.25
    Rng rng(17);
    const auto est = avg_cost(rule(noise_power), lib, gamma, noise_power, x, 200000, rng);
    const double q = 0.5 * std::erfc((0.5 / 0.25) / std::sqrt(2.0));
    CHECK(std::abs(est.mean - q) <= 3.0 * est.std_error);
  }
}

TEST_CASE("Bayes rule beats fixed and random rules") {
  const PostureLibrary lib = two_posture_scalar_library();
  const Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Identity(1, 1);
  const cd x(1.0, 0.0);
  const double noise_power = 0.25;
  const DecisionRule bayes = [&](const Eigen::VectorXcd& y) {
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Identity(1, 1);
    return map_classify(y, g, lib, noise_power, x);
  };
  Rng r1(18), r2(18), r3(18), r4(18);
  const auto bayes_cost = avg_cost(bayes, lib, gamma, noise_power, x, 100000, r1);
  const auto fixed0 = avg_cost([](const Eigen::VectorXcd&) { return 0; }, lib, gamma,
                               noise_power, x, 100000, r2);
  const auto fixed1 = avg_cost([](const Eigen::VectorXcd&) { return 1; }, lib, gamma,
                               noise_power, x, 100000, r3);
  int flip = 0;
  const auto random_rule = [&flip](const Eigen::VectorXcd&) { return (flip++) % 2; };
  const auto random_cost = avg_cost(random_rule, lib, gamma, noise_power, x, 100000, r4);
  CHECK(bayes_cost.mean <= fixed0.mean + 3.0 * fixed0.std_error);
  CHECK(bayes_cost.mean <= fixed1.mean + 3.0 * fixed1.std_error);
  CHECK(bayes_cost.mean <= random_cost.mean + 3.0 * random_cost.std_error);
}

TEST_CASE("classifier argmin is invariant to uniform cost rescaling") {
  const auto scene = testing::small_scene();
  Rng rng(19);
  const auto schedule = random_schedule(scene, 4, rng);
  const Eigen::MatrixXcd gamma = measurement_matrix(scene, schedule);
  const int q_count = scene.soi.block_count();
  PostureLibrary lib;
  for (int i = 0; i < 3; ++i) {
    Posture p;
    p.label = std::to_string(i);
    p.reflectivity = Eigen::VectorXcd::Zero(q_count);
    p.reflectivity(i) = cd(1.0, 0.0);
    p.prior = i == 0 ? 0.5 : 0.25;
    lib.postures.push_back(p);
  }
  lib.cost = PostureLibrary::zero_one_cost(3);
  PostureLibrary scaled = lib;
  scaled.cost = 3.0 * lib.cost;  // uniform off-diagonal shift of a 0-1 matrix

  const cd x(1.0, 0.0);
  const double noise_power = 1e-7;
  for (int t = 0; t < 50; ++t) {
    Rng draw = rng.fork(static_cast<std::uint64_t>(t));
    Eigen::VectorXcd y = gamma * lib.postures[t % 3].reflectivity * x;
    for (Eigen::Index f = 0; f < y.size(); ++f) y(f) += draw.complex_normal(2.0 * noise_power);
    CHECK(map_classify(y, gamma, lib, noise_power, x) ==
          map_classify(y, gamma, scaled, noise_power, x));
  }
}

TEST_CASE("occupancy reconstruction endpoints") {
  const int q = 16;
  const Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Identity(q, q);
  const cd x(1.0, 0.0);
  SUBCASE("empty space stays below half") {
    const Eigen::VectorXd p = reconstruct_occupancy(Eigen::VectorXcd::Zero(q), gamma, x);
    for (int i = 0; i < q; ++i) CHECK(p(i) < 0.5);
  }
  SUBCASE("single occupied block is recovered decisively") {
    Eigen::VectorXcd nu = Eigen::VectorXcd::Zero(q);
    nu(5) = cd(1.0, 0.0);
    const Eigen::VectorXd p = reconstruct_occupancy(gamma * nu * x, gamma, x);
    for (int i = 0; i < q; ++i) {
      if (i == 5)
        CHECK(p(i) > 0.99);
      else
        CHECK(p(i) < 0.01);
    }
  }
}

TEST_CASE("cross entropy values") {
  Eigen::VectorXcd truth(3);
  truth << cd(1.0, 0.0), cd(0.0, 0.0), cd(0.0, 0.0);
  SUBCASE("perfect estimate is essentially free") {
    Eigen::VectorXd p(3);
    p << 1.0, 0.0, 0.0;
    CHECK(cross_entropy(p, truth) <= 3.0 * std::log(1.0 / (1.0 - 1e-9)) + 1e-12);
  }
  SUBCASE("uninformative estimate costs Q ln 2") {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 0.5);
    CHECK(cross_entropy(p, truth) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
  }
  SUBCASE("hand-computed three-block case") {
    Eigen::VectorXd p(3);
    p << 0.9, 0.2, 0.1;
    // -(ln 0.9 + ln 0.8 + ln 0.9), evaluated independently.
    CHECK(cross_entropy(p, truth) == doctest::Approx(0.43386458262986227).epsilon(1e-12));
  }
}

TEST_CASE("greedy schedule search matches brute force on a one-decision instance") {
  auto scene = testing::small_scene();
  scene.panel = ris::RisPanel::grid(2, 2, 0.015, {0, 0, 0}, {0, 1, 0}, {0, 0, 1}, 2, 2,
                                    ris::RisType::kReflective, 0.0, ris::table1_codebook());
  // Deterministic toy loss keyed on the single group state.
  const auto eval = [](const FrameSchedule& s) {
    const int state = s.configs[0].states[0];
    const double losses[4] = {0.7, 0.2, 0.9, 0.4};
    return losses[state];
  };
  Rng rng(20);
  const auto result = greedy_config_search(scene, 1, eval, 16, rng);
  CHECK(result.objective == doctest::Approx(0.2));
  CHECK(result.schedule.configs[0].states[0] == 1);
}

TEST_CASE("greedy schedule search never returns worse than its initialization") {
  const auto scene = testing::small_scene();
  const auto eval = [](const FrameSchedule& s) {
    double acc = 0.0;
    for (const auto& c : s.configs)
      for (const int st : c.states) acc += st * 0.37 - (st == 2 ? 1.1 : 0.0);
    return acc;
  };
  Rng rng(21);
  Rng init_rng = rng.fork("greedy");
  const auto result = greedy_config_search(scene, 3, eval, 200, init_rng);
  Rng same_init = rng.fork("greedy");
  const auto initial_only = greedy_config_search(scene, 3, eval, 1, same_init);
  CHECK(result.objective <= initial_only.objective);
}
