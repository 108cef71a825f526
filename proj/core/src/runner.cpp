#include "rissim/runner.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <thread>

#include "rissim/metalocalization.hpp"
#include "rissim/metaradar.hpp"
#include "rissim/metaslam.hpp"

namespace rissim::harness {

namespace {

metaradar::RadarScene make_radar_scene(const ScenarioSpec& spec) {
  const channel::Scene scene = spec.scene.build();
  metaradar::RadarScene radar;
  radar.array = scene.rx;
  radar.panel = scene.panel;
  radar.wavelength = kSpeedOfLight / spec.scene.center_frequency;
  radar.noise_power = spec.radar.noise_power;
  radar.delay_grid = spec.radar.delay_grid;
  const int blocks = spec.radar.blocks;
  for (int b = 0; b < blocks; ++b) {
    const double frac = blocks > 1 ? static_cast<double>(b) / (blocks - 1) : 0.5;
    radar.block_angles.push_back(-spec.radar.block_span / 2.0 +
                                 frac * spec.radar.block_span);
  }
  return radar;
}

std::vector<RunRecord> sense_seed(const ScenarioSpec& spec, const std::string& scheme,
                                  std::uint64_t seed_value, Rng rng,
                                  const metasensing::PostureLibrary& library) {
  const channel::Scene scene = spec.scene.build();
  const int q_count = scene.soi.block_count();
  const cd x(spec.sense.probe_amplitude, 0.0);
  const double sigma2 = scene.noise_power;
  std::vector<RunRecord> records;

  for (int c = 0; c < spec.run.cycles; ++c) {
    Rng cycle_rng = rng.fork(static_cast<std::uint64_t>(c));
    metasensing::FrameSchedule schedule;
    if (scheme == "optimized") {
      Rng opt_rng = cycle_rng.fork("opt");
      schedule = metasensing::optimize_schedule_coherence(scene, spec.sense.frames,
                                                          spec.sense.budget, opt_rng)
                     .schedule;
    } else {
      Rng sched_rng = cycle_rng.fork("sched");
      schedule.default_config =
          ris::RisConfig{std::vector<int>(scene.panel->group_count(), 0)};
      for (int f = 0; f < spec.sense.frames; ++f)
        schedule.configs.push_back(
            ris::random_config(scene.panel->group_count(), scene.panel->codebook(), sched_rng));
    }

    const Eigen::MatrixXcd gamma = metasensing::measurement_matrix(scene, schedule);
    double coherence = 1.0;
    try {
      coherence = metasensing::mutual_coherence(gamma);
    } catch (const std::invalid_argument&) {
    }

    Rng cost_rng = cycle_rng.fork("cost");
    const auto rule = [&](const Eigen::VectorXcd& y_hat) {
      return metasensing::map_classify(y_hat, gamma, library, sigma2, x);
    };
    const auto cost =
        metasensing::avg_cost(rule, library, gamma, sigma2, x, spec.sense.cost_trials, cost_rng);

    // Unknown-object sketch: random occupancy, model-level measurement,
    // ridge reconstruction scored by cross entropy.
    Rng occ_rng = cycle_rng.fork("occupancy");
    Eigen::VectorXcd nu = Eigen::VectorXcd::Zero(q_count);
    std::set<int> occupied;
    while (static_cast<int>(occupied.size()) < std::min(spec.sense.occupied_blocks, q_count))
      occupied.insert(occ_rng.uniform_int(q_count));
    for (const int q : occupied) nu(q) = cd(1.0, 0.0);
    Rng meas_rng = cycle_rng.fork("meas");
    Eigen::VectorXcd y_hat = gamma * nu * x;
    for (Eigen::Index f = 0; f < y_hat.size(); ++f)
      y_hat(f) += meas_rng.complex_normal(2.0 * sigma2);
    metasensing::OccupancyMapping mapping;
    mapping.threshold = spec.sense.occupancy_threshold;
    mapping.scale = spec.sense.occupancy_scale;
    const Eigen::VectorXd p_hat = metasensing::reconstruct_occupancy(y_hat, gamma, x, mapping);
    const double ce = metasensing::cross_entropy(p_hat, nu);

    records.push_back({spec.id, "sense", scheme, seed_value, c, "coherence", coherence});
    records.push_back({spec.id, "sense", scheme, seed_value, c, "avg_cost", cost.mean});
    records.push_back({spec.id, "sense", scheme, seed_value, c, "cross_entropy", ce});
  }
  return records;
}

std::vector<RunRecord> radar_seed(const ScenarioSpec& spec, const std::string& scheme,
                                  std::uint64_t seed_value, Rng rng) {
  const metaradar::RadarScene radar = make_radar_scene(spec);
  const auto hypotheses =
      metaradar::enumerate_hypotheses(spec.radar.r_min, spec.radar.r_max, spec.radar.blocks);

  Rng truth_rng = rng.fork("truth");
  metaradar::Truth truth;
  truth.hypothesis = hypotheses[truth_rng.uniform_int(static_cast<int>(hypotheses.size()))];
  const double tau_step = 1.0 / (radar.carrier_frequency() * radar.delay_grid);
  for (std::size_t r = 0; r < truth.hypothesis.blocks.size(); ++r) {
    truth.delays.push_back(truth_rng.uniform_int(radar.delay_grid) * tau_step);
    truth.amplitudes.push_back(1.0);
  }

  metaradar::Scheme s = metaradar::Scheme::kOptimized;
  if (scheme == "random") s = metaradar::Scheme::kRandom;
  if (scheme == "no_ris") s = metaradar::Scheme::kNoRis;

  Rng detect_rng = rng.fork("detect");
  const auto result = metaradar::detect(radar, hypotheses, truth, spec.run.cycles,
                                        spec.radar.budget, s, detect_rng);

  std::vector<RunRecord> records;
  for (int c = 0; c < spec.run.cycles; ++c) {
    records.push_back(
        {spec.id, "radar", scheme, seed_value, c, "posterior_truth", result.truth_posterior[c]});
    records.push_back({spec.id, "radar", scheme, seed_value, c, "correct",
                       static_cast<double>(result.correct[c])});
  }
  return records;
}

std::vector<RunRecord> localize_seed(const ScenarioSpec& spec, const std::string& scheme,
                                     std::uint64_t seed_value, Rng rng) {
  const channel::Scene scene = spec.scene.build();
  std::vector<int> blocks = spec.localize.user_blocks;
  if (blocks.empty()) {
    Rng user_rng = rng.fork("users");
    for (int i = 0; i < spec.localize.users; ++i)
      blocks.push_back(user_rng.uniform_int(scene.soi.block_count()));
  }

  metalocalization::Scheme s = metalocalization::Scheme::kGreedy;
  if (scheme == "fixed") s = metalocalization::Scheme::kFixed;
  if (scheme == "random") s = metalocalization::Scheme::kRandom;
  if (scheme == "sim_anneal") s = metalocalization::Scheme::kSimAnneal;

  Rng loc_rng = rng.fork("loc");
  const auto trace = metalocalization::localize_run(scene, blocks, spec.run.cycles, s,
                                                    spec.localize.budget,
                                                    spec.localize.sigma_rss, loc_rng);
  std::vector<RunRecord> records;
  for (int c = 0; c < spec.run.cycles; ++c)
    records.push_back(
        {spec.id, "localize", scheme, seed_value, c, "mean_error", trace.mean_error[c]});
  return records;
}

std::vector<RunRecord> slam_seed(const ScenarioSpec& spec, const std::string& scheme,
                                 std::uint64_t seed_value, Rng rng) {
  const metaslam::SlamScene scene = make_slam_scene(spec.slam);
  const auto trajectory = make_slam_trajectory(spec.slam, spec.run.cycles);

  metaslam::Scheme s = metaslam::Scheme::kProposed;
  if (scheme == "random_config") s = metaslam::Scheme::kRandomConfig;
  if (scheme == "no_ris") s = metaslam::Scheme::kNoRis;

  metaslam::SlamOptions options;
  options.particles = spec.slam.particles;
  options.config_budget = spec.slam.config_budget;
  options.motion_noise_std = spec.slam.motion_noise_std;

  Rng slam_rng = rng.fork("slam");
  const auto trace = metaslam::slam_run(scene, trajectory, s, options, slam_rng);
  std::vector<RunRecord> records;
  for (int c = 0; c < spec.run.cycles; ++c) {
    records.push_back(
        {spec.id, "slam", scheme, seed_value, c, "pose_error", trace.pose_error[c]});
    records.push_back(
        {spec.id, "slam", scheme, seed_value, c, "ris_belief", trace.ris_belief_truth[c]});
    records.push_back({spec.id, "slam", scheme, seed_value, c, "landmarks",
                       static_cast<double>(trace.landmarks[c])});
  }
  return records;
}

}  // namespace

std::vector<std::string> schemes_for(const std::string& module) {
  if (module == "sense") return {"optimized", "random"};
  if (module == "radar") return {"optimized", "random", "no_ris"};
  if (module == "localize") return {"greedy", "random", "sim_anneal", "fixed"};
  if (module == "slam") return {"proposed", "random_config", "no_ris"};
  throw std::invalid_argument("schemes_for: unknown module " + module);
}

metasensing::PostureLibrary make_posture_library(const ScenarioSpec& spec) {
  const int q_count =
      spec.scene.soi_divisions[0] * spec.scene.soi_divisions[1] * spec.scene.soi_divisions[2];
  const int count = spec.sense.postures;
  // The library is part of the task, not the per-seed randomness: derive it
  // from the root seed only so every seed classifies the same posture set.
  Rng rng = Rng(spec.run.seed).fork("posture-library");

  metasensing::PostureLibrary library;
  std::set<std::vector<int>> supports;
  while (static_cast<int>(library.postures.size()) < count) {
    std::set<int> occupied;
    while (static_cast<int>(occupied.size()) < std::min(spec.sense.occupied_blocks, q_count))
      occupied.insert(rng.uniform_int(q_count));
    std::vector<int> support(occupied.begin(), occupied.end());
    if (!supports.insert(support).second) continue;  // postures must differ
    metasensing::Posture posture;
    posture.label = "posture-" + std::to_string(library.postures.size());
    posture.reflectivity = Eigen::VectorXcd::Zero(q_count);
    for (const int q : support) posture.reflectivity(q) = cd(1.0, 0.0);
    posture.prior = 1.0 / count;
    library.postures.push_back(std::move(posture));
  }
  library.cost = metasensing::PostureLibrary::zero_one_cost(count);
  return library;
}

std::vector<RunRecord> run_module(const ScenarioSpec& spec, const std::string& module,
                                  const std::string& scheme) {
  const auto known = schemes_for(module);
  if (std::find(known.begin(), known.end(), scheme) == known.end())
    throw std::invalid_argument("run: scheme " + scheme + " not valid for module " + module);

  metasensing::PostureLibrary library;
  if (module == "sense") library = make_posture_library(spec);

  const auto run_seed = [&](int index) {
    const std::uint64_t seed_value = spec.run.seed + static_cast<std::uint64_t>(index);
    // Streams never mix the scheme into the key: paired-seed comparisons
    // across schemes see identical draws wherever consumption aligns.
    Rng rng = Rng(seed_value).fork(module);
    if (module == "sense") return sense_seed(spec, scheme, seed_value, rng, library);
    if (module == "radar") return radar_seed(spec, scheme, seed_value, rng);
    if (module == "localize") return localize_seed(spec, scheme, seed_value, rng);
    return slam_seed(spec, scheme, seed_value, rng);
  };

  std::vector<std::future<std::vector<RunRecord>>> futures;
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<RunRecord> records;
  for (int start = 0; start < spec.run.seeds; start += static_cast<int>(workers)) {
    const int end = std::min(spec.run.seeds, start + static_cast<int>(workers));
    futures.clear();
    for (int i = start; i < end; ++i)
      futures.push_back(std::async(std::launch::async, run_seed, i));
    for (auto& f : futures) {
      auto batch = f.get();
      records.insert(records.end(), batch.begin(), batch.end());
    }
  }
  return records;
}

std::vector<RunRecord> run(const ScenarioSpec& spec) {
  std::vector<RunRecord> records;
  for (const std::string& module : spec.modules) {
    const std::string scheme =
        spec.run.scheme.empty() ? schemes_for(module).front() : spec.run.scheme;
    auto batch = run_module(spec, module, scheme);
    records.insert(records.end(), batch.begin(), batch.end());
  }
  return records;
}

}  // namespace rissim::harness
