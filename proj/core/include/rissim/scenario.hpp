#ifndef RISSIM_SCENARIO_HPP
#define RISSIM_SCENARIO_HPP

#include <optional>
#include <string>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/common.hpp"
#include "rissim/metaslam.hpp"

namespace rissim::harness {

/// Declarative panel description; the RisPanel geometry is generated from it.
struct PanelSpec {
  int rows = 24;
  int cols = 24;
  double pitch = 0.02;
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 x_axis{0.0, 1.0, 0.0};
  Vec3 y_axis{0.0, 0.0, 1.0};
  int group_rows = 6;
  int group_cols = 6;
  std::string type = "reflective";
  double beta = 1.0;
  std::vector<ris::PhaseState> codebook;  // empty: the built-in 4-state profile

  ris::RisPanel build() const;
};

struct SceneSpec {
  // The feed sits almost on the panel axis: mirror-image block pairs then
  // differ by a fraction of a dB, which keeps the fixed-configuration
  // fingerprint map nearly ambiguous while any asymmetric configuration
  // separates them.
  Vec3 tx_position{2.4, 0.002, 0.003};
  double tx_gain = 1.0;
  Vec3 rx_position{1.8, -1.5, 0.0};
  double rx_gain = 1.0;
  int rx_antennas = 4;
  double rx_spacing = 0.047;
  Vec3 rx_axis{0.0, 1.0, 0.0};
  std::optional<PanelSpec> ris = PanelSpec{};
  // Blocks spread across directions seen from the panel: one range layer,
  // cross-range divisions. Range-stacked blocks are indistinguishable to a
  // narrowband aperture.
  Vec3 soi_origin{0.8, -0.4, -0.4};
  Vec3 soi_side{0.2, 0.8, 0.8};
  std::array<int, 3> soi_divisions{1, 3, 3};
  int subcarrier_count = 1;
  double center_frequency = 3.198e9;
  double subcarrier_spacing = 312500.0;
  double scatter_variance = 0.0;
  double noise_power = 1e-9;

  channel::Scene build() const;
};

/// Sensing-experiment knobs: schedule length, search budget, the synthetic
/// posture library shape, and the occupancy squashing parameters.
struct SenseParams {
  int frames = 8;
  int budget = 160;
  int postures = 4;
  int occupied_blocks = 3;
  double probe_amplitude = 1.0;
  int cost_trials = 400;
  double occupancy_threshold = 0.5;
  double occupancy_scale = 0.5 / 6.0;
};

struct RadarSectionParams {
  int blocks = 4;
  double block_span = 1.2;  // rad; block bearings spread evenly over the span
  int r_min = 1;
  int r_max = 2;
  int delay_grid = 8;
  double noise_power = 0.05;
  int budget = 48;
};

struct LocalizeParams {
  int users = 1;
  std::vector<int> user_blocks;  // empty: drawn uniformly per seed
  double sigma_rss = 1.0;        // dB
  int budget = 48;
};

struct SlamSectionParams {
  double room_half = 3.0;  // square room [-h, h]^2, four wall reflectors
  std::vector<Vec2> scatterers{{2.2, 1.6}, {-2.0, 1.2}, {0.8, -2.1}};
  Vec2 ris_position{-1.2, 2.4};
  bool with_ris = true;
  int ris_groups = 4;
  int particles = 500;
  int config_budget = 24;
  double trajectory_radius = 1.2;
  double motion_noise_std = 0.02;
  double sigma_tau = 2e-10;
  double sigma_aoa = 0.015;
  double sigma_amp = 4e-5;
  double ref_amplitude = 1e-3;
};

struct RunParams {
  std::uint64_t seed = 1;
  int seeds = 1;
  int cycles = 10;
  std::string scheme;  // empty: module default
  std::string format = "csv";
  std::string out = "out";
};

struct ScenarioSpec {
  std::string id = "desk";
  std::vector<std::string> modules{"sense"};
  SceneSpec scene;
  SenseParams sense;
  RadarSectionParams radar;
  LocalizeParams localize;
  SlamSectionParams slam;
  RunParams run;
};

/// Parse and validate a scenario; every violation names the offending key.
/// Unknown keys are rejected and defaults fill whatever is omitted.
ScenarioSpec load_scenario(const std::string& path);
ScenarioSpec parse_scenario(const std::string& json_text);
std::string scenario_to_json(const ScenarioSpec& spec);

bool scenario_equal(const ScenarioSpec& a, const ScenarioSpec& b);

/// Build the SLAM world from the scenario section.
metaslam::SlamScene make_slam_scene(const SlamSectionParams& params);

/// Circular trajectory of `cycles` poses inside the room.
std::vector<Vec2> make_slam_trajectory(const SlamSectionParams& params, int cycles);

}  // namespace rissim::harness

#endif  // RISSIM_SCENARIO_HPP
