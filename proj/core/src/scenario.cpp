#include "rissim/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rissim::harness {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& message) {
  throw std::invalid_argument("scenario: " + key + ": " + message);
}

void require_keys(const ordered_json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key)) fail(path + "." + key, "unknown key");
}

double get_number(const ordered_json& obj, const std::string& path, const std::string& key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
  return obj[key].get<double>();
}

int get_int(const ordered_json& obj, const std::string& path, const std::string& key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) fail(path + "." + key, "expected an integer");
  return obj[key].get<int>();
}

std::string get_string(const ordered_json& obj, const std::string& path, const std::string& key,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string()) fail(path + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

Vec3 get_vec3(const ordered_json& obj, const std::string& path, const std::string& key,
              const Vec3& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj[key];
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() ||
      !v[2].is_number())
    fail(path + "." + key, "expected [x, y, z]");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

Vec2 get_vec2(const ordered_json& node, const std::string& path) {
  if (!node.is_array() || node.size() != 2 || !node[0].is_number() || !node[1].is_number())
    fail(path, "expected [x, y]");
  return {node[0].get<double>(), node[1].get<double>()};
}

ordered_json vec3_json(const Vec3& v) { return ordered_json::array({v.x, v.y, v.z}); }

std::vector<ris::PhaseState> parse_codebook(const ordered_json& node, const std::string& path) {
  if (node.is_string()) {
    const std::string s = node.get<std::string>();
    if (s == "table1") return {};  // empty marks the built-in profile
    if (s.rfind("uniform:", 0) == 0) {
      const int k = std::atoi(s.c_str() + 8);
      if (k < 2) fail(path, "uniform codebook needs K >= 2");
      return ris::PhaseCodebook::uniform(k).states();
    }
    fail(path, "expected \"table1\", \"uniform:<K>\", or a state array");
  }
  if (!node.is_array() || node.size() < 2) fail(path, "expected at least two states");
  std::vector<ris::PhaseState> states;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string spath = path + "[" + std::to_string(i) + "]";
    require_keys(node[i], spath, {"phase", "amplitude"});
    ris::PhaseState st;
    st.phase = get_number(node[i], spath, "phase", 0.0);
    st.amplitude = get_number(node[i], spath, "amplitude", 1.0);
    states.push_back(st);
  }
  try {
    ris::PhaseCodebook check(states);  // validates phases/amplitudes
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return states;
}

PanelSpec parse_panel(const ordered_json& node, const std::string& path) {
  require_keys(node, path,
               {"rows", "cols", "pitch", "center", "x_axis", "y_axis", "group_rows", "group_cols",
                "type", "beta", "codebook"});
  PanelSpec p;
  p.rows = get_int(node, path, "rows", p.rows);
  p.cols = get_int(node, path, "cols", p.cols);
  p.pitch = get_number(node, path, "pitch", p.pitch);
  p.center = get_vec3(node, path, "center", p.center);
  p.x_axis = get_vec3(node, path, "x_axis", p.x_axis);
  p.y_axis = get_vec3(node, path, "y_axis", p.y_axis);
  p.group_rows = get_int(node, path, "group_rows", p.group_rows);
  p.group_cols = get_int(node, path, "group_cols", p.group_cols);
  p.type = get_string(node, path, "type", p.type);
  if (node.contains("beta") && node["beta"].is_string()) {
    if (node["beta"].get<std::string>() != "inf") fail(path + ".beta", "expected number or \"inf\"");
    p.beta = std::numeric_limits<double>::infinity();
  } else {
    p.beta = get_number(node, path, "beta", p.beta);
  }
  if (node.contains("codebook")) p.codebook = parse_codebook(node["codebook"], path + ".codebook");
  if (p.type != "reflective" && p.type != "refractive" && p.type != "hybrid")
    fail(path + ".type", "expected reflective, refractive, or hybrid");
  try {
    p.build();  // surfaces geometry violations at load time
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
  return p;
}

}  // namespace

ris::RisPanel PanelSpec::build() const {
  ris::RisType t = ris::RisType::kReflective;
  if (type == "refractive") t = ris::RisType::kRefractive;
  if (type == "hybrid") t = ris::RisType::kHybrid;
  ris::PhaseCodebook cb = codebook.empty() ? ris::table1_codebook() : ris::PhaseCodebook(codebook);
  return ris::RisPanel::grid(rows, cols, pitch, center, x_axis, y_axis, group_rows, group_cols, t,
                             beta, std::move(cb));
}

channel::Scene SceneSpec::build() const {
  channel::Scene scene;
  scene.tx.position = tx_position;
  scene.tx.gain = tx_gain;
  scene.rx.position = rx_position;
  scene.rx.gain = rx_gain;
  scene.rx.antenna_count = rx_antennas;
  scene.rx.spacing = rx_spacing;
  scene.rx.axis = rx_axis;
  if (ris) scene.panel = ris->build();
  scene.soi.origin = soi_origin;
  scene.soi.side = soi_side;
  scene.soi.divisions = soi_divisions;
  scene.subcarriers.count = subcarrier_count;
  scene.subcarriers.center_frequency = center_frequency;
  scene.subcarriers.spacing = subcarrier_spacing;
  scene.scatter_variance = scatter_variance;
  scene.noise_power = noise_power;
  return scene;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("scenario: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

ScenarioSpec parse_scenario(const std::string& json_text) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario: parse failure: ") + e.what());
  }
  require_keys(root, "spec",
               {"id", "modules", "scene", "sense", "radar", "localize", "slam", "run"});

  ScenarioSpec spec;
  spec.id = get_string(root, "spec", "id", spec.id);

  if (root.contains("modules")) {
    if (!root["modules"].is_array() || root["modules"].empty())
      fail("spec.modules", "expected a nonempty array");
    spec.modules.clear();
    for (const auto& m : root["modules"]) {
      if (!m.is_string()) fail("spec.modules", "entries must be strings");
      const std::string name = m.get<std::string>();
      if (name != "sense" && name != "radar" && name != "localize" && name != "slam")
        fail("spec.modules", "unknown module " + name);
      spec.modules.push_back(name);
    }
  }

  if (root.contains("scene")) {
    const ordered_json& node = root["scene"];
    const std::string path = "scene";
    require_keys(node, path,
                 {"tx", "rx", "ris", "soi", "subcarriers", "scatter_variance", "noise_power"});
    if (node.contains("tx")) {
      require_keys(node["tx"], "scene.tx", {"position", "gain"});
      spec.scene.tx_position = get_vec3(node["tx"], "scene.tx", "position", spec.scene.tx_position);
      spec.scene.tx_gain = get_number(node["tx"], "scene.tx", "gain", spec.scene.tx_gain);
      if (spec.scene.tx_gain < 0.0) fail("scene.tx.gain", "must be >= 0");
    }
    if (node.contains("rx")) {
      require_keys(node["rx"], "scene.rx", {"position", "gain", "antennas", "spacing", "axis"});
      spec.scene.rx_position = get_vec3(node["rx"], "scene.rx", "position", spec.scene.rx_position);
      spec.scene.rx_gain = get_number(node["rx"], "scene.rx", "gain", spec.scene.rx_gain);
      spec.scene.rx_antennas = get_int(node["rx"], "scene.rx", "antennas", spec.scene.rx_antennas);
      spec.scene.rx_spacing = get_number(node["rx"], "scene.rx", "spacing", spec.scene.rx_spacing);
      spec.scene.rx_axis = get_vec3(node["rx"], "scene.rx", "axis", spec.scene.rx_axis);
      if (spec.scene.rx_gain < 0.0) fail("scene.rx.gain", "must be >= 0");
      if (spec.scene.rx_antennas < 1) fail("scene.rx.antennas", "must be >= 1");
      if (spec.scene.rx_spacing <= 0.0) fail("scene.rx.spacing", "must be positive");
    }
    if (node.contains("ris")) {
      if (node["ris"].is_null())
        spec.scene.ris.reset();
      else
        spec.scene.ris = parse_panel(node["ris"], "scene.ris");
    }
    if (node.contains("soi")) {
      require_keys(node["soi"], "scene.soi", {"origin", "side", "divisions"});
      spec.scene.soi_origin = get_vec3(node["soi"], "scene.soi", "origin", spec.scene.soi_origin);
      spec.scene.soi_side = get_vec3(node["soi"], "scene.soi", "side", spec.scene.soi_side);
      if (node["soi"].contains("divisions")) {
        const auto& d = node["soi"]["divisions"];
        if (!d.is_array() || d.size() != 3) fail("scene.soi.divisions", "expected [nx, ny, nz]");
        for (int i = 0; i < 3; ++i) {
          if (!d[i].is_number_integer() || d[i].get<int>() < 1)
            fail("scene.soi.divisions", "entries must be positive integers");
          spec.scene.soi_divisions[i] = d[i].get<int>();
        }
      }
      if (spec.scene.soi_side.x <= 0 || spec.scene.soi_side.y <= 0 || spec.scene.soi_side.z <= 0)
        fail("scene.soi.side", "must be positive");
    }
    if (node.contains("subcarriers")) {
      require_keys(node["subcarriers"], "scene.subcarriers",
                   {"count", "center_frequency", "spacing"});
      spec.scene.subcarrier_count =
          get_int(node["subcarriers"], "scene.subcarriers", "count", spec.scene.subcarrier_count);
      spec.scene.center_frequency = get_number(node["subcarriers"], "scene.subcarriers",
                                               "center_frequency", spec.scene.center_frequency);
      spec.scene.subcarrier_spacing = get_number(node["subcarriers"], "scene.subcarriers",
                                                 "spacing", spec.scene.subcarrier_spacing);
      if (spec.scene.subcarrier_count < 1) fail("scene.subcarriers.count", "must be >= 1");
      if (spec.scene.center_frequency <= 0.0)
        fail("scene.subcarriers.center_frequency", "must be positive");
      if (spec.scene.subcarrier_spacing < 0.0) fail("scene.subcarriers.spacing", "must be >= 0");
    }
    spec.scene.scatter_variance =
        get_number(node, path, "scatter_variance", spec.scene.scatter_variance);
    if (spec.scene.scatter_variance < 0.0) fail("scene.scatter_variance", "must be >= 0");
    spec.scene.noise_power = get_number(node, path, "noise_power", spec.scene.noise_power);
    if (spec.scene.noise_power < 0.0) fail("scene.noise_power", "must be >= 0");
  }

  {
    const ordered_json node = root.contains("sense") ? root["sense"] : ordered_json::object();
    require_keys(node, "sense",
                 {"frames", "budget", "postures", "occupied_blocks", "probe_amplitude",
                  "cost_trials", "occupancy_threshold", "occupancy_scale"});
    spec.sense.frames = get_int(node, "sense", "frames", spec.sense.frames);
    spec.sense.budget = get_int(node, "sense", "budget", spec.sense.budget);
    spec.sense.postures = get_int(node, "sense", "postures", spec.sense.postures);
    spec.sense.occupied_blocks =
        get_int(node, "sense", "occupied_blocks", spec.sense.occupied_blocks);
    spec.sense.probe_amplitude =
        get_number(node, "sense", "probe_amplitude", spec.sense.probe_amplitude);
    spec.sense.cost_trials = get_int(node, "sense", "cost_trials", spec.sense.cost_trials);
    spec.sense.occupancy_threshold =
        get_number(node, "sense", "occupancy_threshold", spec.sense.occupancy_threshold);
    spec.sense.occupancy_scale =
        get_number(node, "sense", "occupancy_scale", spec.sense.occupancy_scale);
    if (spec.sense.frames < 1) fail("sense.frames", "must be >= 1");
    if (spec.sense.budget < 1) fail("sense.budget", "must be >= 1");
    if (spec.sense.postures < 2) fail("sense.postures", "must be >= 2");
    if (spec.sense.occupied_blocks < 1) fail("sense.occupied_blocks", "must be >= 1");
    if (spec.sense.cost_trials < 1) fail("sense.cost_trials", "must be >= 1");
    if (spec.sense.occupancy_scale <= 0.0) fail("sense.occupancy_scale", "must be positive");
  }

  {
    const ordered_json node = root.contains("radar") ? root["radar"] : ordered_json::object();
    require_keys(node, "radar",
                 {"blocks", "block_span", "r_min", "r_max", "delay_grid", "noise_power", "budget"});
    spec.radar.blocks = get_int(node, "radar", "blocks", spec.radar.blocks);
    spec.radar.block_span = get_number(node, "radar", "block_span", spec.radar.block_span);
    spec.radar.r_min = get_int(node, "radar", "r_min", spec.radar.r_min);
    spec.radar.r_max = get_int(node, "radar", "r_max", spec.radar.r_max);
    spec.radar.delay_grid = get_int(node, "radar", "delay_grid", spec.radar.delay_grid);
    spec.radar.noise_power = get_number(node, "radar", "noise_power", spec.radar.noise_power);
    spec.radar.budget = get_int(node, "radar", "budget", spec.radar.budget);
    if (spec.radar.blocks < 1) fail("radar.blocks", "must be >= 1");
    if (spec.radar.block_span <= 0.0) fail("radar.block_span", "must be positive");
    if (spec.radar.r_min < 0 || spec.radar.r_max < spec.radar.r_min ||
        spec.radar.r_max > spec.radar.blocks)
      fail("radar.r_min", "need 0 <= r_min <= r_max <= blocks");
    if (spec.radar.delay_grid < 1) fail("radar.delay_grid", "must be >= 1");
    if (spec.radar.noise_power <= 0.0) fail("radar.noise_power", "must be positive");
    if (spec.radar.budget < 1) fail("radar.budget", "must be >= 1");
  }

  {
    const ordered_json node =
        root.contains("localize") ? root["localize"] : ordered_json::object();
    require_keys(node, "localize", {"users", "user_blocks", "sigma_rss", "budget"});
    spec.localize.users = get_int(node, "localize", "users", spec.localize.users);
    if (node.contains("user_blocks")) {
      if (!node["user_blocks"].is_array()) fail("localize.user_blocks", "expected an array");
      spec.localize.user_blocks.clear();
      for (const auto& b : node["user_blocks"]) {
        if (!b.is_number_integer()) fail("localize.user_blocks", "entries must be integers");
        spec.localize.user_blocks.push_back(b.get<int>());
      }
    }
    spec.localize.sigma_rss = get_number(node, "localize", "sigma_rss", spec.localize.sigma_rss);
    spec.localize.budget = get_int(node, "localize", "budget", spec.localize.budget);
    if (spec.localize.users < 1) fail("localize.users", "must be >= 1");
    if (spec.localize.sigma_rss < 0.0) fail("localize.sigma_rss", "must be >= 0");
    if (spec.localize.budget < 1) fail("localize.budget", "must be >= 1");
    const int block_count =
        spec.scene.soi_divisions[0] * spec.scene.soi_divisions[1] * spec.scene.soi_divisions[2];
    for (const int b : spec.localize.user_blocks)
      if (b < 0 || b >= block_count) fail("localize.user_blocks", "block index out of range");
  }

  {
    const ordered_json node = root.contains("slam") ? root["slam"] : ordered_json::object();
    require_keys(node, "slam",
                 {"room_half", "scatterers", "ris_position", "with_ris", "ris_groups", "particles",
                  "config_budget", "trajectory_radius", "motion_noise_std", "sigma_tau",
                  "sigma_aoa", "sigma_amp", "ref_amplitude"});
    spec.slam.room_half = get_number(node, "slam", "room_half", spec.slam.room_half);
    if (node.contains("scatterers")) {
      if (!node["scatterers"].is_array()) fail("slam.scatterers", "expected an array of [x, y]");
      spec.slam.scatterers.clear();
      for (std::size_t i = 0; i < node["scatterers"].size(); ++i)
        spec.slam.scatterers.push_back(
            get_vec2(node["scatterers"][i], "slam.scatterers[" + std::to_string(i) + "]"));
      if (spec.slam.scatterers.empty()) fail("slam.scatterers", "need at least one scatterer");
    }
    if (node.contains("ris_position"))
      spec.slam.ris_position = get_vec2(node["ris_position"], "slam.ris_position");
    if (node.contains("with_ris")) {
      if (!node["with_ris"].is_boolean()) fail("slam.with_ris", "expected a boolean");
      spec.slam.with_ris = node["with_ris"].get<bool>();
    }
    spec.slam.ris_groups = get_int(node, "slam", "ris_groups", spec.slam.ris_groups);
    spec.slam.particles = get_int(node, "slam", "particles", spec.slam.particles);
    spec.slam.config_budget = get_int(node, "slam", "config_budget", spec.slam.config_budget);
    spec.slam.trajectory_radius =
        get_number(node, "slam", "trajectory_radius", spec.slam.trajectory_radius);
    spec.slam.motion_noise_std =
        get_number(node, "slam", "motion_noise_std", spec.slam.motion_noise_std);
    spec.slam.sigma_tau = get_number(node, "slam", "sigma_tau", spec.slam.sigma_tau);
    spec.slam.sigma_aoa = get_number(node, "slam", "sigma_aoa", spec.slam.sigma_aoa);
    spec.slam.sigma_amp = get_number(node, "slam", "sigma_amp", spec.slam.sigma_amp);
    spec.slam.ref_amplitude = get_number(node, "slam", "ref_amplitude", spec.slam.ref_amplitude);
    if (spec.slam.room_half <= 0.0) fail("slam.room_half", "must be positive");
    if (spec.slam.ris_groups < 1) fail("slam.ris_groups", "must be >= 1");
    if (spec.slam.particles < 1) fail("slam.particles", "must be >= 1");
    if (spec.slam.config_budget < 1) fail("slam.config_budget", "must be >= 1");
    if (spec.slam.trajectory_radius <= 0.0) fail("slam.trajectory_radius", "must be positive");
    if (spec.slam.motion_noise_std < 0.0) fail("slam.motion_noise_std", "must be >= 0");
    if (spec.slam.sigma_tau < 0.0) fail("slam.sigma_tau", "must be >= 0");
    if (spec.slam.sigma_aoa < 0.0) fail("slam.sigma_aoa", "must be >= 0");
    if (spec.slam.sigma_amp < 0.0) fail("slam.sigma_amp", "must be >= 0");
    if (spec.slam.ref_amplitude <= 0.0) fail("slam.ref_amplitude", "must be positive");
  }

  {
    const ordered_json node = root.contains("run") ? root["run"] : ordered_json::object();
    require_keys(node, "run", {"seed", "seeds", "cycles", "scheme", "format", "out"});
    if (node.contains("seed")) {
      if (!node["seed"].is_number_unsigned() && !node["seed"].is_number_integer())
        fail("run.seed", "expected an integer");
      spec.run.seed = node["seed"].get<std::uint64_t>();
    }
    spec.run.seeds = get_int(node, "run", "seeds", spec.run.seeds);
    spec.run.cycles = get_int(node, "run", "cycles", spec.run.cycles);
    spec.run.scheme = get_string(node, "run", "scheme", spec.run.scheme);
    spec.run.format = get_string(node, "run", "format", spec.run.format);
    spec.run.out = get_string(node, "run", "out", spec.run.out);
    if (spec.run.seeds < 1) fail("run.seeds", "must be >= 1");
    if (spec.run.cycles < 1) fail("run.cycles", "must be >= 1");
    if (spec.run.format != "csv" && spec.run.format != "json")
      fail("run.format", "expected csv or json");
  }
  return spec;
}

std::string scenario_to_json(const ScenarioSpec& spec) {
  ordered_json root;
  root["id"] = spec.id;
  root["modules"] = spec.modules;

  ordered_json scene;
  scene["tx"] = {{"position", vec3_json(spec.scene.tx_position)}, {"gain", spec.scene.tx_gain}};
  scene["rx"] = {{"position", vec3_json(spec.scene.rx_position)},
                 {"gain", spec.scene.rx_gain},
                 {"antennas", spec.scene.rx_antennas},
                 {"spacing", spec.scene.rx_spacing},
                 {"axis", vec3_json(spec.scene.rx_axis)}};
  if (spec.scene.ris) {
    const PanelSpec& p = *spec.scene.ris;
    ordered_json ris;
    ris["rows"] = p.rows;
    ris["cols"] = p.cols;
    ris["pitch"] = p.pitch;
    ris["center"] = vec3_json(p.center);
    ris["x_axis"] = vec3_json(p.x_axis);
    ris["y_axis"] = vec3_json(p.y_axis);
    ris["group_rows"] = p.group_rows;
    ris["group_cols"] = p.group_cols;
    ris["type"] = p.type;
    if (std::isinf(p.beta))
      ris["beta"] = "inf";
    else
      ris["beta"] = p.beta;
    ordered_json states = ordered_json::array();
    const auto materialized = p.codebook.empty() ? ris::table1_codebook().states() : p.codebook;
    for (const auto& s : materialized)
      states.push_back(ordered_json{{"phase", s.phase}, {"amplitude", s.amplitude}});
    ris["codebook"] = states;
    scene["ris"] = ris;
  } else {
    scene["ris"] = nullptr;
  }
  scene["soi"] = {{"origin", vec3_json(spec.scene.soi_origin)},
                  {"side", vec3_json(spec.scene.soi_side)},
                  {"divisions", spec.scene.soi_divisions}};
  scene["subcarriers"] = {{"count", spec.scene.subcarrier_count},
                          {"center_frequency", spec.scene.center_frequency},
                          {"spacing", spec.scene.subcarrier_spacing}};
  scene["scatter_variance"] = spec.scene.scatter_variance;
  scene["noise_power"] = spec.scene.noise_power;
  root["scene"] = scene;

  root["sense"] = {{"frames", spec.sense.frames},
                   {"budget", spec.sense.budget},
                   {"postures", spec.sense.postures},
                   {"occupied_blocks", spec.sense.occupied_blocks},
                   {"probe_amplitude", spec.sense.probe_amplitude},
                   {"cost_trials", spec.sense.cost_trials},
                   {"occupancy_threshold", spec.sense.occupancy_threshold},
                   {"occupancy_scale", spec.sense.occupancy_scale}};
  root["radar"] = {{"blocks", spec.radar.blocks},
                   {"block_span", spec.radar.block_span},
                   {"r_min", spec.radar.r_min},
                   {"r_max", spec.radar.r_max},
                   {"delay_grid", spec.radar.delay_grid},
                   {"noise_power", spec.radar.noise_power},
                   {"budget", spec.radar.budget}};
  ordered_json localize;
  localize["users"] = spec.localize.users;
  localize["user_blocks"] = spec.localize.user_blocks;
  localize["sigma_rss"] = spec.localize.sigma_rss;
  localize["budget"] = spec.localize.budget;
  root["localize"] = localize;

  ordered_json slam;
  slam["room_half"] = spec.slam.room_half;
  ordered_json scatterers = ordered_json::array();
  for (const auto& s : spec.slam.scatterers) scatterers.push_back(ordered_json::array({s.x, s.y}));
  slam["scatterers"] = scatterers;
  slam["ris_position"] = ordered_json::array({spec.slam.ris_position.x, spec.slam.ris_position.y});
  slam["with_ris"] = spec.slam.with_ris;
  slam["ris_groups"] = spec.slam.ris_groups;
  slam["particles"] = spec.slam.particles;
  slam["config_budget"] = spec.slam.config_budget;
  slam["trajectory_radius"] = spec.slam.trajectory_radius;
  slam["motion_noise_std"] = spec.slam.motion_noise_std;
  slam["sigma_tau"] = spec.slam.sigma_tau;
  slam["sigma_aoa"] = spec.slam.sigma_aoa;
  slam["sigma_amp"] = spec.slam.sigma_amp;
  slam["ref_amplitude"] = spec.slam.ref_amplitude;
  root["slam"] = slam;

  root["run"] = {{"seed", spec.run.seed},     {"seeds", spec.run.seeds},
                 {"cycles", spec.run.cycles}, {"scheme", spec.run.scheme},
                 {"format", spec.run.format}, {"out", spec.run.out}};
  return root.dump(2);
}

bool scenario_equal(const ScenarioSpec& a, const ScenarioSpec& b) {
  return ordered_json::parse(scenario_to_json(a)) == ordered_json::parse(scenario_to_json(b));
}

metaslam::SlamScene make_slam_scene(const SlamSectionParams& params) {
  metaslam::SlamScene scene;
  const double h = params.room_half;
  scene.reflectors = {{{1.0, 0.0}, h}, {{-1.0, 0.0}, h}, {{0.0, 1.0}, h}, {{0.0, -1.0}, h}};
  scene.scatterers = params.scatterers;
  if (params.with_ris) {
    scene.scatterers.push_back(params.ris_position);
    scene.ris_scatterer = static_cast<int>(scene.scatterers.size()) - 1;
  }
  scene.ris_groups = params.ris_groups;
  scene.noise.sigma_tau = params.sigma_tau;
  scene.noise.sigma_aoa = params.sigma_aoa;
  scene.noise.sigma_amp = params.sigma_amp;
  scene.noise.ref_amplitude = params.ref_amplitude;
  return scene;
}

std::vector<Vec2> make_slam_trajectory(const SlamSectionParams& params, int cycles) {
  std::vector<Vec2> poses;
  poses.reserve(cycles);
  for (int c = 0; c < cycles; ++c) {
    const double t = kTwoPi * c / std::max(cycles, 1);
    poses.push_back(
        {params.trajectory_radius * std::cos(t), params.trajectory_radius * std::sin(t)});
  }
  return poses;
}

}  // namespace rissim::harness
