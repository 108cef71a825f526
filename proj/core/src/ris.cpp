#include "rissim/ris.hpp"

#include <algorithm>
#include <cmath>

namespace rissim::ris {

namespace {

void validate_state(const PhaseState& s) {
  if (!(s.amplitude >= 0.0 && s.amplitude <= 1.0))
    throw std::invalid_argument("PhaseState: amplitude must be in [0, 1]");
  if (!(s.phase >= 0.0 && s.phase < kTwoPi))
    throw std::invalid_argument("PhaseState: phase must be in [0, 2*pi)");
}

}  // namespace

PhaseCodebook::PhaseCodebook(std::vector<PhaseState> states) : states_(std::move(states)) {
  if (states_.size() < 2) throw std::invalid_argument("PhaseCodebook: need at least 2 states");
  for (const auto& s : states_) validate_state(s);
  for (std::size_t i = 0; i < states_.size(); ++i)
    for (std::size_t j = i + 1; j < states_.size(); ++j)
      if (states_[i].phase == states_[j].phase)
        throw std::invalid_argument("PhaseCodebook: phases must be distinct");
}

PhaseCodebook PhaseCodebook::uniform(int k) {
  if (k < 2) throw std::invalid_argument("PhaseCodebook::uniform: k must be >= 2");
  std::vector<PhaseState> states(k);
  for (int i = 0; i < k; ++i) states[i] = {kTwoPi * i / k, 1.0};
  return PhaseCodebook(std::move(states));
}

PhaseCodebook table1_codebook() {
  return PhaseCodebook({{kPi / 4.0, 0.97},
                        {3.0 * kPi / 4.0, 0.97},
                        {5.0 * kPi / 4.0, 0.92},
                        {7.0 * kPi / 4.0, 0.88}});
}

cd element_response(const PhaseState& state, RisType type, double beta, Branch branch) {
  validate_state(state);
  const cd base = std::polar(state.amplitude, -state.phase);
  switch (type) {
    case RisType::kReflective:
      if (branch != Branch::kReflect)
        throw std::invalid_argument("element_response: reflective element has no refract branch");
      return base;
    case RisType::kRefractive:
      if (branch != Branch::kRefract)
        throw std::invalid_argument("element_response: refractive element has no reflect branch");
      return base;
    case RisType::kHybrid: {
      if (std::isnan(beta) || beta < 0.0)
        throw std::invalid_argument("element_response: hybrid beta must be >= 0");
      if (std::isinf(beta)) return branch == Branch::kReflect ? base : cd(0.0, 0.0);
      const double split =
          branch == Branch::kReflect ? std::sqrt(beta / (1.0 + beta)) : std::sqrt(1.0 / (1.0 + beta));
      return split * base;
    }
  }
  throw std::logic_error("element_response: unknown RIS type");
}

RisPanel::RisPanel(std::vector<Vec3> element_positions, std::vector<int> group_of, int group_count,
                   Vec3 plane_normal, RisType type, double beta, PhaseCodebook codebook)
    : positions_(std::move(element_positions)),
      group_of_(std::move(group_of)),
      group_count_(group_count),
      plane_normal_(plane_normal.normalized()),
      type_(type),
      beta_(beta),
      codebook_(std::move(codebook)) {
  if (positions_.empty()) throw std::invalid_argument("RisPanel: no elements");
  if (group_of_.size() != positions_.size())
    throw std::invalid_argument("RisPanel: group map size mismatch");
  if (group_count_ < 1) throw std::invalid_argument("RisPanel: group count must be >= 1");
  std::vector<char> seen(group_count_, 0);
  for (const int g : group_of_) {
    if (g < 0 || g >= group_count_) throw std::invalid_argument("RisPanel: group index out of range");
    seen[g] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument("RisPanel: groups must partition the elements (empty group)");
  if (type_ == RisType::kHybrid && (std::isnan(beta_) || beta_ < 0.0))
    throw std::invalid_argument("RisPanel: hybrid beta must be >= 0 (or +inf)");
}

RisPanel RisPanel::grid(int rows, int cols, double pitch, const Vec3& center, const Vec3& x_axis,
                        const Vec3& y_axis, int group_rows, int group_cols, RisType type,
                        double beta, PhaseCodebook codebook) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("RisPanel::grid: empty grid");
  if (rows % group_rows != 0 || cols % group_cols != 0)
    throw std::invalid_argument("RisPanel::grid: group tiling must divide the grid");
  const Vec3 ex = x_axis.normalized();
  const Vec3 ey = y_axis.normalized();
  std::vector<Vec3> pos;
  std::vector<int> group_of;
  pos.reserve(static_cast<std::size_t>(rows) * cols);
  const int groups_per_row = cols / group_cols;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double u = (c - (cols - 1) / 2.0) * pitch;
      const double v = (r - (rows - 1) / 2.0) * pitch;
      pos.push_back(center + ex * u + ey * v);
      group_of.push_back((r / group_rows) * groups_per_row + (c / group_cols));
    }
  }
  const int group_count = (rows / group_rows) * (cols / group_cols);
  return RisPanel(std::move(pos), std::move(group_of), group_count, ex.cross(ey), type, beta,
                  std::move(codebook));
}

std::vector<cd> expand_config(const RisPanel& panel, const RisConfig& config, Branch branch) {
  if (static_cast<int>(config.states.size()) != panel.group_count())
    throw std::invalid_argument("expand_config: config length must equal group count");
  const int k = panel.codebook().size();
  std::vector<cd> group_response(config.states.size());
  for (std::size_t g = 0; g < config.states.size(); ++g) {
    const int s = config.states[g];
    if (s < 0 || s >= k) throw std::invalid_argument("expand_config: state index out of codebook");
    group_response[g] = element_response(panel.codebook().state(s), panel.type(), panel.beta(), branch);
  }
  std::vector<cd> out(panel.element_count());
  for (int m = 0; m < panel.element_count(); ++m) out[m] = group_response[panel.group_of(m)];
  return out;
}

std::vector<RisConfig> neighbor_configs(const RisConfig& config, const PhaseCodebook& codebook) {
  const int k = codebook.size();
  std::vector<RisConfig> out;
  out.reserve(config.states.size() * (k - 1));
  for (std::size_t g = 0; g < config.states.size(); ++g) {
    for (int s = 0; s < k; ++s) {
      if (s == config.states[g]) continue;
      RisConfig n = config;
      n.states[g] = s;
      out.push_back(std::move(n));
    }
  }
  return out;
}

RisConfig random_config(int group_count, const PhaseCodebook& codebook, Rng& rng) {
  RisConfig c;
  c.states.resize(group_count);
  for (int g = 0; g < group_count; ++g) c.states[g] = rng.uniform_int(codebook.size());
  return c;
}

}  // namespace rissim::ris
