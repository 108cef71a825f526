#ifndef RISSIM_RIS_HPP
#define RISSIM_RIS_HPP

#include <vector>

#include "rissim/common.hpp"
#include "rissim/rng.hpp"

namespace rissim::ris {

enum class RisType { kReflective, kRefractive, kHybrid };
enum class Branch { kReflect, kRefract };

/// One selectable element state: extra phase shift theta and amplitude Gamma.
/// The element response is Gamma * exp(-j*theta).
struct PhaseState {
  double phase = 0.0;      // radians, [0, 2*pi)
  double amplitude = 1.0;  // [0, 1]
};

/// Ordered set of K >= 2 selectable states with distinct phases.
class PhaseCodebook {
 public:
  explicit PhaseCodebook(std::vector<PhaseState> states);

  /// K states with phases {0, 2pi/K, ..., 2(K-1)pi/K} and unit amplitude.
  static PhaseCodebook uniform(int k);

  int size() const { return static_cast<int>(states_.size()); }
  const PhaseState& state(int i) const { return states_.at(i); }
  const std::vector<PhaseState>& states() const { return states_; }

 private:
  std::vector<PhaseState> states_;
};

/// Measured 4-state profile of a PIN-diode element at 3.198 GHz:
/// (pi/4, 0.97), (3pi/4, 0.97), (5pi/4, 0.92), (7pi/4, 0.88).
/// States 2 and 3 share a PIN pattern in the source hardware; they are kept
/// as distinct logical states keyed by index.
PhaseCodebook table1_codebook();

/// Response of a single element.
///
/// Reflective/refractive types return Gamma * exp(-j*theta) and only accept
/// the matching branch. Hybrid splits power by beta (ratio of reflected to
/// refracted): reflect branch sqrt(beta/(1+beta)) * Gamma * exp(-j*theta),
/// refract branch sqrt(1/(1+beta)) * Gamma * exp(-j*theta). beta may be
/// +infinity (pure reflection) or 0 (pure refraction); the limit forms are
/// used, never arithmetic on infinity.
cd element_response(const PhaseState& state, RisType type, double beta, Branch branch);

/// Planar panel of M elements partitioned into control groups. All elements
/// in a group share one codebook state.
class RisPanel {
 public:
  RisPanel(std::vector<Vec3> element_positions, std::vector<int> group_of, int group_count,
           Vec3 plane_normal, RisType type, double beta, PhaseCodebook codebook);

  /// rows x cols grid in the plane spanned by (x_axis, y_axis) around center,
  /// tiled into group_rows x group_cols rectangular groups.
  static RisPanel grid(int rows, int cols, double pitch, const Vec3& center, const Vec3& x_axis,
                       const Vec3& y_axis, int group_rows, int group_cols, RisType type,
                       double beta, PhaseCodebook codebook);

  int element_count() const { return static_cast<int>(positions_.size()); }
  int group_count() const { return group_count_; }
  const Vec3& element_position(int m) const { return positions_.at(m); }
  const std::vector<Vec3>& element_positions() const { return positions_; }
  int group_of(int m) const { return group_of_.at(m); }
  const Vec3& plane_normal() const { return plane_normal_; }
  RisType type() const { return type_; }
  double beta() const { return beta_; }
  const PhaseCodebook& codebook() const { return codebook_; }

 private:
  std::vector<Vec3> positions_;
  std::vector<int> group_of_;
  int group_count_;
  Vec3 plane_normal_;
  RisType type_;
  double beta_;
  PhaseCodebook codebook_;
};

/// Per-group codebook indices; one configuration of the whole panel.
struct RisConfig {
  std::vector<int> states;

  bool operator==(const RisConfig&) const = default;
};

/// Per-element responses under a configuration (group state broadcast to its
/// elements). Pure function of its inputs.
std::vector<cd> expand_config(const RisPanel& panel, const RisConfig& config,
                              Branch branch = Branch::kReflect);

/// All configurations differing from `config` in exactly one group's state;
/// count = groups * (K - 1).
std::vector<RisConfig> neighbor_configs(const RisConfig& config, const PhaseCodebook& codebook);

RisConfig random_config(int group_count, const PhaseCodebook& codebook, Rng& rng);

}  // namespace rissim::ris

#endif  // RISSIM_RIS_HPP
