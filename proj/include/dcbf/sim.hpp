#pragma once

// Deterministic planar quasi-static pushing simulator.
//
// A disk end-effector moves on a square table and pushes upright cylinders.
// Contacts are resolved positionally (Gauss-Seidel sweeps over circle pairs);
// the end-effector has infinite mass and object-object overlaps are split by
// inverse mass. Every step an object's resolved displacement d raises its tilt
//
//     dtheta = tilt_gain * d * mu_s * h / (2 r)
//
// and an undisturbed object relaxes by tilt_restore_rate per step. Beyond the
// critical angle atan(r / (h/2)) the object falls (theta = pi/2) for good and
// no longer takes part in contact.

#include "dcbf/errors.hpp"
#include "dcbf/geometry.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dcbf {

/// Default safety threshold on tilt.
inline constexpr double kViolationThresholdDeg = 15.0;

struct Range {
  double min = 0.0;
  double max = 0.0;

  bool operator==(const Range&) const = default;
};

struct WorldConfig {
  double table_side = 1.2;
  double dt = 0.1;
  double max_step = 0.01;
  double ee_radius = 0.02;
  int n_objects = 4;
  Range mass_range{1.3, 2.0};
  Range static_friction_range{0.5, 0.7};
  Range dynamic_friction_range{0.3, 0.49};
  double obj_radius = 0.05;
  double obj_height = 0.20;
  double tilt_gain = 25.0;
  double tilt_restore_rate = 0.05;
  int contact_iters = 8;
  Vec2 ee_start{-0.45, 0.0};
  std::uint64_t seed = 0;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  double half_side() const { return 0.5 * table_side; }
  double critical_tilt() const;
  /// FNV-1a over every field except `seed`; snapshots carry it.
  std::uint64_t hash() const;

  bool operator==(const WorldConfig&) const = default;
};

struct ObjectPhys {
  double mass = 1.0;
  double mu_s = 0.6;
  double mu_d = 0.4;
};

struct ObjectState {
  Vec2 pos = Vec2::Zero();
  double z = 0.0;
  double theta = 0.0;
  Vec2 tilt_dir = Vec2::Zero();
  bool fallen = false;

  bool operator==(const ObjectState&) const = default;
};

struct RobotState {
  Vec2 pos = Vec2::Zero();

  bool operator==(const RobotState&) const = default;
};

struct Action {
  Vec2 delta = Vec2::Zero();

  static Action stay() { return {}; }
  bool operator==(const Action&) const = default;
};

struct Contact {
  int first = -1;  // -1 denotes the end-effector
  int second = -1;
  double depth = 0.0;
};

struct StepReport {
  Action applied;
  double ee_scale = 1.0;  // < 1 when a jammed push had to be shortened
  std::vector<Vec2> displacement;
  std::vector<double> tilt_delta;
  std::vector<Contact> contacts;
  int sweeps = 0;
};

struct WorldSnapshot {
  std::string bytes;

  bool operator==(const WorldSnapshot&) const = default;
};

/// 64-bit Knuth MMIX LCG; one word of state keeps snapshots small.
using WorldRng = std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL,
                                                 1442695040888963407ULL, 0ULL>;

class World {
 public:
  /// Places objects by rejection sampling. Throws PlacementInfeasible after
  /// 10,000 rejected draws.
  static World spawn(const WorldConfig& config, std::uint64_t seed);

  /// Builds a world from explicit states (tests, scripted scenarios).
  static World from_state(const WorldConfig& config, RobotState robot,
                          std::vector<ObjectState> objects, std::vector<ObjectPhys> phys);

  StepReport step(const Action& action);

  WorldSnapshot snapshot() const;
  /// Throws CorruptSnapshot on malformed bytes or a config-hash mismatch.
  static World restore(const WorldSnapshot& snap, const WorldConfig& config);

  const WorldConfig& config() const { return config_; }
  const RobotState& robot() const { return robot_; }
  std::span<const ObjectState> objects() const { return objects_; }
  std::span<const ObjectPhys> phys() const { return phys_; }
  std::uint64_t step_count() const { return step_count_; }
  int size() const { return static_cast<int>(objects_.size()); }

  /// Largest circle overlap among live objects and the end-effector.
  double max_overlap() const;

  bool operator==(const World& other) const;

 private:
  World() = default;

  struct Resolution {
    std::vector<Vec2> pos;
    std::vector<Vec2> biggest_push;
    std::vector<double> biggest_push_norm;
    std::vector<Contact> contacts;
    double overlap = 0.0;
    int sweeps = 0;
  };
  Resolution resolve(const Vec2& ee) const;

  WorldConfig config_;
  RobotState robot_;
  std::vector<ObjectState> objects_;
  std::vector<ObjectPhys> phys_;
  std::uint64_t step_count_ = 0;
  WorldRng rng_;
};

/// Contact-free end-effector model: clamp to max_step, then to the table.
inline Vec2 kinematic_next(const Vec2& pos, const Action& a, const WorldConfig& c) {
  return clamp_box(Vec2(pos + clamp_norm(a.delta, c.max_step)), c.half_side() - c.ee_radius);
}

inline double tilt_deg(const ObjectState& obj) { return rad_to_deg(obj.theta); }

/// Inclusive: a tilt exactly at the threshold counts as a violation.
inline bool is_violation(const ObjectState& obj, double threshold_deg = kViolationThresholdDeg) {
  return obj.fallen || obj.theta >= deg_to_rad(threshold_deg);
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(WorldRng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(WorldRng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace dcbf
