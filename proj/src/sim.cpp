#include "dcbf/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

namespace dcbf {
namespace {

constexpr double kOverlapTol = 1e-10;
constexpr int kMaxSweeps = 200;
constexpr int kMaxPlacementDraws = 10'000;
constexpr int kMaxHalvings = 40;
// Displacements below this count as resting contact: no tilt, recovery allowed.
constexpr double kMotionFloor = 1e-12;

void fnv_mix(std::uint64_t& h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xffU;
    h *= 0x00000100000001b3ULL;
  }
}

void fnv_mix(std::uint64_t& h, double v) { fnv_mix(h, std::bit_cast<std::uint64_t>(v)); }

void record_contact(std::vector<Contact>& contacts, int a, int b, double depth) {
  for (auto& c : contacts) {
    if (c.first == a && c.second == b) {
      c.depth = std::max(c.depth, depth);
      return;
    }
  }
  contacts.push_back({a, b, depth});
}

}  // namespace

void WorldConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid WorldConfig: ") + what);
  };
  require(table_side > 0.0, "table_side must be positive");
  require(max_step > 0.0, "max_step must be positive");
  require(ee_radius > 0.0, "ee_radius must be positive");
  require(n_objects >= 0, "n_objects must be non-negative");
  require(mass_range.min > 0.0 && mass_range.min <= mass_range.max, "mass_range");
  require(static_friction_range.min <= static_friction_range.max, "static_friction_range");
  require(dynamic_friction_range.min <= dynamic_friction_range.max, "dynamic_friction_range");
  require(dynamic_friction_range.min > 0.0 && dynamic_friction_range.max < static_friction_range.min,
          "friction ranges must satisfy 0 < mu_d < mu_s");
  require(obj_radius > 0.0 && obj_height > 0.0, "object dimensions must be positive");
  require(tilt_gain >= 0.0 && tilt_restore_rate >= 0.0, "tilt constants must be non-negative");
  require(contact_iters >= 1, "contact_iters must be >= 1");
  require(std::abs(ee_start.x()) <= half_side() - ee_radius &&
              std::abs(ee_start.y()) <= half_side() - ee_radius,
          "ee_start must lie on the table");
}

double WorldConfig::critical_tilt() const { return std::atan(obj_radius / (0.5 * obj_height)); }

std::uint64_t WorldConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : {table_side, dt, max_step, ee_radius, mass_range.min, mass_range.max,
                   static_friction_range.min, static_friction_range.max,
                   dynamic_friction_range.min, dynamic_friction_range.max, obj_radius, obj_height,
                   tilt_gain, tilt_restore_rate, ee_start.x(), ee_start.y()}) {
    fnv_mix(h, v);
  }
  fnv_mix(h, static_cast<std::uint64_t>(n_objects));
  fnv_mix(h, static_cast<std::uint64_t>(contact_iters));
  return h;
}

World World::spawn(const WorldConfig& config, std::uint64_t seed) {
  config.validate();
  World w;
  w.config_ = config;
  w.config_.seed = seed;
  w.rng_.seed(seed);
  w.robot_.pos = config.ee_start;

  const double r = config.obj_radius;
  const double lim = config.half_side() - r;
  const double min_pair = 2.0 * r;
  const double min_ee = r + config.ee_radius;
  int draws = 0;
  while (static_cast<int>(w.objects_.size()) < config.n_objects) {
    if (draws++ >= kMaxPlacementDraws) {
      throw PlacementInfeasible("could not place " + std::to_string(config.n_objects) +
                                " objects within " + std::to_string(kMaxPlacementDraws) + " draws");
    }
    const Vec2 p(uniform(w.rng_, -lim, lim), uniform(w.rng_, -lim, lim));
    if ((p - w.robot_.pos).norm() < min_ee) continue;
    const bool clear = std::none_of(w.objects_.begin(), w.objects_.end(), [&](const ObjectState& o) {
      return (o.pos - p).norm() < min_pair;
    });
    if (!clear) continue;
    ObjectState o;
    o.pos = p;
    o.z = 0.5 * config.obj_height;
    w.objects_.push_back(o);
  }
  for (int i = 0; i < config.n_objects; ++i) {
    ObjectPhys ph;
    ph.mass = uniform(w.rng_, config.mass_range.min, config.mass_range.max);
    ph.mu_s = uniform(w.rng_, config.static_friction_range.min, config.static_friction_range.max);
    ph.mu_d = uniform(w.rng_, config.dynamic_friction_range.min, config.dynamic_friction_range.max);
    w.phys_.push_back(ph);
  }
  return w;
}

World World::from_state(const WorldConfig& config, RobotState robot,
                        std::vector<ObjectState> objects, std::vector<ObjectPhys> phys) {
  if (objects.size() != phys.size()) throw ConfigError("objects and phys must have equal length");
  World w;
  w.config_ = config;
  w.config_.n_objects = static_cast<int>(objects.size());
  w.config_.validate();
  w.rng_.seed(config.seed);
  w.robot_ = robot;
  w.objects_ = std::move(objects);
  w.phys_ = std::move(phys);
  for (auto& o : w.objects_) {
    if (o.fallen) o.theta = std::numbers::pi / 2;
    o.z = 0.5 * config.obj_height * std::cos(o.theta);
  }
  return w;
}

World::Resolution World::resolve(const Vec2& ee) const {
  const double r = config_.obj_radius;
  const double ee_reach = r + config_.ee_radius;
  const double bound = config_.half_side() - r;
  const int n = size();

  Resolution res;
  res.pos.reserve(n);
  for (const auto& o : objects_) res.pos.push_back(o.pos);
  res.biggest_push.assign(n, Vec2::Zero());
  res.biggest_push_norm.assign(n, 0.0);

  auto note_push = [&](int i, const Vec2& push) {
    const double m = push.norm();
    if (m > res.biggest_push_norm[i]) {
      res.biggest_push_norm[i] = m;
      res.biggest_push[i] = push;
    }
  };

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (int i = 0; i < n; ++i) {
      if (objects_[i].fallen) continue;
      const Vec2 d = res.pos[i] - ee;
      const double dist = d.norm();
      const double pen = ee_reach - dist;
      if (pen <= 0.0) continue;
      const Vec2 normal = dist > 0.0 ? Vec2(d / dist) : Vec2::UnitX();
      const Vec2 push = normal * pen;
      res.pos[i] += push;
      note_push(i, push);
      record_contact(res.contacts, -1, i, pen);
    }
    for (int i = 0; i < n; ++i) {
      if (objects_[i].fallen) continue;
      for (int j = i + 1; j < n; ++j) {
        if (objects_[j].fallen) continue;
        const Vec2 d = res.pos[j] - res.pos[i];
        const double dist = d.norm();
        const double pen = 2.0 * r - dist;
        if (pen <= 0.0) continue;
        const Vec2 normal = dist > 0.0 ? Vec2(d / dist) : Vec2::UnitX();
        const double wi = 1.0 / phys_[i].mass;
        const double wj = 1.0 / phys_[j].mass;
        const Vec2 push_i = -normal * (pen * wi / (wi + wj));
        const Vec2 push_j = normal * (pen * wj / (wi + wj));
        res.pos[i] += push_i;
        res.pos[j] += push_j;
        note_push(i, push_i);
        note_push(j, push_j);
        record_contact(res.contacts, i, j, pen);
      }
    }
    for (int i = 0; i < n; ++i) {
      if (!objects_[i].fallen) res.pos[i] = clamp_box(res.pos[i], bound);
    }

    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      if (objects_[i].fallen) continue;
      worst = std::max(worst, ee_reach - (res.pos[i] - ee).norm());
      for (int j = i + 1; j < n; ++j) {
        if (!objects_[j].fallen) worst = std::max(worst, 2.0 * r - (res.pos[j] - res.pos[i]).norm());
      }
    }
    res.overlap = worst;
    res.sweeps = sweep + 1;
    if (res.sweeps >= config_.contact_iters && worst <= kOverlapTol) break;
  }
  return res;
}

StepReport World::step(const Action& action) {
  const Vec2 start = robot_.pos;
  const Vec2 target = kinematic_next(start, action, config_);
  const Vec2 move = target - start;

  StepReport report;
  double scale = 1.0;
  Vec2 ee = target;
  Resolution res = resolve(ee);
  // A push into a jammed cluster (wall or packed neighbours) cannot be
  // resolved; shorten the end-effector motion until it can.
  for (int k = 0; res.overlap > kOverlapTol; ++k) {
    scale = k < kMaxHalvings ? scale * 0.5 : 0.0;
    ee = start + scale * move;
    res = resolve(ee);
    if (scale == 0.0) break;
  }

  robot_.pos = ee;
  report.applied.delta = ee - start;
  report.ee_scale = scale;
  report.sweeps = res.sweeps;
  report.contacts = std::move(res.contacts);

  const int n = size();
  report.displacement.assign(n, Vec2::Zero());
  report.tilt_delta.assign(n, 0.0);
  const double shape = config_.obj_height / (2.0 * config_.obj_radius);
  const double crit = config_.critical_tilt();
  for (int i = 0; i < n; ++i) {
    ObjectState& o = objects_[i];
    if (o.fallen) continue;
    const Vec2 disp = res.pos[i] - o.pos;
    const double d = disp.norm();
    o.pos = res.pos[i];
    const double before = o.theta;
    if (d > kMotionFloor) {
      o.theta += config_.tilt_gain * d * phys_[i].mu_s * shape;
      o.tilt_dir = res.biggest_push[i].normalized();
    } else {
      o.theta -= config_.tilt_restore_rate;
      if (o.theta <= kMotionFloor) o.theta = 0.0;
    }
    if (o.theta >= crit) {
      o.fallen = true;
      o.theta = std::numbers::pi / 2;
    }
    o.z = 0.5 * config_.obj_height * std::cos(o.theta);
    report.displacement[i] = disp;
    report.tilt_delta[i] = o.theta - before;
  }
  ++step_count_;
  return report;
}

double World::max_overlap() const {
  const double r = config_.obj_radius;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i) {
    if (objects_[i].fallen) continue;
    worst = std::max(worst, r + config_.ee_radius - (objects_[i].pos - robot_.pos).norm());
    for (int j = i + 1; j < size(); ++j) {
      if (!objects_[j].fallen) worst = std::max(worst, 2.0 * r - (objects_[j].pos - objects_[i].pos).norm());
    }
  }
  return worst;
}

bool World::operator==(const World& other) const {
  return config_.hash() == other.config_.hash() && robot_ == other.robot_ &&
         objects_ == other.objects_ && step_count_ == other.step_count_ && rng_ == other.rng_ &&
         std::equal(phys_.begin(), phys_.end(), other.phys_.begin(), other.phys_.end(),
                    [](const ObjectPhys& a, const ObjectPhys& b) {
                      return a.mass == b.mass && a.mu_s == b.mu_s && a.mu_d == b.mu_d;
                    });
}

}  // namespace dcbf
