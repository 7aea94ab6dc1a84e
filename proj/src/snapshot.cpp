// WorldSnapshot layout (all integers and doubles little-endian):
//
//   char[8]  magic "DCBFSNAP"
//   u16      format version (1)
//   u64      WorldConfig::hash()
//   u64      seed
//   u64      step counter
//   u64      PRNG state
//   f64 x2   end-effector position
//   u32      object count n
//   n x { f64 x, y, z, theta, tilt_dir.x, tilt_dir.y; u8 fallen; f64 mass, mu_s, mu_d }

#include "bytes.hpp"
#include "dcbf/sim.hpp"

#include <sstream>

namespace dcbf {
namespace {

constexpr std::string_view kMagic = "DCBFSNAP";
constexpr std::uint16_t kVersion = 1;

std::uint64_t rng_state(const WorldRng& rng) {
  std::ostringstream os;
  os << rng;
  return std::stoull(os.str());
}

}  // namespace

WorldSnapshot World::snapshot() const {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u16(kVersion);
  w.u64(config_.hash());
  w.u64(config_.seed);
  w.u64(step_count_);
  w.u64(rng_state(rng_));
  w.f64(robot_.pos.x());
  w.f64(robot_.pos.y());
  w.u32(static_cast<std::uint32_t>(objects_.size()));
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto& o = objects_[i];
    for (double v : {o.pos.x(), o.pos.y(), o.z, o.theta, o.tilt_dir.x(), o.tilt_dir.y()}) w.f64(v);
    w.u8(o.fallen ? 1 : 0);
    w.f64(phys_[i].mass);
    w.f64(phys_[i].mu_s);
    w.f64(phys_[i].mu_d);
  }
  return {w.take()};
}

World World::restore(const WorldSnapshot& snap, const WorldConfig& config) {
  detail::ByteReader r(snap.bytes);
  auto fail = [](const char* why) -> World { throw CorruptSnapshot(std::string("snapshot: ") + why); };

  std::string_view magic;
  if (!r.raw(kMagic.size(), magic) || magic != kMagic) return fail("bad magic");
  std::uint16_t version = 0;
  if (!r.u16(version) || version != kVersion) return fail("unsupported version");
  std::uint64_t hash = 0, seed = 0, steps = 0, rng = 0;
  if (!r.u64(hash) || !r.u64(seed) || !r.u64(steps) || !r.u64(rng)) return fail("truncated header");
  if (hash != config.hash()) return fail("config hash mismatch");

  World w;
  w.config_ = config;
  w.config_.seed = seed;
  w.step_count_ = steps;
  std::istringstream(std::to_string(rng)) >> w.rng_;
  double ex = 0, ey = 0;
  std::uint32_t n = 0;
  if (!r.f64(ex) || !r.f64(ey) || !r.u32(n)) return fail("truncated header");
  if (static_cast<int>(n) != config.n_objects) return fail("object count mismatch");
  w.robot_.pos = Vec2(ex, ey);
  for (std::uint32_t i = 0; i < n; ++i) {
    ObjectState o;
    ObjectPhys p;
    double x, y, tx, ty;
    std::uint8_t fallen = 0;
    if (!r.f64(x) || !r.f64(y) || !r.f64(o.z) || !r.f64(o.theta) || !r.f64(tx) || !r.f64(ty) ||
        !r.u8(fallen) || !r.f64(p.mass) || !r.f64(p.mu_s) || !r.f64(p.mu_d)) {
      return fail("truncated object table");
    }
    if (fallen > 1) return fail("bad fallen flag");
    o.pos = Vec2(x, y);
    o.tilt_dir = Vec2(tx, ty);
    o.fallen = fallen == 1;
    w.objects_.push_back(o);
    w.phys_.push_back(p);
  }
  if (!r.done()) return fail("trailing bytes");
  return w;
}

}  // namespace dcbf
