#include "bytes.hpp"
#include "dcbf/nn.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace dcbf::nn {

std::size_t ParamStore::add(std::string name, Tensor init) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
  const std::size_t i = entries_.size();
  index_.emplace(name, i);
  Tensor zeros = Tensor::Zero(init.rows(), init.cols());
  entries_.push_back(Entry{std::move(name), std::move(init), zeros, zeros});
  ++version_;
  return i;
}

std::size_t ParamStore::index_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ShapeMismatch("unknown parameter: " + std::string(name));
  return it->second;
}

bool ParamStore::contains(std::string_view name) const { return index_.contains(std::string(name)); }

void ParamStore::set_value(std::size_t i, Tensor v) {
  Entry& e = entries_.at(i);
  if (v.rows() != e.value.rows() || v.cols() != e.value.cols()) {
    throw ShapeMismatch("set_value: shape change for " + e.name);
  }
  e.value = std::move(v);
  ++version_;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

Gradients ParamStore::zeros_like() const {
  Gradients g;
  g.reserve(entries_.size());
  for (const auto& e : entries_) g.push_back(Tensor::Zero(e.value.rows(), e.value.cols()));
  return g;
}

bool ParamStore::operator==(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size() || adam_steps_ != other.adam_steps_) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value != b.value || a.m != b.m || a.v != b.v) return false;
  }
  return true;
}

struct AdamAccess {
  static void step(ParamStore& p, const Gradients& grads, const AdamConfig& cfg) {
    if (grads.size() != p.entries_.size()) throw ShapeMismatch("adam_step: gradient count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const auto& e = p.entries_[i];
      if (grads[i].rows() != e.value.rows() || grads[i].cols() != e.value.cols()) {
        throw ShapeMismatch("adam_step: gradient shape mismatch for " + e.name);
      }
    }
    ++p.adam_steps_;
    const double t = static_cast<double>(p.adam_steps_);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < grads.size(); ++i) {
      auto& e = p.entries_[i];
      e.m = cfg.beta1 * e.m + (1.0 - cfg.beta1) * grads[i];
      e.v = cfg.beta2 * e.v + (1.0 - cfg.beta2) * grads[i].cwiseAbs2();
      e.value.array() -=
          cfg.lr * (e.m.array() / c1) / ((e.v.array() / c2).sqrt() + cfg.eps);
    }
    ++p.version_;
  }

  static void set_state(ParamStore& p, std::size_t i, Tensor m, Tensor v) {
    p.entries_.at(i).m = std::move(m);
    p.entries_.at(i).v = std::move(v);
  }
  static void set_steps(ParamStore& p, std::uint64_t steps) { p.adam_steps_ = steps; }
};

void adam_step(ParamStore& params, const Gradients& grads, const AdamConfig& cfg) {
  AdamAccess::step(params, grads, cfg);
}

namespace {

constexpr std::string_view kMagic = "DCBFCKPT";
constexpr std::uint16_t kFormatVersion = 1;

void write_tensor(detail::ByteWriter& w, const Tensor& t) {
  for (Eigen::Index r = 0; r < t.rows(); ++r) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) w.f64(t(r, c));
  }
}

bool read_tensor(detail::ByteReader& r, Tensor& t, std::uint32_t rows, std::uint32_t cols) {
  t.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) {
      if (!r.f64(t(i, j))) return false;
    }
  }
  return true;
}

}  // namespace

std::string save_params(const ParamStore& params, std::string_view arch_tag) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u16(kFormatVersion);
  w.str(arch_tag);
  w.u64(params.adam_steps());
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    w.str(params.name(i));
    w.u32(static_cast<std::uint32_t>(params.value(i).rows()));
    w.u32(static_cast<std::uint32_t>(params.value(i).cols()));
    write_tensor(w, params.value(i));
    write_tensor(w, params.first_moment(i));
    write_tensor(w, params.second_moment(i));
  }
  return w.take();
}

ParamStore load_params(std::string_view bytes, std::string_view expected_arch_tag) {
  detail::ByteReader r(bytes);
  auto corrupt = [](const std::string& why) { return CorruptCheckpoint("checkpoint: " + why); };

  std::string_view magic;
  if (!r.raw(kMagic.size(), magic) || magic != kMagic) throw corrupt("bad magic");
  std::uint16_t version = 0;
  if (!r.u16(version)) throw corrupt("truncated header");
  if (version != kFormatVersion) {
    throw VersionMismatch("checkpoint format version " + std::to_string(version) + ", expected " +
                          std::to_string(kFormatVersion));
  }
  std::string tag;
  std::uint64_t steps = 0;
  std::uint32_t count = 0;
  if (!r.str(tag) || !r.u64(steps) || !r.u32(count)) throw corrupt("truncated header");
  if (tag != expected_arch_tag) {
    throw VersionMismatch("checkpoint architecture '" + tag + "' does not match '" +
                          std::string(expected_arch_tag) + "'");
  }

  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name;
    std::uint32_t rows = 0, cols = 0;
    if (!r.str(name) || !r.u32(rows) || !r.u32(cols)) throw corrupt("truncated tensor header");
    if (static_cast<std::uint64_t>(rows) * cols * 24 > bytes.size()) throw corrupt("tensor too large");
    Tensor value, m, v;
    if (!read_tensor(r, value, rows, cols) || !read_tensor(r, m, rows, cols) ||
        !read_tensor(r, v, rows, cols)) {
      throw corrupt("truncated tensor " + name);
    }
    const std::size_t idx = store.add(std::move(name), std::move(value));
    AdamAccess::set_state(store, idx, std::move(m), std::move(v));
  }
  if (!r.done()) throw corrupt("trailing bytes");
  AdamAccess::set_steps(store, steps);
  return store;
}

std::string params_to_text(const ParamStore& params, std::string_view arch_tag) {
  std::ostringstream os;
  os << "# architecture " << arch_tag << "\n# adam_steps " << params.adam_steps() << "\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.value(i);
    os << params.name(i) << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) os << (c ? " " : "  ") << t(r, c);
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace dcbf::nn
