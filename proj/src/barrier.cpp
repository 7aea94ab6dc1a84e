#include "dcbf/barrier.hpp"

#include "bytes.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace dcbf {

double ObjectHistory::window_displacement() const {
  double best = 0.0;
  for (const auto& e : entries) best = std::max(best, (e.pos - anchor().pos).norm());
  return best;
}

RelativeObservation to_object_frame(const Vec2& robot_next, const ObjectHistory& history,
                                    int history_len) {
  const auto needed = static_cast<std::size_t>(history_len) + 1;
  if (history.entries.size() < needed) {
    throw ShortHistory("object " + std::to_string(history.object_id) + " has " +
                       std::to_string(history.entries.size()) + " history entries, need " +
                       std::to_string(needed));
  }
  if (history.entries.size() > needed) throw ShapeMismatch("history longer than T+1");
  const Vec2 anchor = history.anchor().pos;
  RelativeObservation obs;
  obs.rel_robot_next = robot_next - anchor;
  obs.rel_history.resize(history_len, 4);
  for (int k = 0; k < history_len; ++k) {
    const auto& e = history.entries[k + 1];
    obs.rel_history(k, 0) = e.pos.x() - anchor.x();
    obs.rel_history(k, 1) = e.pos.y() - anchor.y();
    obs.rel_history(k, 2) = e.z;
    obs.rel_history(k, 3) = e.theta;
  }
  return obs;
}

std::string ArchSpec::tag() const {
  nlohmann::json j;
  j["format"] = "dcbf-barrier";
  j["T"] = history_len;
  j["lstm"] = lstm_hidden;
  j["robot"] = robot_layers;
  j["head"] = head_layers;
  j["activation"] = std::string(nn::activation_name(activation));
  j["scales"] = {position_scale, z_scale, theta_scale};
  j["layout"] = feature_layout_version;
  return j.dump();
}

ArchSpec ArchSpec::from_tag(std::string_view tag) {
  try {
    const auto j = nlohmann::json::parse(tag);
    if (j.at("format") != "dcbf-barrier") throw VersionMismatch("not a barrier checkpoint");
    ArchSpec a;
    a.history_len = j.at("T");
    a.lstm_hidden = j.at("lstm");
    a.robot_layers = j.at("robot").get<std::vector<int>>();
    a.head_layers = j.at("head").get<std::vector<int>>();
    a.activation = nn::activation_from_name(j.at("activation").get<std::string>());
    a.position_scale = j.at("scales").at(0);
    a.z_scale = j.at("scales").at(1);
    a.theta_scale = j.at("scales").at(2);
    a.feature_layout_version = j.at("layout");
    if (a.feature_layout_version != 1) throw VersionMismatch("unsupported feature layout");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("bad architecture tag: ") + e.what());
  }
}

nn::MlpSpec ArchSpec::robot_mlp() const {
  return nn::MlpSpec{2, robot_layers, activation, true, true};
}

nn::MlpSpec ArchSpec::head_mlp() const {
  std::vector<int> layers = head_layers;
  layers.push_back(1);
  const int robot_out = robot_layers.empty() ? 2 : robot_layers.back();
  return nn::MlpSpec{lstm_hidden + robot_out, layers, activation, false, false};
}

ObsBatch make_batch(std::span<const RelativeObservation> obs, const ArchSpec& arch) {
  const int m = static_cast<int>(obs.size());
  const int t_len = arch.history_len;
  ObsBatch b;
  b.robot.resize(2, m);
  b.sequence.assign(t_len, nn::Tensor(ArchSpec::kFeatureDim, m));
  for (int j = 0; j < m; ++j) {
    const auto& o = obs[j];
    if (o.rel_history.rows() != t_len) {
      throw ShapeMismatch("observation history has " + std::to_string(o.rel_history.rows()) +
                          " rows, architecture expects " + std::to_string(t_len));
    }
    b.robot(0, j) = o.rel_robot_next.x() * arch.position_scale;
    b.robot(1, j) = o.rel_robot_next.y() * arch.position_scale;
    for (int k = 0; k < t_len; ++k) {
      auto& s = b.sequence[k];
      s(0, j) = o.rel_history(k, 0) * arch.position_scale;
      s(1, j) = o.rel_history(k, 1) * arch.position_scale;
      s(2, j) = o.rel_history(k, 2) * arch.z_scale;
      s(3, j) = o.rel_history(k, 3) * arch.theta_scale;
    }
  }
  return b;
}

BarrierNet::BarrierNet(ArchSpec arch, std::uint64_t seed) : arch_(std::move(arch)) {
  std::mt19937_64 rng(seed);
  nn::add_lstm_params(params_, "lstm", ArchSpec::kFeatureDim, arch_.lstm_hidden, rng);
  nn::add_mlp_params(params_, "robot", arch_.robot_mlp(), rng);
  nn::add_mlp_params(params_, "head", arch_.head_mlp(), rng);
}

BarrierNet::BarrierNet(const BarrierNet& other)
    : arch_(other.arch_), params_(other.params_), evaluations_(other.evaluations_.load()) {}

BarrierNet& BarrierNet::operator=(const BarrierNet& other) {
  arch_ = other.arch_;
  params_ = other.params_;
  evaluations_.store(other.evaluations_.load());
  return *this;
}

BarrierNet BarrierNet::zeros(ArchSpec arch) {
  BarrierNet net(std::move(arch));
  for (std::size_t i = 0; i < net.params_.size(); ++i) {
    const auto& v = net.params_.value(i);
    net.params_.set_value(i, nn::Tensor::Zero(v.rows(), v.cols()));
  }
  return net;
}

nn::Tensor BarrierNet::encode(const ObsBatch& batch) const {
  return nn::lstm_infer(params_, "lstm", batch.sequence);
}

Eigen::RowVectorXd BarrierNet::heads(const nn::Tensor& encoded, const nn::Tensor& robot) const {
  const nn::Tensor r = nn::mlp_infer(params_, "robot", robot, arch_.robot_mlp());
  nn::Tensor fused(encoded.rows() + r.rows(), encoded.cols());
  fused << encoded, r;
  const nn::Tensor out = nn::mlp_infer(params_, "head", fused, arch_.head_mlp());
  return out.row(0);
}

double BarrierNet::value(const RelativeObservation& obs) const {
  return values(std::span(&obs, 1))(0);
}

Eigen::VectorXd BarrierNet::values(std::span<const RelativeObservation> obs) const {
  if (obs.empty()) return {};
  const ObsBatch batch = make_batch(obs, arch_);
  evaluations_ += obs.size();
  return heads(encode(batch), batch.robot).transpose();
}

Eigen::MatrixXd BarrierNet::pair_values(std::span<const ObjectHistory> histories,
                                        std::span<const Vec2> robot_nexts) const {
  const auto n_obj = static_cast<Eigen::Index>(histories.size());
  const auto n_rob = static_cast<Eigen::Index>(robot_nexts.size());
  Eigen::MatrixXd out(n_rob, n_obj);
  if (n_obj == 0 || n_rob == 0) return out;

  std::vector<RelativeObservation> rel;
  rel.reserve(histories.size());
  for (const auto& h : histories) rel.push_back(to_object_frame(h.anchor().pos, h, arch_.history_len));
  const nn::Tensor encoded = encode(make_batch(rel, arch_));

  nn::Tensor enc_pairs(encoded.rows(), n_rob * n_obj);
  nn::Tensor robot(2, n_rob * n_obj);
  for (Eigen::Index c = 0; c < n_rob; ++c) {
    for (Eigen::Index k = 0; k < n_obj; ++k) {
      const Eigen::Index col = c * n_obj + k;
      enc_pairs.col(col) = encoded.col(k);
      const Vec2 d = robot_nexts[c] - histories[k].anchor().pos;
      robot(0, col) = d.x() * arch_.position_scale;
      robot(1, col) = d.y() * arch_.position_scale;
    }
  }
  evaluations_ += static_cast<std::uint64_t>(n_rob * n_obj);
  const Eigen::RowVectorXd v = heads(enc_pairs, robot);
  for (Eigen::Index c = 0; c < n_rob; ++c) {
    for (Eigen::Index k = 0; k < n_obj; ++k) out(c, k) = v(c * n_obj + k);
  }
  return out;
}

nn::Var BarrierNet::forward(nn::Tape& tape, const ObsBatch& batch) const {
  std::vector<nn::Var> seq;
  seq.reserve(batch.sequence.size());
  for (const auto& s : batch.sequence) seq.push_back(tape.constant(s));
  const nn::Var encoded = nn::lstm_forward(tape, "lstm", seq);
  const nn::Var robot = nn::mlp_forward(tape, "robot", tape.constant(batch.robot), arch_.robot_mlp());
  const nn::Var fused = nn::vstack(tape, encoded, robot);
  return nn::mlp_forward(tape, "head", fused, arch_.head_mlp());
}

std::string BarrierNet::to_checkpoint() const { return nn::save_params(params_, arch_.tag()); }

BarrierNet BarrierNet::from_checkpoint(std::string_view bytes, const ArchSpec& expected) {
  nn::ParamStore loaded = nn::load_params(bytes, expected.tag());
  BarrierNet net(expected);
  if (loaded.size() != net.params_.size()) throw CorruptCheckpoint("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const auto& a = loaded.value(i);
    const auto& b = net.params_.value(i);
    if (loaded.name(i) != net.params_.name(i) || a.rows() != b.rows() || a.cols() != b.cols()) {
      throw CorruptCheckpoint("checkpoint tensor " + loaded.name(i) + " does not fit the architecture");
    }
  }
  net.params_ = std::move(loaded);
  return net;
}

BarrierNet BarrierNet::from_checkpoint(std::string_view bytes) {
  detail::ByteReader r(bytes);
  std::string_view magic;
  std::uint16_t version = 0;
  std::string tag;
  if (!r.raw(8, magic) || magic != "DCBFCKPT" || !r.u16(version) || !r.str(tag)) {
    throw CorruptCheckpoint("checkpoint: unreadable header");
  }
  return from_checkpoint(bytes, ArchSpec::from_tag(tag));
}

void BarrierNet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path);
  const std::string bytes = to_checkpoint();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path);
}

BarrierNet BarrierNet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_checkpoint(ss.str());
}

Eigen::VectorXd batched_barrier(const BarrierNet& net, std::span<const RelativeObservation> obs) {
  return net.values(obs);
}

double global_barrier(const BarrierNet& net, std::span<const RelativeObservation> obs) {
  if (obs.empty()) return kEmptySceneBarrier;
  return net.values(obs).minCoeff();
}

}  // namespace dcbf
