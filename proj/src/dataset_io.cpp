#include "dcbf/dataset_io.hpp"

#include "bytes.hpp"
#include "dcbf/serialize.hpp"

#include <filesystem>
#include <sstream>

namespace dcbf {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kRecordsFile = "dataset.ndjson";
constexpr std::string_view kTrajectoriesFile = "trajectories.ndjson";
constexpr std::string_view kSnapshotsFile = "snapshots.bin";
constexpr std::string_view kSidecarMagic = "DCBFSIDX";

std::string path_in(const std::string& dir, std::string_view file) { return (fs::path(dir) / file).string(); }

Json manifest_json(const DatasetManifest& m) {
  return Json{{"format", "dcbf-dataset"},
              {"version", m.format_version},
              {"history_len", m.history_len},
              {"world", m.world},
              {"policy", m.policy},
              {"seed", m.seed},
              {"n_trajectories", m.n_trajectories},
              {"episode_len", m.episode_len},
              {"snapshot_stride", m.snapshot_stride},
              {"threshold_deg", m.threshold_deg},
              {"n_safe", m.n_safe},
              {"n_unsafe", m.n_unsafe}};
}

DatasetManifest manifest_from(const Json& j) {
  if (j.value("format", std::string()) != "dcbf-dataset") throw CorruptDataset("not a dataset manifest");
  DatasetManifest m;
  m.format_version = j.at("version").get<int>();
  if (m.format_version != kDatasetFormatVersion) {
    throw VersionMismatch("dataset format version " + std::to_string(m.format_version) + ", expected " +
                          std::to_string(kDatasetFormatVersion));
  }
  m.history_len = j.at("history_len").get<int>();
  m.world = j.at("world").get<WorldConfig>();
  m.policy = j.at("policy").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_trajectories = j.at("n_trajectories").get<std::uint64_t>();
  m.episode_len = j.at("episode_len").get<int>();
  m.snapshot_stride = j.at("snapshot_stride").get<int>();
  m.threshold_deg = j.at("threshold_deg").get<double>();
  m.n_safe = j.at("n_safe").get<std::uint64_t>();
  m.n_unsafe = j.at("n_unsafe").get<std::uint64_t>();
  return m;
}

Json record_json(const TransitionRecord& r) {
  Json robot = Json::array();
  for (const auto& p : r.robot) robot.push_back(Json::array({p.x(), p.y()}));
  Json object = Json::array();
  for (const auto& o : r.object) object.push_back(Json::array({o.pos.x(), o.pos.y(), o.z, o.theta, o.fallen ? 1 : 0}));
  return Json{{"traj", r.trajectory_id},
              {"step", r.step_index},
              {"obj", r.object_id},
              {"label", static_cast<int>(r.label)},
              {"cur", static_cast<int>(r.current_label)},
              {"snap", Json::array({r.snapshot_ref.id, r.snapshot_ref.step})},
              {"robot", std::move(robot)},
              {"object", std::move(object)}};
}

Label label_from(const Json& j) {
  const int v = j.get<int>();
  if (v != 0 && v != 1) throw CorruptDataset("label must be 0 or 1");
  return static_cast<Label>(v);
}

TransitionRecord record_from(const Json& j, int history_len) {
  TransitionRecord r;
  r.trajectory_id = j.at("traj").get<std::uint64_t>();
  r.step_index = j.at("step").get<std::uint64_t>();
  r.object_id = j.at("obj").get<int>();
  r.label = label_from(j.at("label"));
  r.current_label = label_from(j.at("cur"));
  r.snapshot_ref = SnapshotRef{j.at("snap").at(0).get<std::uint64_t>(), j.at("snap").at(1).get<std::uint64_t>()};
  for (const auto& p : j.at("robot")) r.robot.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  for (const auto& o : j.at("object")) {
    r.object.push_back(ObjectObservation{Vec2(o.at(0).get<double>(), o.at(1).get<double>()), o.at(2).get<double>(),
                                         o.at(3).get<double>(), o.at(4).get<int>() != 0});
  }
  const auto expected = static_cast<std::size_t>(history_len) + 3;
  if (r.robot.size() != expected || r.object.size() != expected) {
    throw CorruptDataset("record has a window of the wrong length");
  }
  return r;
}

Json trajectory_json(const TrajectoryLog& t) {
  Json actions = Json::array();
  for (const auto& a : t.actions) actions.push_back(Json::array({a.delta.x(), a.delta.y()}));
  Json snaps = Json::array();
  for (const auto& s : t.snapshots) snaps.push_back(Json::array({s.id, s.step}));
  return Json{{"id", t.id}, {"world_seed", t.world_seed}, {"parent", t.parent}, {"actions", actions}, {"snapshots", snaps}};
}

TrajectoryLog trajectory_from(const Json& j) {
  TrajectoryLog t;
  t.id = j.at("id").get<std::uint64_t>();
  t.world_seed = j.at("world_seed").get<std::uint64_t>();
  t.parent = j.at("parent").get<std::int64_t>();
  for (const auto& a : j.at("actions")) t.actions.push_back(Action{Vec2(a.at(0).get<double>(), a.at(1).get<double>())});
  for (const auto& s : j.at("snapshots")) {
    t.snapshots.push_back(SnapshotRef{s.at(0).get<std::uint64_t>(), s.at(1).get<std::uint64_t>()});
  }
  return t;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string encode_snapshot_store(const std::vector<WorldSnapshot>& snapshots) {
  detail::ByteWriter w;
  w.raw(kSidecarMagic);
  w.u16(1);
  w.u64(snapshots.size());
  std::uint64_t offset = 0;
  for (const auto& s : snapshots) {
    w.u64(offset);
    w.u64(s.bytes.size());
    offset += s.bytes.size();
  }
  for (const auto& s : snapshots) w.raw(s.bytes);
  return w.take();
}

std::vector<WorldSnapshot> decode_snapshot_store(std::string_view bytes) {
  detail::ByteReader r(bytes);
  std::string_view magic;
  std::uint16_t version = 0;
  std::uint64_t count = 0;
  if (!r.raw(kSidecarMagic.size(), magic) || magic != kSidecarMagic) throw CorruptDataset("snapshot store: bad magic");
  if (!r.u16(version)) throw CorruptDataset("snapshot store: truncated header");
  if (version != 1) throw VersionMismatch("snapshot store version " + std::to_string(version));
  if (!r.u64(count) || count > bytes.size() / 16) throw CorruptDataset("snapshot store: bad count");
  std::vector<std::pair<std::uint64_t, std::uint64_t>> index(count);
  for (auto& [off, len] : index) {
    if (!r.u64(off) || !r.u64(len)) throw CorruptDataset("snapshot store: truncated index");
  }
  const std::size_t base = kSidecarMagic.size() + 2 + 8 + 16 * count;
  std::vector<WorldSnapshot> out;
  out.reserve(count);
  std::uint64_t end = 0;
  for (const auto& [off, len] : index) {
    if (off != end || base + off + len > bytes.size()) throw CorruptDataset("snapshot store: truncated blob");
    out.push_back(WorldSnapshot{std::string(bytes.substr(base + off, len))});
    end = off + len;
  }
  if (base + end != bytes.size()) throw CorruptDataset("snapshot store: trailing bytes");
  return out;
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

  Dataset counted = dataset;
  counted.refresh_counts();
  std::string text = manifest_json(counted.manifest).dump() + "\n";
  for (const auto& r : dataset.records) text += record_json(r).dump() + "\n";
  write_file(path_in(dir, kRecordsFile), text);

  text.clear();
  for (const auto& t : dataset.trajectories) text += trajectory_json(t).dump() + "\n";
  write_file(path_in(dir, kTrajectoriesFile), text);

  write_file(path_in(dir, kSnapshotsFile), encode_snapshot_store(dataset.snapshots));
}

DatasetReader::DatasetReader(const std::string& dir) : in_(path_in(dir, kRecordsFile), std::ios::binary) {
  if (!in_) throw IoError("cannot open dataset " + path_in(dir, kRecordsFile));
  std::string line;
  if (!std::getline(in_, line)) throw CorruptDataset("dataset: missing manifest");
  try {
    manifest_ = manifest_from(Json::parse(line));
  } catch (const Json::exception& e) {
    throw CorruptDataset(std::string("dataset manifest: ") + e.what());
  }
  expected_ = manifest_.n_safe + manifest_.n_unsafe;
}

bool DatasetReader::next(TransitionRecord& out) {
  std::string line;
  ++line_;
  if (!std::getline(in_, line)) {
    if (read_ != expected_) {
      throw CorruptDataset("dataset: " + std::to_string(read_) + " records, manifest says " +
                           std::to_string(expected_));
    }
    return false;
  }
  if (in_.eof()) throw CorruptDataset("dataset: line " + std::to_string(line_) + " is truncated");
  if (read_ == expected_) throw CorruptDataset("dataset: more records than the manifest declares");
  try {
    out = record_from(Json::parse(line), manifest_.history_len);
  } catch (const Json::exception& e) {
    throw CorruptDataset("dataset line " + std::to_string(line_) + ": " + e.what());
  }
  ++read_;
  return true;
}

Dataset load_dataset(const std::string& dir) {
  Dataset ds;
  DatasetReader reader(dir);
  ds.manifest = reader.manifest();
  TransitionRecord r;
  while (reader.next(r)) ds.records.push_back(std::move(r));

  std::istringstream trajectories(read_file(path_in(dir, kTrajectoriesFile)));
  std::string line;
  while (std::getline(trajectories, line)) {
    if (trajectories.eof()) throw CorruptDataset("trajectories: truncated line");
    try {
      ds.trajectories.push_back(trajectory_from(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw CorruptDataset(std::string("trajectories: ") + e.what());
    }
  }
  ds.snapshots = decode_snapshot_store(read_file(path_in(dir, kSnapshotsFile)));

  const DatasetManifest declared = ds.manifest;
  ds.refresh_counts();
  if (!(ds.manifest == declared)) throw CorruptDataset("dataset: manifest counts do not match contents");
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    if (ds.trajectories[i].id != i) throw CorruptDataset("trajectories are not numbered consecutively");
    for (const auto& s : ds.trajectories[i].snapshots) {
      if (s.id >= ds.snapshots.size()) throw CorruptDataset("trajectory references a missing snapshot");
    }
  }
  for (const auto& rec : ds.records) {
    if (rec.trajectory_id >= ds.trajectories.size() || rec.snapshot_ref.id >= ds.snapshots.size()) {
      throw CorruptDataset("record references a missing trajectory or snapshot");
    }
  }
  return ds;
}

}  // namespace dcbf
