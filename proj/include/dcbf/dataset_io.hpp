#pragma once

// On-disk dataset layout (a directory):
//
//   dataset.ndjson       line 1: manifest object; then one record per line
//   trajectories.ndjson  one trajectory log (actions + snapshot refs) per line
//   snapshots.bin        indexed sidecar of WorldSnapshot blobs
//
// snapshots.bin: "DCBFSIDX", u16 version, u64 count, count x (u64 offset,
// u64 length) relative to the end of the index, then the blobs. All
// little-endian.

#include "dcbf/data.hpp"

#include <fstream>
#include <string>

namespace dcbf {

inline constexpr int kDatasetFormatVersion = 1;

void save_dataset(const Dataset& dataset, const std::string& dir);

/// Throws CorruptDataset on malformed or truncated content, VersionMismatch
/// on an unknown format version and IoError when files cannot be opened.
Dataset load_dataset(const std::string& dir);

/// Reads records one at a time without materializing the dataset.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& dir);

  const DatasetManifest& manifest() const { return manifest_; }
  /// False at a clean end of stream; throws CorruptDataset on bad lines or
  /// when the stream ends short of the manifest's record count.
  bool next(TransitionRecord& out);

 private:
  std::ifstream in_;
  DatasetManifest manifest_;
  std::uint64_t expected_ = 0;
  std::uint64_t read_ = 0;
  std::uint64_t line_ = 1;
};

/// Sidecar helpers, exposed for tests and tools.
std::string encode_snapshot_store(const std::vector<WorldSnapshot>& snapshots);
std::vector<WorldSnapshot> decode_snapshot_store(std::string_view bytes);

}  // namespace dcbf
