#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gctm {

// Per-stage cache bookkeeping for the pipeline CLI. A stage's hash covers its
// config subset plus the hashes of its upstream stages, so any upstream or
// config change invalidates everything downstream.
struct StageEntry {
  std::string stage;
  std::uint64_t hash = 0;
  std::vector<std::string> outputs;        // paths relative to the artifact root
  std::string config_snapshot;             // canonical config subset
};

class PipelineManifest {
 public:
  static PipelineManifest load_or_empty(const std::string& dir);

  const StageEntry* find(const std::string& stage) const;
  void record(StageEntry entry);
  void save(const std::string& dir) const;

  // True when the stage entry exists with this hash and all outputs exist.
  bool fresh(const std::string& dir, const std::string& stage, std::uint64_t hash) const;

 private:
  std::map<std::string, StageEntry> stages_;
};

std::uint64_t hash_file_contents(const std::string& path);

}  // namespace gctm
