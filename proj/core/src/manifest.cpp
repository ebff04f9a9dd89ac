#include "gctm/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gctm/config.hpp"
#include "gctm/error.hpp"

namespace gctm {

namespace fs = std::filesystem;

PipelineManifest PipelineManifest::load_or_empty(const std::string& dir) {
  PipelineManifest manifest;
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ifstream in(path);
  if (!in) return manifest;
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw FormatError("corrupt manifest: " + path.string());
  for (const auto& item : j.at("stages")) {
    StageEntry entry;
    entry.stage = item.at("stage").get<std::string>();
    entry.hash = std::stoull(item.at("hash").get<std::string>(), nullptr, 16);
    entry.outputs = item.at("outputs").get<std::vector<std::string>>();
    entry.config_snapshot = item.at("config").get<std::string>();
    manifest.stages_[entry.stage] = std::move(entry);
  }
  return manifest;
}

const StageEntry* PipelineManifest::find(const std::string& stage) const {
  auto it = stages_.find(stage);
  return it == stages_.end() ? nullptr : &it->second;
}

void PipelineManifest::record(StageEntry entry) { stages_[entry.stage] = std::move(entry); }

void PipelineManifest::save(const std::string& dir) const {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& [_, entry] : stages_) {
    std::ostringstream hex;
    hex << std::hex << entry.hash;
    stages.push_back({{"stage", entry.stage},
                      {"hash", hex.str()},
                      {"outputs", entry.outputs},
                      {"config", entry.config_snapshot}});
  }
  nlohmann::json j{{"version", 1}, {"stages", stages}};
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write manifest: " + path.string());
  out << j.dump(2) << '\n';
}

bool PipelineManifest::fresh(const std::string& dir, const std::string& stage,
                             std::uint64_t hash) const {
  const StageEntry* entry = find(stage);
  if (entry == nullptr || entry->hash != hash) return false;
  for (const std::string& rel : entry->outputs) {
    if (!fs::exists(fs::path(dir) / rel)) return false;
  }
  return true;
}

std::uint64_t hash_file_contents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open for hashing: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

}  // namespace gctm
