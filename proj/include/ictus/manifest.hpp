#pragma once
// Run manifests: every CLI stage records its inputs, seeds, timings, and the
// content hash of each artifact it wrote, so identical reruns are checkable
// by hash equality.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ictus/recording_io.hpp"

namespace ictus {

inline constexpr const char* kToolVersion = "0.1.0";

inline uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot hash missing file: " + path.string());
  uint64_t hash = 14695981039346656037ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = static_cast<size_t>(in.gcount());
    for (size_t i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return hash;
}

struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::vector<std::string> config_files;
  std::map<std::string, uint64_t> seeds;
  std::map<std::string, double> timings_ms;

  struct Output {
    std::string path;
    uint64_t bytes{0};
    std::string fnv1a64;
  };
  std::vector<Output> outputs;

  void add_output(const std::filesystem::path& path) {
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(path)));
    outputs.push_back({path.string(), std::filesystem::file_size(path), hex});
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    j["args"] = args;
    j["config_files"] = config_files;
    j["seeds"] = seeds;
    j["timings_ms"] = timings_ms;
    auto& outs = j["outputs"] = nlohmann::json::array();
    for (const auto& o : outputs) {
      outs.push_back({{"path", o.path}, {"bytes", o.bytes}, {"fnv1a64", o.fnv1a64}});
    }
    detail::atomic_write_text(path, j.dump(2) + "\n");
  }
};

// Wall-clock stage timer feeding RunManifest::timings_ms.
class StageTimer {
 public:
  StageTimer(RunManifest& manifest, std::string stage)
      : manifest_(manifest), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    manifest_.timings_ms[stage_] =
        std::chrono::duration<double, std::milli>(elapsed).count();
  }

 private:
  RunManifest& manifest_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ictus
