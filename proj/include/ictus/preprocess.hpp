#pragma once
// Deterministic preprocessing ahead of imaging: Butterworth bandpass, mains
// notch, average referencing, and an optional external artifact-removal hook
// standing in for the expert-reviewed ICA stage.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "ictus/biquad.hpp"
#include "ictus/recording.hpp"
#include "ictus/recording_io.hpp"

namespace ictus {

struct PreprocessConfig {
  double band_low_hz = 0.5;
  double band_high_hz = 100.0;
  int band_order = 4;
  bool bandpass_enabled = true;

  double notch_hz = 50.0;
  double notch_q = 25.0;
  bool notch_enabled = true;

  bool apply_average_reference = true;
  std::string ica_hook_command;  // empty = off; run as `<command> <in> <out>`
};

inline void validate(const PreprocessConfig& cfg, double fs) {
  if (cfg.bandpass_enabled &&
      !(cfg.band_low_hz > 0.0 && cfg.band_low_hz < cfg.band_high_hz &&
        cfg.band_high_hz < fs / 2.0)) {
    throw DataError("preprocess: need 0 < band_low < band_high < fs/2");
  }
  if (cfg.notch_enabled && !(cfg.notch_hz > 0.0 && cfg.notch_hz < fs / 2.0 && cfg.notch_q > 0.0)) {
    throw DataError("preprocess: need 0 < notch_hz < fs/2 and notch_q > 0");
  }
}

// ---------------------------------------------------------------------------
// Plain-text key-value config file.
// ---------------------------------------------------------------------------

inline std::map<std::string, std::string> load_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (!key.empty()) kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline PreprocessConfig load_preprocess_config(const std::filesystem::path& path) {
  const auto kv = load_key_value_file(path);
  PreprocessConfig cfg;
  auto get = [&](const char* key, auto& slot) {
    const auto it = kv.find(key);
    if (it == kv.end()) return;
    std::istringstream ss(it->second);
    ss >> slot;
  };
  get("band_low_hz", cfg.band_low_hz);
  get("band_high_hz", cfg.band_high_hz);
  get("band_order", cfg.band_order);
  get("bandpass_enabled", cfg.bandpass_enabled);
  get("notch_hz", cfg.notch_hz);
  get("notch_q", cfg.notch_q);
  get("notch_enabled", cfg.notch_enabled);
  get("apply_average_reference", cfg.apply_average_reference);
  if (const auto it = kv.find("ica_hook_command"); it != kv.end()) cfg.ica_hook_command = it->second;
  return cfg;
}

inline void save_preprocess_config(const PreprocessConfig& cfg,
                                   const std::filesystem::path& path) {
  std::ostringstream out;
  out << "band_low_hz = " << cfg.band_low_hz << "\n"
      << "band_high_hz = " << cfg.band_high_hz << "\n"
      << "band_order = " << cfg.band_order << "\n"
      << "bandpass_enabled = " << cfg.bandpass_enabled << "\n"
      << "notch_hz = " << cfg.notch_hz << "\n"
      << "notch_q = " << cfg.notch_q << "\n"
      << "notch_enabled = " << cfg.notch_enabled << "\n"
      << "apply_average_reference = " << cfg.apply_average_reference << "\n"
      << "ica_hook_command = " << cfg.ica_hook_command << "\n";
  detail::atomic_write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// Stages.
// ---------------------------------------------------------------------------

// Subtract the instantaneous cross-channel mean from every sample.
inline Recording average_reference(Recording rec) {
  const size_t n_ch = rec.channel_count();
  if (n_ch < 2) throw DataError("average_reference: needs at least 2 channels");
  const size_t n = rec.samples_per_channel();
  for (size_t t = 0; t < n; ++t) {
    double sum = 0.0;
    for (size_t c = 0; c < n_ch; ++c) sum += rec.samples[c][t];
    const double mean = sum / static_cast<double>(n_ch);
    for (size_t c = 0; c < n_ch; ++c) {
      rec.samples[c][t] = static_cast<float>(rec.samples[c][t] - mean);
    }
  }
  return rec;
}

namespace detail {

inline Recording run_ica_hook(Recording rec, const std::string& command) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("ictus_hook_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(dir);
  const auto in_base = dir / "in";
  const auto out_base = dir / "out";
  save_recording(rec, in_base);
  const std::string cmdline =
      command + " '" + in_base.string() + "' '" + out_base.string() + "'";
  const int status = std::system(cmdline.c_str());
  if (status != 0) {
    std::filesystem::remove_all(dir);
    throw IoError("ica hook failed with status " + std::to_string(status) + ": " + command);
  }
  Recording out = load_recording(out_base);
  std::filesystem::remove_all(dir);
  return out;
}

}  // namespace detail

// Stage order: bandpass -> notch -> average reference -> external hook.
// Annotations and fs pass through untouched.
inline Recording preprocess_recording(Recording rec, const PreprocessConfig& cfg) {
  validate(cfg, rec.fs);
  const auto annotations = rec.annotations;
  const double fs = rec.fs;

  if (cfg.bandpass_enabled) {
    const auto band = design_bandpass(rec.fs, cfg.band_low_hz, cfg.band_high_hz, cfg.band_order);
#pragma omp parallel for schedule(static)
    for (long c = 0; c < static_cast<long>(rec.samples.size()); ++c) {
      apply_filter_inplace(rec.samples[c], band);
    }
  }
  if (cfg.notch_enabled) {
    const auto notch = design_notch(rec.fs, cfg.notch_hz, cfg.notch_q);
#pragma omp parallel for schedule(static)
    for (long c = 0; c < static_cast<long>(rec.samples.size()); ++c) {
      apply_filter_inplace(rec.samples[c], notch);
    }
  }
  if (cfg.apply_average_reference) {
    rec = average_reference(std::move(rec));
  }
  if (!cfg.ica_hook_command.empty()) {
    rec = detail::run_ica_hook(std::move(rec), cfg.ica_hook_command);
  }

  rec.annotations = annotations;
  rec.fs = fs;
  validate(rec);
  return rec;
}

}  // namespace ictus
