#pragma once
// Recording persistence: `<name>.json` header plus `<name>.f32` raw file of
// little-endian 32-bit floats, sample-major interleaved.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ictus/recording.hpp"

namespace ictus {

inline constexpr int kRecordingFormatVersion = 1;

namespace detail {

// Strip a trailing .json / .f32 so callers may pass either file or the base.
inline std::filesystem::path recording_base(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".json" || ext == ".f32") return path.parent_path() / path.stem();
  return path;
}

inline void atomic_write_bytes(const std::filesystem::path& path, const void* data,
                               size_t bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

inline void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
  atomic_write_bytes(path, text.data(), text.size());
}

}  // namespace detail

inline void save_recording(const Recording& rec, const std::filesystem::path& path) {
  validate(rec);
  const auto base = detail::recording_base(path);

  nlohmann::json header;
  header["version"] = kRecordingFormatVersion;
  header["patient_id"] = rec.patient_id;
  header["channels"] = rec.channel_count();
  header["fs"] = rec.fs;
  header["sample_count"] = rec.samples_per_channel();
  header["channel_names"] = rec.channel_names;
  auto& anns = header["annotations"] = nlohmann::json::array();
  for (const auto& a : rec.annotations) {
    anns.push_back({{"onset_s", a.onset_s},
                    {"offset_s", a.offset_s},
                    {"kind", a.kind == AnnotationKind::Clinical ? "clinical" : "synthetic"}});
  }
  detail::atomic_write_text(base.string() + ".json", header.dump(2) + "\n");

  // Interleave to sample-major: sample0*ch0, sample0*ch1, ...
  const size_t n_ch = rec.channel_count();
  const size_t n_samp = rec.samples_per_channel();
  const std::filesystem::path tmp = base.string() + ".f32.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + tmp.string());
    std::vector<float> frame_buf;
    const size_t chunk_frames = 1 << 16;
    frame_buf.resize(chunk_frames * n_ch);
    for (size_t t0 = 0; t0 < n_samp; t0 += chunk_frames) {
      const size_t frames = std::min(chunk_frames, n_samp - t0);
      for (size_t t = 0; t < frames; ++t) {
        for (size_t c = 0; c < n_ch; ++c) frame_buf[t * n_ch + c] = rec.samples[c][t0 + t];
      }
      out.write(reinterpret_cast<const char*>(frame_buf.data()),
                static_cast<std::streamsize>(frames * n_ch * sizeof(float)));
      if (!out) throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, base.string() + ".f32", ec);
  if (ec) throw IoError("rename failed: " + base.string() + ".f32: " + ec.message());
}

inline Recording load_recording(const std::filesystem::path& path) {
  const auto base = detail::recording_base(path);
  const std::filesystem::path header_path = base.string() + ".json";
  const std::filesystem::path raw_path = base.string() + ".f32";

  std::ifstream in(header_path);
  if (!in) throw IoError("cannot open header: " + header_path.string());
  nlohmann::json header;
  try {
    in >> header;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed header " + header_path.string() + ": " + e.what());
  }

  Recording rec;
  try {
    if (header.at("version").get<int>() != kRecordingFormatVersion) {
      throw DataError("unsupported recording version in " + header_path.string());
    }
    rec.patient_id = header.at("patient_id").get<std::string>();
    rec.fs = header.at("fs").get<double>();
    const size_t n_ch = header.at("channels").get<size_t>();
    const size_t n_samp = header.at("sample_count").get<size_t>();
    rec.channel_names = header.at("channel_names").get<std::vector<std::string>>();
    if (rec.channel_names.size() != n_ch) {
      throw DataError("header channel_names count mismatch in " + header_path.string());
    }
    for (const auto& a : header.at("annotations")) {
      SeizureAnnotation ann;
      ann.onset_s = a.at("onset_s").get<double>();
      ann.offset_s = a.at("offset_s").get<double>();
      ann.kind = a.at("kind").get<std::string>() == "synthetic" ? AnnotationKind::Synthetic
                                                                : AnnotationKind::Clinical;
      rec.annotations.push_back(ann);
    }

    std::ifstream raw(raw_path, std::ios::binary | std::ios::ate);
    if (!raw) throw IoError("cannot open raw file: " + raw_path.string());
    const auto bytes = static_cast<uint64_t>(raw.tellg());
    if (bytes != static_cast<uint64_t>(n_ch) * n_samp * sizeof(float)) {
      throw DataError("sample-count mismatch: header declares " + std::to_string(n_samp) +
                      " samples x " + std::to_string(n_ch) + " channels but " +
                      raw_path.string() + " holds " + std::to_string(bytes) + " bytes");
    }
    raw.seekg(0);
    rec.samples.assign(n_ch, std::vector<float>(n_samp));
    std::vector<float> frame_buf;
    const size_t chunk_frames = 1 << 16;
    frame_buf.resize(chunk_frames * n_ch);
    for (size_t t0 = 0; t0 < n_samp; t0 += chunk_frames) {
      const size_t frames = std::min(chunk_frames, n_samp - t0);
      raw.read(reinterpret_cast<char*>(frame_buf.data()),
               static_cast<std::streamsize>(frames * n_ch * sizeof(float)));
      if (!raw) throw IoError("read failed: " + raw_path.string());
      for (size_t t = 0; t < frames; ++t) {
        for (size_t c = 0; c < n_ch; ++c) rec.samples[c][t0 + t] = frame_buf[t * n_ch + c];
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed header " + header_path.string() + ": " + e.what());
  }

  validate(rec);
  return rec;
}

}  // namespace ictus
