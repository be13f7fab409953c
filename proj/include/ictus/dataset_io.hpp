#pragma once
// Dataset directory layout: meta.json + images.f32 (row-major pixels, images
// concatenated in order) + labels.u8.

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ictus/imaging.hpp"
#include "ictus/recording_io.hpp"

namespace ictus {

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  if (ds.images.empty()) throw DataError("save_dataset: empty dataset");
  std::filesystem::create_directories(dir);
  const ImageType type = ds.images[0].type;
  const size_t pixels_per_image = ds.images[0].pixels.size();

  nlohmann::json meta;
  meta["version"] = 1;
  meta["image_type"] = to_string(type);
  meta["rows"] = ds.images[0].rows;
  meta["cols"] = ds.images[0].cols;
  meta["count"] = ds.images.size();
  meta["preictal_count"] = ds.preictal_count;
  meta["interictal_count"] = ds.interictal_count;
  meta["seed"] = ds.seed;
  meta["stats"] = {{"per_channel", ds.stats.per_channel},
                   {"mean", ds.stats.mean},
                   {"half_range", ds.stats.half_range}};
  detail::atomic_write_text(dir / "meta.json", meta.dump(2) + "\n");

  {
    const auto tmp = dir / "images.f32.tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for write: " + tmp.string());
    for (const auto& img : ds.images) {
      if (img.pixels.size() != pixels_per_image || img.type != type) {
        throw DataError("save_dataset: mixed image shapes");
      }
      out.write(reinterpret_cast<const char*>(img.pixels.data()),
                static_cast<std::streamsize>(img.pixels.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + tmp.string());
    out.close();
    std::filesystem::rename(tmp, dir / "images.f32");
  }
  {
    std::vector<uint8_t> labels(ds.images.size());
    for (size_t i = 0; i < ds.images.size(); ++i) {
      labels[i] = static_cast<uint8_t>(ds.images[i].label);
    }
    detail::atomic_write_bytes(dir / "labels.u8", labels.data(), labels.size());
  }
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw IoError("cannot open: " + (dir / "meta.json").string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed dataset meta: " + std::string(e.what()));
  }

  Dataset ds;
  const ImageType type = parse_image_type(meta.at("image_type").get<std::string>());
  const int rows = meta.at("rows").get<int>();
  const int cols = meta.at("cols").get<int>();
  const size_t count = meta.at("count").get<size_t>();
  ds.preictal_count = meta.at("preictal_count").get<size_t>();
  ds.interictal_count = meta.at("interictal_count").get<size_t>();
  ds.seed = meta.at("seed").get<uint64_t>();
  ds.stats.per_channel = meta.at("stats").at("per_channel").get<bool>();
  ds.stats.mean = meta.at("stats").at("mean").get<std::vector<double>>();
  ds.stats.half_range = meta.at("stats").at("half_range").get<std::vector<double>>();

  const size_t pixels_per_image = static_cast<size_t>(rows) * static_cast<size_t>(cols);
  std::ifstream img_in(dir / "images.f32", std::ios::binary | std::ios::ate);
  if (!img_in) throw IoError("cannot open: " + (dir / "images.f32").string());
  if (static_cast<size_t>(img_in.tellg()) != count * pixels_per_image * sizeof(float)) {
    throw DataError("dataset images.f32 size mismatch");
  }
  img_in.seekg(0);
  std::ifstream lbl_in(dir / "labels.u8", std::ios::binary | std::ios::ate);
  if (!lbl_in) throw IoError("cannot open: " + (dir / "labels.u8").string());
  if (static_cast<size_t>(lbl_in.tellg()) != count) {
    throw DataError("dataset labels.u8 size mismatch");
  }
  lbl_in.seekg(0);

  ds.images.resize(count);
  for (auto& img : ds.images) {
    img.type = type;
    img.rows = rows;
    img.cols = cols;
    img.pixels.resize(pixels_per_image);
    img_in.read(reinterpret_cast<char*>(img.pixels.data()),
                static_cast<std::streamsize>(pixels_per_image * sizeof(float)));
    uint8_t label = 0;
    lbl_in.read(reinterpret_cast<char*>(&label), 1);
    img.label = static_cast<ImageLabel>(label);
  }
  if (!img_in || !lbl_in) throw IoError("dataset read failed");
  return ds;
}

}  // namespace ictus
