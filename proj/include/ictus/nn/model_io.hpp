#pragma once
// Versioned model file: magic + JSON header (spec, seed, normalization stats)
// followed by parameter blobs in declaration order, little-endian float32.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ictus/imaging.hpp"
#include "ictus/nn/network.hpp"
#include "ictus/recording_io.hpp"

namespace ictus::nn {

inline constexpr char kModelMagic[8] = {'I', 'C', 'T', 'U', 'S', 'N', 'N', '1'};

inline nlohmann::json spec_to_json(const NetworkSpec& spec) {
  nlohmann::json j;
  j["input_h"] = spec.input_h;
  j["input_w"] = spec.input_w;
  j["image_type"] = ictus::to_string(spec.image_type);
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& l : spec.layers) {
    nlohmann::json lj;
    lj["kind"] = to_string(l.kind);
    switch (l.kind) {
      case LayerKind::Conv:
        lj["filters"] = l.filters;
        lj["kernel"] = {l.kernel_h, l.kernel_w};
        lj["stride"] = {l.stride_h, l.stride_w};
        lj["padding"] = {l.pad.top, l.pad.bottom, l.pad.left, l.pad.right};
        break;
      case LayerKind::MaxPool:
        lj["pool"] = {l.pool_h, l.pool_w};
        lj["stride"] = {l.stride_h, l.stride_w};
        break;
      case LayerKind::Dropout: lj["rate"] = l.rate; break;
      case LayerKind::FullyConnected: lj["units"] = l.units; break;
      default: break;
    }
    layers.push_back(lj);
  }
  return j;
}

inline NetworkSpec spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.input_h = j.at("input_h").get<int>();
  spec.input_w = j.at("input_w").get<int>();
  spec.image_type = parse_image_type(j.at("image_type").get<std::string>());
  for (const auto& lj : j.at("layers")) {
    const std::string kind = lj.at("kind").get<std::string>();
    if (kind == "conv") {
      const auto k = lj.at("kernel").get<std::vector<int>>();
      const auto s = lj.at("stride").get<std::vector<int>>();
      const auto p = lj.at("padding").get<std::vector<int>>();
      spec.layers.push_back(LayerSpec::conv(lj.at("filters").get<int>(), k[0], k[1], s[0], s[1],
                                            {p[0], p[1], p[2], p[3]}));
    } else if (kind == "batchnorm") {
      spec.layers.push_back(LayerSpec::batchnorm());
    } else if (kind == "instancenorm") {
      spec.layers.push_back(LayerSpec::instancenorm());
    } else if (kind == "relu") {
      spec.layers.push_back(LayerSpec::relu());
    } else if (kind == "maxpool") {
      const auto pool = lj.at("pool").get<std::vector<int>>();
      const auto s = lj.at("stride").get<std::vector<int>>();
      spec.layers.push_back(LayerSpec::maxpool(pool[0], pool[1], s[0], s[1]));
    } else if (kind == "dropout") {
      spec.layers.push_back(LayerSpec::dropout(lj.at("rate").get<double>()));
    } else if (kind == "fullyconnected") {
      spec.layers.push_back(LayerSpec::fully_connected(lj.at("units").get<int>()));
    } else if (kind == "softmax") {
      spec.layers.push_back(LayerSpec::softmax());
    } else {
      throw DataError("model: unknown layer kind " + kind);
    }
  }
  return spec;
}

// The normalization statistics and the pre-ictal time the network was
// trained for ride along with the model, so inference can reproduce the
// training-time mapping and the sweep can identify the (type, X) pair.
inline void save_model(const Network<float>& net, const NormStats& stats, int preictal_min,
                       const std::filesystem::path& path) {
  nlohmann::json header;
  header["spec"] = spec_to_json(net.spec);
  header["seed"] = net.seed;
  header["preictal_min"] = preictal_min;
  header["stats"] = {{"per_channel", stats.per_channel},
                     {"mean", stats.mean},
                     {"half_range", stats.half_range}};
  const std::string header_text = header.dump();

  const std::filesystem::path tmp = path.string() + ".tmp";
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for write: " + tmp.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  const auto header_len = static_cast<uint32_t>(header_text.size());
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), header_len);

  auto write_tensor = [&](const Tensor<float>& t) {
    const auto count = static_cast<uint64_t>(t.size());
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(t.ptr()),
              static_cast<std::streamsize>(count * sizeof(float)));
  };
  for (const auto& p : net.params) {
    write_tensor(p.w);
    write_tensor(p.b);
    write_tensor(p.running_mean);
    write_tensor(p.running_var);
  }
  if (!out) throw IoError("write failed: " + tmp.string());
  out.close();
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

struct LoadedModel {
  Network<float> net;
  NormStats stats;
  int preictal_min{0};
};

inline LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model: " + path.string());

  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw DataError("model: bad magic or version in " + path.string());
  }
  uint32_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), header_len);
  if (!in) throw DataError("model: truncated header in " + path.string());

  LoadedModel loaded;
  try {
    const auto header = nlohmann::json::parse(header_text);
    loaded.net.spec = spec_from_json(header.at("spec"));
    loaded.net.seed = header.at("seed").get<uint64_t>();
    loaded.net.rng.seed(loaded.net.seed);
    loaded.preictal_min = header.at("preictal_min").get<int>();
    loaded.stats.per_channel = header.at("stats").at("per_channel").get<bool>();
    loaded.stats.mean = header.at("stats").at("mean").get<std::vector<double>>();
    loaded.stats.half_range = header.at("stats").at("half_range").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model: malformed header: " + std::string(e.what()));
  }

  // Freshly initialize to get the expected tensor shapes, then overwrite.
  auto expected = init_network<float>(loaded.net.spec, loaded.net.seed);
  loaded.net.params = std::move(expected.params);

  auto read_tensor = [&](Tensor<float>& t) {
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || count != t.size()) {
      throw DataError("model: parameter shape mismatch or truncated file in " + path.string());
    }
    in.read(reinterpret_cast<char*>(t.ptr()), static_cast<std::streamsize>(count * sizeof(float)));
  };
  for (auto& p : loaded.net.params) {
    read_tensor(p.w);
    read_tensor(p.b);
    read_tensor(p.running_mean);
    read_tensor(p.running_var);
  }
  if (!in) throw DataError("model: truncated file: " + path.string());
  return loaded;
}

// Convenience guard for stage wiring: the model must serve this image type.
inline LoadedModel load_model(const std::filesystem::path& path, ImageType expected_type) {
  auto loaded = load_model(path);
  if (loaded.net.spec.image_type != expected_type) {
    throw DataError("model " + path.string() + " serves " +
                    std::string(ictus::to_string(loaded.net.spec.image_type)) +
                    " images, expected " + ictus::to_string(expected_type));
  }
  return loaded;
}

}  // namespace ictus::nn
