#pragma once
// Signal-to-image pipeline: [0,1] normalization, the 1 s / 5 s / 10 s window
// rules (train pre-ictal with 0.5 s step, train inter-ictal without overlap,
// test stream at one image per second), and class balancing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ictus/recording.hpp"

namespace ictus {

inline constexpr int kImageCols = 256;
inline constexpr int kImageChannels = 19;

enum class ImageType : uint8_t { OneSec, FiveSec, TenSec };

inline int stack_count(ImageType t) {
  switch (t) {
    case ImageType::OneSec: return 1;
    case ImageType::FiveSec: return 5;
    default: return 10;
  }
}

inline int image_rows(ImageType t) { return kImageChannels * stack_count(t); }
inline int64_t window_samples(ImageType t) { return stack_count(t) * kImageCols; }

inline const char* to_string(ImageType t) {
  switch (t) {
    case ImageType::OneSec: return "1s";
    case ImageType::FiveSec: return "5s";
    default: return "10s";
  }
}

inline int image_seconds(ImageType t) { return stack_count(t); }

inline ImageType parse_image_type(const std::string& s) {
  if (s == "1s" || s == "1") return ImageType::OneSec;
  if (s == "5s" || s == "5") return ImageType::FiveSec;
  if (s == "10s" || s == "10") return ImageType::TenSec;
  throw DataError("unknown image type: " + s + " (expected 1s, 5s, or 10s)");
}

// ---------------------------------------------------------------------------
// Normalization.
// ---------------------------------------------------------------------------

// Center on the mean, divide by twice the absolute maximum of the centered
// signal, add 0.5. Global scope uses one scalar pair for all channels.
struct NormStats {
  std::vector<double> mean;        // one entry, or one per channel
  std::vector<double> half_range;  // 2 * max |x - mean|
  bool per_channel = false;
};

inline NormStats compute_norm_stats(const Recording& rec, bool per_channel = false,
                                    size_t sample_begin = 0,
                                    size_t sample_end = std::numeric_limits<size_t>::max()) {
  const size_t n = rec.samples_per_channel();
  sample_end = std::min(sample_end, n);
  if (rec.samples.empty() || sample_begin >= sample_end) {
    throw DataError("compute_norm_stats: empty signal");
  }
  NormStats stats;
  stats.per_channel = per_channel;
  auto stats_over = [&](size_t c_begin, size_t c_end) {
    double sum = 0.0;
    size_t count = 0;
    for (size_t c = c_begin; c < c_end; ++c) {
      for (size_t t = sample_begin; t < sample_end; ++t) sum += rec.samples[c][t];
      count += sample_end - sample_begin;
    }
    const double mean = sum / static_cast<double>(count);
    double max_abs = 0.0;
    for (size_t c = c_begin; c < c_end; ++c) {
      for (size_t t = sample_begin; t < sample_end; ++t) {
        max_abs = std::max(max_abs, std::abs(rec.samples[c][t] - mean));
      }
    }
    stats.mean.push_back(mean);
    stats.half_range.push_back(2.0 * max_abs);
  };
  if (per_channel) {
    for (size_t c = 0; c < rec.channel_count(); ++c) stats_over(c, c + 1);
  } else {
    stats_over(0, rec.channel_count());
  }
  return stats;
}

struct NormalizedSignal {
  std::vector<std::vector<float>> channels;
  double fs{kStandardSampleRate};
  size_t clamp_count{0};  // values that fell outside [0,1] before clamping

  size_t samples_per_channel() const { return channels.empty() ? 0 : channels[0].size(); }
};

inline NormalizedSignal normalize(const Recording& rec, const NormStats& stats) {
  if (stats.mean.empty() || stats.mean.size() != stats.half_range.size()) {
    throw DataError("normalize: malformed stats");
  }
  if (stats.per_channel && stats.mean.size() != rec.channel_count()) {
    throw DataError("normalize: per-channel stats do not match channel count");
  }
  NormalizedSignal out;
  out.fs = rec.fs;
  out.channels.assign(rec.channel_count(), {});
  size_t clamps = 0;
#pragma omp parallel for schedule(static) reduction(+ : clamps)
  for (long c = 0; c < static_cast<long>(rec.channel_count()); ++c) {
    const size_t idx = stats.per_channel ? static_cast<size_t>(c) : 0;
    const double mean = stats.mean[idx];
    const double half_range = stats.half_range[idx];
    auto& dst = out.channels[static_cast<size_t>(c)];
    const auto& src = rec.samples[static_cast<size_t>(c)];
    dst.resize(src.size());
    for (size_t t = 0; t < src.size(); ++t) {
      if (half_range == 0.0) {
        dst[t] = 0.5f;
        continue;
      }
      const double v = (src[t] - mean) / half_range + 0.5;
      if (v < 0.0 || v > 1.0) ++clamps;
      dst[t] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  out.clamp_count = clamps;
  return out;
}

// ---------------------------------------------------------------------------
// Image tensors.
// ---------------------------------------------------------------------------

enum class ImageLabel : uint8_t { Interictal = 0, Preictal = 1, Unlabeled = 2 };

struct ImageTensor {
  std::vector<float> pixels;  // rows x cols, row-major
  int rows{0}, cols{kImageCols};
  ImageLabel label{ImageLabel::Unlabeled};
  double t_end_s{0.0};  // timestamp just past the window's last sample
  ImageType type{ImageType::OneSec};
  int seizure_index{-1};   // provenance
  int64_t start_sample{0};
};

struct Dataset {
  std::vector<ImageTensor> images;
  size_t preictal_count{0};
  size_t interictal_count{0};
  uint64_t seed{0};
  NormStats stats;
};

namespace detail {

inline void require_imageable(const NormalizedSignal& sig) {
  if (sig.channels.size() != kImageChannels) {
    throw DataError("imaging: expected " + std::to_string(kImageChannels) + " channels, got " +
                    std::to_string(sig.channels.size()));
  }
  if (sig.fs != kStandardSampleRate) {
    throw DataError("imaging: expected fs=256");
  }
}

// First sample fully inside [start_s, end_s), and one past the last.
inline int64_t first_sample_at_or_after(double t_s, double fs) {
  return static_cast<int64_t>(std::ceil(t_s * fs - 1e-9));
}

inline ImageTensor cut_image(const NormalizedSignal& sig, int64_t start, ImageType type) {
  const int k = stack_count(type);
  ImageTensor img;
  img.type = type;
  img.rows = image_rows(type);
  img.cols = kImageCols;
  img.start_sample = start;
  img.t_end_s = static_cast<double>(start + window_samples(type)) / sig.fs;
  img.pixels.resize(static_cast<size_t>(img.rows) * kImageCols);
  // Stacked segments, earliest on top: segment s covers rows [s*19, s*19+19).
  for (int seg = 0; seg < k; ++seg) {
    for (int ch = 0; ch < kImageChannels; ++ch) {
      const float* src = sig.channels[ch].data() + start + static_cast<int64_t>(seg) * kImageCols;
      float* dst = img.pixels.data() + (static_cast<size_t>(seg) * kImageChannels + ch) * kImageCols;
      std::copy(src, src + kImageCols, dst);
    }
  }
  return img;
}

}  // namespace detail

// Pre-ictal training images: 0.5 s step for every image type (50% overlap for
// 1 s images, the paper's "0.5 s to 5.5 s" shift for the stacked ones).
inline std::vector<ImageTensor> build_train_preictal(const NormalizedSignal& sig,
                                                     const std::vector<SeizureContext>& contexts,
                                                     ImageType type,
                                                     std::vector<std::string>* warnings = nullptr) {
  detail::require_imageable(sig);
  const int64_t win = window_samples(type);
  const int64_t step = kImageCols / 2;  // 128 samples = 0.5 s
  const auto total = static_cast<int64_t>(sig.samples_per_channel());

  std::vector<ImageTensor> images;
  for (const auto& ctx : contexts) {
    for (const auto& iv : ctx.preictal) {
      const int64_t a = detail::first_sample_at_or_after(iv.start_s, sig.fs);
      const int64_t b = std::min(total, detail::first_sample_at_or_after(iv.end_s, sig.fs));
      if (b - a < win) {
        if (warnings) {
          warnings->push_back("pre-ictal interval [" + std::to_string(iv.start_s) + ", " +
                              std::to_string(iv.end_s) + ") shorter than one " +
                              std::string(to_string(type)) + " window; no images");
        }
        continue;
      }
      for (int64_t s = a; s + win <= b; s += step) {
        auto img = detail::cut_image(sig, s, type);
        img.label = ImageLabel::Preictal;
        img.seizure_index = static_cast<int>(ctx.seizure_index);
        images.push_back(std::move(img));
      }
    }
  }
  std::stable_sort(images.begin(), images.end(),
                   [](const ImageTensor& x, const ImageTensor& y) { return x.t_end_s < y.t_end_s; });
  return images;
}

// Inter-ictal training images: non-overlapping candidate windows from the
// inter-ictal stretch before each training seizure, an equal share drawn
// uniformly without replacement from each, shortfalls redistributed.
inline std::vector<ImageTensor> build_train_interictal(
    const NormalizedSignal& sig, const std::vector<SeizureContext>& contexts, ImageType type,
    size_t needed_count, uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  detail::require_imageable(sig);
  if (contexts.empty()) throw DataError("build_train_interictal: no training seizures");
  const int64_t win = window_samples(type);
  const int64_t step = win;  // no overlap
  const auto total = static_cast<int64_t>(sig.samples_per_channel());

  std::vector<std::vector<int64_t>> candidates(contexts.size());
  size_t total_candidates = 0;
  for (size_t i = 0; i < contexts.size(); ++i) {
    for (const auto& iv : contexts[i].preceding_interictal) {
      const int64_t a = detail::first_sample_at_or_after(iv.start_s, sig.fs);
      const int64_t b = std::min(total, detail::first_sample_at_or_after(iv.end_s, sig.fs));
      for (int64_t s = a; s + win <= b; s += step) candidates[i].push_back(s);
    }
    total_candidates += candidates[i].size();
  }
  if (total_candidates < needed_count) {
    throw DataError("build_train_interictal: only " + std::to_string(total_candidates) +
                    " candidate windows for " + std::to_string(needed_count) + " images");
  }

  // Equal share per training seizure, remainder to the earliest ones.
  const size_t n = contexts.size();
  std::vector<size_t> quota(n, needed_count / n);
  for (size_t i = 0; i < needed_count % n; ++i) ++quota[i];
  std::vector<size_t> take(n);
  for (size_t i = 0; i < n; ++i) take[i] = std::min(quota[i], candidates[i].size());
  size_t deficit = needed_count;
  for (size_t i = 0; i < n; ++i) deficit -= take[i];
  while (deficit > 0) {
    bool progressed = false;
    for (size_t i = 0; i < n && deficit > 0; ++i) {
      if (take[i] < candidates[i].size()) {
        ++take[i];
        --deficit;
        progressed = true;
      }
    }
    if (!progressed) throw DataError("build_train_interictal: cannot satisfy request");
  }
  if (warnings) {
    for (size_t i = 0; i < n; ++i) {
      if (take[i] != quota[i]) {
        warnings->push_back("inter-ictal region before seizure " +
                            std::to_string(contexts[i].seizure_index) + " supplied " +
                            std::to_string(take[i]) + " of " + std::to_string(quota[i]) +
                            " requested images; shortfall redistributed");
      }
    }
  }

  // Partial Fisher-Yates per region with one shared, seeded stream.
  std::mt19937_64 rng(seed);
  std::vector<ImageTensor> images;
  images.reserve(needed_count);
  for (size_t i = 0; i < n; ++i) {
    auto& cand = candidates[i];
    for (size_t j = 0; j < take[i]; ++j) {
      std::uniform_int_distribution<size_t> pick(j, cand.size() - 1);
      std::swap(cand[j], cand[pick(rng)]);
    }
    std::sort(cand.begin(), cand.begin() + static_cast<long>(take[i]));
    for (size_t j = 0; j < take[i]; ++j) {
      auto img = detail::cut_image(sig, cand[j], type);
      img.label = ImageLabel::Interictal;
      img.seizure_index = static_cast<int>(contexts[i].seizure_index);
      images.push_back(std::move(img));
    }
  }
  std::stable_sort(images.begin(), images.end(),
                   [](const ImageTensor& x, const ImageTensor& y) { return x.t_end_s < y.t_end_s; });
  return images;
}

// Test stream: one image per second for every type; labels stamped from the
// timeline only so the evaluation can do its bookkeeping.
inline std::vector<ImageTensor> build_test_stream(const NormalizedSignal& sig, ImageType type,
                                                  int64_t start_sample = 0,
                                                  const Timeline* timeline = nullptr) {
  detail::require_imageable(sig);
  const int64_t win = window_samples(type);
  const auto total = static_cast<int64_t>(sig.samples_per_channel());
  if (total - start_sample < win) {
    throw DataError("build_test_stream: test signal shorter than one window");
  }

  std::vector<ImageTensor> images;
  images.reserve(static_cast<size_t>((total - start_sample - win) / kImageCols) + 1);
  for (int64_t s = start_sample; s + win <= total; s += kImageCols) {
    auto img = detail::cut_image(sig, s, type);
    if (timeline) {
      const double t_last = img.t_end_s - 0.5 / sig.fs;
      for (const auto& iv : timeline->intervals) {
        if (t_last >= iv.start_s && t_last < iv.end_s) {
          img.label = iv.label == StageLabel::Preictal    ? ImageLabel::Preictal
                      : iv.label == StageLabel::Interictal ? ImageLabel::Interictal
                                                           : ImageLabel::Unlabeled;
          break;
        }
      }
    }
    images.push_back(std::move(img));
  }
  return images;
}

// Seeded shuffle of the merged classes; counts must already match.
inline Dataset balance(std::vector<ImageTensor> preictal, std::vector<ImageTensor> interictal,
                       uint64_t seed) {
  if (preictal.empty() || interictal.empty()) {
    throw DataError("balance: empty class");
  }
  if (preictal.size() != interictal.size()) {
    throw DataError("balance: class counts differ (" + std::to_string(preictal.size()) + " vs " +
                    std::to_string(interictal.size()) + ")");
  }
  Dataset ds;
  ds.preictal_count = preictal.size();
  ds.interictal_count = interictal.size();
  ds.seed = seed;
  ds.images.reserve(preictal.size() + interictal.size());
  for (auto& i : preictal) ds.images.push_back(std::move(i));
  for (auto& i : interictal) ds.images.push_back(std::move(i));
  std::mt19937_64 rng(seed);
  std::shuffle(ds.images.begin(), ds.images.end(), rng);
  return ds;
}

}  // namespace ictus
