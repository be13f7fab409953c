#pragma once
// Stage wiring shared by the CLI and the acceptance harness: train a network
// for one (image type, pre-ictal time) cell, and turn recordings plus trained
// models into the per-second probability streams the sweep consumes.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ictus/evaluation.hpp"
#include "ictus/imaging.hpp"
#include "ictus/nn/arch.hpp"
#include "ictus/nn/model_io.hpp"
#include "ictus/nn/train.hpp"
#include "ictus/preprocess.hpp"
#include "ictus/recording.hpp"
#include "ictus/synth.hpp"

namespace ictus {

struct TrainStageConfig {
  ImageType type{ImageType::OneSec};
  int preictal_min{10};
  double guard_minutes{60.0};
  bool train_only_norm{false};  // default is the global statistics
  nn::TrainConfig train;
};

struct TrainStageResult {
  nn::Network<float> net;
  NormStats stats;
  nn::TrainHistory history;
  Dataset dataset;
  std::vector<std::string> warnings;
};

inline TrainStageResult train_network(const Recording& rec, const TrainStageConfig& cfg) {
  validate(rec);
  const auto plan = split_seizures(rec);
  const TimelineOptions topts{cfg.guard_minutes};
  const auto contexts = seizure_contexts(rec, cfg.preictal_min, topts);
  std::vector<SeizureContext> train_ctx;
  for (size_t idx : plan.train_seizure_indices) train_ctx.push_back(contexts[idx]);

  TrainStageResult out;
  if (cfg.train_only_norm) {
    const double test_start = test_span_start_s(rec, plan);
    out.stats = compute_norm_stats(rec, false, 0,
                                   static_cast<size_t>(std::llround(test_start * rec.fs)));
  } else {
    out.stats = compute_norm_stats(rec);
  }
  const auto sig = normalize(rec, out.stats);

  auto preictal = build_train_preictal(sig, train_ctx, cfg.type, &out.warnings);
  if (preictal.empty()) throw DataError("train: no pre-ictal images in the training span");
  auto interictal = build_train_interictal(sig, train_ctx, cfg.type, preictal.size(),
                                           cfg.train.seed, &out.warnings);
  out.dataset = balance(std::move(preictal), std::move(interictal), cfg.train.seed);
  out.dataset.stats = out.stats;

  out.net = nn::init_network<float>(nn::build_arch(cfg.type), cfg.train.seed);
  out.history = nn::train(out.net, out.dataset, cfg.train);
  return out;
}

// One probability per second over [start_sample, end), batching windows so
// the stacked 5 s / 10 s streams never materialize in full.
inline std::vector<double> predict_test_stream(nn::Network<float>& net,
                                               const NormalizedSignal& sig, ImageType type,
                                               int64_t start_sample, int batch = 64) {
  detail::require_imageable(sig);
  const int64_t win = window_samples(type);
  const auto total = static_cast<int64_t>(sig.samples_per_channel());
  if (total - start_sample < win) {
    throw DataError("predict_test_stream: test signal shorter than one window");
  }
  std::vector<double> raw_p;
  raw_p.reserve(static_cast<size_t>((total - start_sample - win) / kImageCols) + 1);
  std::vector<ImageTensor> chunk;
  nn::ForwardCache<float> cache;
  nn::Workspace<float> ws;
  for (int64_t s = start_sample; s + win <= total;) {
    chunk.clear();
    for (; s + win <= total && chunk.size() < static_cast<size_t>(batch); s += kImageCols) {
      chunk.push_back(detail::cut_image(sig, s, type));
    }
    const auto tensor = nn::images_to_batch<float>(chunk, 0, chunk.size());
    const auto& probs = nn::forward_batch(net, tensor, nn::Mode::Inference, cache, ws);
    for (int i = 0; i < probs.n; ++i) {
      raw_p.push_back(static_cast<double>(probs.ptr()[static_cast<size_t>(i) * 2 + 1]));
    }
  }
  return raw_p;
}

// Inter-ictal hours inside [span_start, duration); independent of the
// pre-ictal time because the guard distance alone defines inter-ictal.
inline double interictal_hours_in_span(const Recording& rec, double span_start_s,
                                       double guard_minutes) {
  const auto tl = label_timeline(rec, 10.0, TimelineOptions{guard_minutes});
  double seconds = 0.0;
  for (const auto& iv : tl.intervals) {
    if (iv.label != StageLabel::Interictal) continue;
    seconds += std::max(0.0, iv.end_s - std::max(iv.start_s, span_start_s));
  }
  return seconds / 3600.0;
}

inline bool same_stats(const NormStats& a, const NormStats& b) {
  return a.per_channel == b.per_channel && a.mean == b.mean && a.half_range == b.half_range;
}

// Streams plus hours bookkeeping for a set of trained models over the
// held-out span of one recording.
inline PatientBundle make_bundle(const Recording& rec, std::vector<nn::LoadedModel>& models,
                                 double guard_minutes, FprMode fpr_mode, int batch = 64) {
  validate(rec);
  const auto plan = split_seizures(rec);
  const double test_start = test_span_start_s(rec, plan);
  const auto start_sample = static_cast<int64_t>(std::llround(test_start * rec.fs));

  PatientBundle bundle;
  bundle.patient_id = rec.patient_id;
  bundle.fpr_mode = fpr_mode;
  for (size_t idx : plan.test_seizure_indices) {
    bundle.test_seizures.push_back(rec.annotations[idx]);
  }
  bundle.test_hours = (rec.duration_s() - test_start) / 3600.0;
  bundle.interictal_hours = interictal_hours_in_span(rec, test_start, guard_minutes);
  if (fpr_mode == FprMode::InterictalHoursOnly && !(bundle.interictal_hours > 0.0)) {
    throw DataError(
        "sweep: FPR denominator is zero (no inter-ictal time in the test span); "
        "use total-test-hours mode or a longer recording");
  }

  NormalizedSignal sig;
  const NormStats* active_stats = nullptr;
  for (auto& model : models) {
    if (!active_stats || !same_stats(*active_stats, model.stats)) {
      sig = normalize(rec, model.stats);
      active_stats = &model.stats;
    }
    const ImageType type = model.net.spec.image_type;
    NetworkStream stream;
    stream.type = type;
    stream.preictal_min = model.preictal_min;
    stream.t0_s = test_start + static_cast<double>(image_seconds(type));
    stream.raw_p = predict_test_stream(model.net, sig, type, start_sample, batch);
    bundle.streams.push_back(std::move(stream));
  }
  return bundle;
}

}  // namespace ictus
