#pragma once
// Annotated multi-channel EEG recordings: container with invariants, stage
// labelling of the timeline, and the chronological train/test seizure split.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ictus {

// Data problems (bad files, violated invariants, infeasible configs).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem / external-command problems.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kStandardChannels = 19;
inline constexpr double kStandardSampleRate = 256.0;

// 10-20 montage, the fixed electrode order used for image rows.
inline const std::vector<std::string>& standard_channel_names() {
  static const std::vector<std::string> names = {
      "Fp1", "Fp2", "F3", "F4", "C3", "C4", "P3", "P4", "O1", "O2",
      "F7",  "F8",  "T3", "T4", "T5", "T6", "Fz", "Cz", "Pz"};
  return names;
}

enum class AnnotationKind : uint8_t { Clinical, Synthetic };

struct SeizureAnnotation {
  double onset_s{0.0};
  double offset_s{0.0};
  AnnotationKind kind{AnnotationKind::Clinical};
};

struct Recording {
  std::string patient_id;
  double fs{kStandardSampleRate};
  std::vector<std::string> channel_names;
  std::vector<std::vector<float>> samples;  // samples[ch][t], microvolts
  std::vector<SeizureAnnotation> annotations;  // sorted by onset, non-overlapping

  size_t channel_count() const { return samples.size(); }
  size_t samples_per_channel() const { return samples.empty() ? 0 : samples[0].size(); }
  double duration_s() const { return static_cast<double>(samples_per_channel()) / fs; }
};

inline void validate(const Recording& rec) {
  if (!(rec.fs > 0.0)) throw DataError("recording: fs must be positive");
  if (rec.samples.empty()) throw DataError("recording: needs at least one channel");
  const size_t len = rec.samples[0].size();
  for (const auto& ch : rec.samples) {
    if (ch.size() != len) throw DataError("recording: channels have unequal lengths");
  }
  if (rec.channel_names.size() != rec.samples.size()) {
    throw DataError("recording: channel_names size does not match channel count");
  }
  const double duration = rec.duration_s();
  double prev_offset = 0.0;
  for (size_t i = 0; i < rec.annotations.size(); ++i) {
    const auto& a = rec.annotations[i];
    if (!(a.onset_s >= 0.0 && a.onset_s < a.offset_s && a.offset_s <= duration)) {
      throw DataError("recording: annotation " + std::to_string(i) +
                      " outside [0, duration] or empty");
    }
    if (i > 0 && a.onset_s < prev_offset) {
      throw DataError("recording: annotations overlap or are unsorted at index " +
                      std::to_string(i));
    }
    prev_offset = a.offset_s;
  }
}

// ---------------------------------------------------------------------------
// Timeline labelling.
// ---------------------------------------------------------------------------

enum class StageLabel : uint8_t { Preictal, Interictal, Ictal, Excluded };

inline const char* to_string(StageLabel s) {
  switch (s) {
    case StageLabel::Preictal: return "preictal";
    case StageLabel::Interictal: return "interictal";
    case StageLabel::Ictal: return "ictal";
    default: return "excluded";
  }
}

// Half-open [start_s, end_s); a recording's intervals partition [0, duration).
struct IntervalLabel {
  double start_s{0.0};
  double end_s{0.0};
  StageLabel label{StageLabel::Excluded};
};

struct TimelineOptions {
  double guard_minutes = 60.0;  // inter-ictal must sit this far from any seizure
};

struct Timeline {
  std::vector<IntervalLabel> intervals;
  std::vector<std::string> warnings;
};

namespace detail {

// Unmerged elementary intervals; every stage or ownership change is a cut.
inline std::vector<IntervalLabel> elementary_intervals(const Recording& rec, double pre_s,
                                                       double guard_s) {
  const double duration = rec.duration_s();
  std::vector<double> cuts{0.0, duration};
  for (const auto& a : rec.annotations) {
    for (double t : {a.onset_s - pre_s, a.onset_s, a.offset_s, a.onset_s - guard_s,
                     a.offset_s + guard_s}) {
      if (t > 0.0 && t < duration) cuts.push_back(t);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto label_at = [&](double t) {
    for (const auto& a : rec.annotations) {
      if (t >= a.onset_s && t < a.offset_s) return StageLabel::Ictal;
    }
    for (const auto& a : rec.annotations) {
      if (t >= a.onset_s - pre_s && t < a.onset_s) return StageLabel::Preictal;
    }
    for (const auto& a : rec.annotations) {
      if (t >= a.onset_s - guard_s && t < a.offset_s + guard_s) return StageLabel::Excluded;
    }
    return StageLabel::Interictal;
  };

  std::vector<IntervalLabel> out;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    out.push_back({cuts[i], cuts[i + 1], label_at(0.5 * (cuts[i] + cuts[i + 1]))});
  }
  return out;
}

}  // namespace detail

// Stage precedence when regions collide: ictal > pre-ictal > inter-ictal >
// excluded, and between overlapping pre-ictal windows the later seizure wins
// (the earlier window is truncated, with a warning).
inline Timeline label_timeline(const Recording& rec, double preictal_minutes,
                               const TimelineOptions& opts = {}) {
  if (!(preictal_minutes > 0.0)) {
    throw std::invalid_argument("label_timeline: preictal_minutes must be positive");
  }
  const double pre_s = preictal_minutes * 60.0;
  const double guard_s = opts.guard_minutes * 60.0;

  Timeline out;
  for (const auto& iv : detail::elementary_intervals(rec, pre_s, guard_s)) {
    if (!out.intervals.empty() && out.intervals.back().label == iv.label) {
      out.intervals.back().end_s = iv.end_s;
    } else {
      out.intervals.push_back(iv);
    }
  }

  for (size_t i = 0; i + 1 < rec.annotations.size(); ++i) {
    const double next_pre_start = rec.annotations[i + 1].onset_s - pre_s;
    if (next_pre_start < rec.annotations[i].offset_s) {
      out.warnings.push_back("pre-ictal window of seizure " + std::to_string(i + 1) +
                             " overlaps seizure " + std::to_string(i) +
                             "; later seizure wins the overlap");
    } else if (next_pre_start < rec.annotations[i].onset_s) {
      out.warnings.push_back("pre-ictal windows of seizures " + std::to_string(i) + " and " +
                             std::to_string(i + 1) +
                             " overlap; earlier window truncated");
    }
  }
  return out;
}

// Per-seizure view used by the dataset builders: the pre-ictal intervals a
// seizure owns and the inter-ictal intervals between it and the previous one.
struct SeizureContext {
  size_t seizure_index{0};
  std::vector<IntervalLabel> preictal;
  std::vector<IntervalLabel> preceding_interictal;
};

inline std::vector<SeizureContext> seizure_contexts(const Recording& rec,
                                                    double preictal_minutes,
                                                    const TimelineOptions& opts = {}) {
  if (!(preictal_minutes > 0.0)) {
    throw std::invalid_argument("seizure_contexts: preictal_minutes must be positive");
  }
  const double pre_s = preictal_minutes * 60.0;
  std::vector<SeizureContext> out(rec.annotations.size());
  for (size_t i = 0; i < rec.annotations.size(); ++i) out[i].seizure_index = i;

  auto owner_of_preictal = [&](double mid) -> size_t {
    // Later seizures win overlaps, so scan from the back.
    for (size_t i = rec.annotations.size(); i-- > 0;) {
      const auto& a = rec.annotations[i];
      if (mid >= a.onset_s - pre_s && mid < a.onset_s) return i;
    }
    throw DataError("seizure_contexts: unowned pre-ictal interval");
  };
  auto next_seizure_after = [&](double t) -> size_t {
    for (size_t i = 0; i < rec.annotations.size(); ++i) {
      if (rec.annotations[i].onset_s >= t) return i;
    }
    return rec.annotations.size();
  };

  // Elementary (unmerged) intervals keep ownership boundaries visible.
  const double guard_s = opts.guard_minutes * 60.0;
  for (const auto& iv : detail::elementary_intervals(rec, pre_s, guard_s)) {
    const double mid = 0.5 * (iv.start_s + iv.end_s);
    if (iv.label == StageLabel::Preictal) {
      auto& dst = out[owner_of_preictal(mid)].preictal;
      if (!dst.empty() && dst.back().end_s == iv.start_s) {
        dst.back().end_s = iv.end_s;
      } else {
        dst.push_back(iv);
      }
    } else if (iv.label == StageLabel::Interictal) {
      const size_t next = next_seizure_after(iv.end_s);
      if (next < out.size()) {
        auto& dst = out[next].preceding_interictal;
        if (!dst.empty() && dst.back().end_s == iv.start_s) {
          dst.back().end_s = iv.end_s;
        } else {
          dst.push_back(iv);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Train/test split.
// ---------------------------------------------------------------------------

struct SplitPlan {
  std::vector<size_t> train_seizure_indices;
  std::vector<size_t> test_seizure_indices;
};

// Chronological split: first floor(2n/3) seizures train, the rest test.
inline SplitPlan split_seizures(const Recording& rec) {
  const size_t n = rec.annotations.size();
  if (n < 2) throw DataError("split_seizures: need at least 2 seizures");
  size_t n_train = (2 * n) / 3;
  if (n_train == 0) n_train = 1;
  if (n_train == n) n_train = n - 1;
  SplitPlan plan;
  for (size_t i = 0; i < n; ++i) {
    (i < n_train ? plan.train_seizure_indices : plan.test_seizure_indices).push_back(i);
  }
  return plan;
}

// Seconds at which the held-out stream begins: right after the last training
// seizure ends, rounded up to a whole second.
inline double test_span_start_s(const Recording& rec, const SplitPlan& plan) {
  if (plan.train_seizure_indices.empty()) throw DataError("test_span_start_s: empty split");
  const auto& last_train = rec.annotations[plan.train_seizure_indices.back()];
  return std::ceil(last_train.offset_s);
}

}  // namespace ictus
