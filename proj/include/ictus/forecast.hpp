#pragma once
// Per-second pre-ictal probability stream -> smoothed likelihood -> threshold
// Z -> Firing Power over the trailing X minutes -> threshold Y -> alarms with
// SPH/SOP semantics and a refractory span.
//
// The smoother re-sums its <= 60-sample ring oldest-first on every step, so a
// streaming run equals a batch recomputation bit for bit (a running sum would
// drift); the firing-power count is integer and exact either way.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ictus/recording.hpp"
#include "ictus/recording_io.hpp"

namespace ictus {

inline constexpr int kSmoothWindow = 60;

struct ForecastParams {
  double z{0.5};              // likelihood threshold
  double y{0.5};              // firing-power threshold
  double preictal_minutes{10.0};  // X: firing-power window length
  double sph_minutes{5.0};

  double sop_minutes() const { return preictal_minutes / 2.0; }
  int64_t fp_window_s() const { return static_cast<int64_t>(std::llround(preictal_minutes * 60.0)); }
  int64_t sph_s() const { return static_cast<int64_t>(std::llround(sph_minutes * 60.0)); }
  int64_t sop_s() const { return static_cast<int64_t>(std::llround(sop_minutes() * 60.0)); }
};

inline void validate(const ForecastParams& p) {
  if (p.fp_window_s() < 1) throw DataError("forecast: firing-power window must cover >= 1 s");
  if (!(p.sop_minutes() > 0.0)) throw DataError("forecast: SOP must be positive");
}

enum class Verdict : uint8_t { Undetermined, TruePositive, FalsePositive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::TruePositive: return "true-positive";
    case Verdict::FalsePositive: return "false-positive";
    default: return "undetermined";
  }
}

struct AlarmEvent {
  double t_alarm_s{0.0};
  double sop_start_s{0.0};  // t_alarm + SPH
  double sop_end_s{0.0};    // sop_start + SOP
  Verdict verdict{Verdict::Undetermined};
};

struct LikelihoodPoint {
  double t_s{0.0};
  double raw_p{0.0};
  double smoothed{0.0};
};

// Mean of the most recent <= 60 raw probabilities.
class LikelihoodSmoother {
 public:
  explicit LikelihoodSmoother(int window = kSmoothWindow) : buf_(window) {}

  double push(double raw_p) {
    if (count_ < buf_.size()) {
      buf_[count_++] = raw_p;
      double sum = 0.0;
      for (size_t i = 0; i < count_; ++i) sum += buf_[i];
      return sum / static_cast<double>(count_);
    }
    // Full ring: overwrite the oldest, then sum oldest-first.
    buf_[next_] = raw_p;
    next_ = (next_ + 1) % buf_.size();
    double sum = 0.0;
    for (size_t i = 0; i < buf_.size(); ++i) sum += buf_[(next_ + i) % buf_.size()];
    return sum / static_cast<double>(buf_.size());
  }

 private:
  std::vector<double> buf_;
  size_t next_{0};
  size_t count_{0};
};

inline int binarize(double smoothed, double z) { return smoothed > z ? 1 : 0; }

// Fraction of set binaries in the trailing window, with the denominator fixed
// at the window length so a short history cannot fire spuriously high.
class FiringPower {
 public:
  explicit FiringPower(int64_t window_s) : buf_(static_cast<size_t>(window_s)) {}

  double push(int binary) {
    if (count_ < buf_.size()) {
      buf_[count_++] = static_cast<uint8_t>(binary);
      sum_ += binary;
    } else {
      sum_ -= buf_[next_];
      buf_[next_] = static_cast<uint8_t>(binary);
      sum_ += binary;
      next_ = (next_ + 1) % buf_.size();
    }
    return static_cast<double>(sum_) / static_cast<double>(buf_.size());
  }

 private:
  std::vector<uint8_t> buf_;
  size_t next_{0};
  size_t count_{0};
  int64_t sum_{0};
};

// Raises an alarm at the first t with fp(t) > Y outside the refractory span
// [t_alarm, sop_end] of the previous alarm. Accumulators upstream keep
// running regardless.
class AlarmGate {
 public:
  AlarmGate(const ForecastParams& params, double t0_s)
      : params_(params), expected_t_(t0_s), blocked_until_(t0_s - 1.0) {}

  std::optional<AlarmEvent> step(double t_s, double fp) {
    if (t_s != expected_t_) {
      throw DataError("alarm gate: out-of-order timestamp " + std::to_string(t_s) +
                      ", expected " + std::to_string(expected_t_));
    }
    expected_t_ += 1.0;
    if (fp > params_.y && t_s > blocked_until_) {
      AlarmEvent alarm;
      alarm.t_alarm_s = t_s;
      alarm.sop_start_s = t_s + static_cast<double>(params_.sph_s());
      alarm.sop_end_s = alarm.sop_start_s + static_cast<double>(params_.sop_s());
      blocked_until_ = alarm.sop_end_s;
      return alarm;
    }
    return std::nullopt;
  }

 private:
  ForecastParams params_;
  double expected_t_;
  double blocked_until_;
};

struct ForecastPoint {
  double t_s{0.0};
  double raw_p{0.0};
  double smoothed{0.0};
  double fp{0.0};
  bool alarm{false};
};

struct ForecastTrace {
  std::vector<ForecastPoint> timeline;
  std::vector<AlarmEvent> alarms;
};

// Full composition over a per-second probability stream starting at t0_s.
inline ForecastTrace run_forecaster(std::span<const double> raw_p, double t0_s,
                                    const ForecastParams& params) {
  validate(params);
  ForecastTrace trace;
  trace.timeline.reserve(raw_p.size());
  LikelihoodSmoother smoother;
  FiringPower firing(params.fp_window_s());
  AlarmGate gate(params, t0_s);
  for (size_t i = 0; i < raw_p.size(); ++i) {
    const double t = t0_s + static_cast<double>(i);
    ForecastPoint point;
    point.t_s = t;
    point.raw_p = raw_p[i];
    point.smoothed = smoother.push(raw_p[i]);
    point.fp = firing.push(binarize(point.smoothed, params.z));
    if (auto alarm = gate.step(t, point.fp)) {
      point.alarm = true;
      trace.alarms.push_back(*alarm);
    }
    trace.timeline.push_back(point);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// CSV output.
// ---------------------------------------------------------------------------

inline void write_timeline_csv(const ForecastTrace& trace, const std::filesystem::path& path) {
  std::string out = "t_s,raw_p,smoothed,fp,alarm_flag\n";
  char line[160];
  for (const auto& p : trace.timeline) {
    std::snprintf(line, sizeof(line), "%.0f,%.9g,%.9g,%.9g,%d\n", p.t_s, p.raw_p, p.smoothed,
                  p.fp, p.alarm ? 1 : 0);
    out += line;
  }
  detail::atomic_write_text(path, out);
}

inline void write_alarms_csv(const std::vector<AlarmEvent>& alarms,
                             const std::filesystem::path& path) {
  std::string out = "t_alarm_s,sop_start_s,sop_end_s,verdict\n";
  char line[160];
  for (const auto& a : alarms) {
    std::snprintf(line, sizeof(line), "%.0f,%.0f,%.0f,%s\n", a.t_alarm_s, a.sop_start_s,
                  a.sop_end_s, to_string(a.verdict));
    out += line;
  }
  detail::atomic_write_text(path, out);
}

}  // namespace ictus
