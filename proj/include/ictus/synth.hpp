#pragma once
// Synthetic annotated EEG: band-limited pink-ish background per channel with
// a distinguishable narrow-band rhythm injected before each seizure onset.
// Pure function of the config (including seed), so desk-scale experiments
// are reproducible bit for bit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ictus/biquad.hpp"
#include "ictus/recording.hpp"

namespace ictus {

struct SynthConfig {
  double duration_s = 4.0 * 3600.0;
  std::vector<double> seizure_onsets_s;
  double seizure_duration_s = 60.0;

  double preictal_signature_minutes = 10.0;
  double signature_low_hz = 18.0;
  double signature_high_hz = 24.0;
  double signature_peak_amplitude = 40.0;   // at onset, microvolts
  double signature_floor_fraction = 0.35;   // ramp start relative to peak
  std::vector<int> signature_channels = {2, 3, 4, 5, 10, 11, 12, 13};  // F3 F4 C3 C4 F7 F8 T3 T4

  double background_amplitude = 15.0;  // pink noise scale, microvolts
  double ictal_amplitude = 50.0;       // 4 Hz burst during the seizure
  double min_gap_minutes = 60.0;       // required inter-ictal gap between seizures

  int channels = kStandardChannels;
  double fs = kStandardSampleRate;
  uint64_t seed = 0;
  std::string patient_id = "synth";
};

namespace detail {

// Kellet economy pink filter over unit white noise.
struct PinkFilter {
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  double step(double white) {
    b0 = 0.99765 * b0 + white * 0.0990460;
    b1 = 0.96300 * b1 + white * 0.2965164;
    b2 = 0.57000 * b2 + white * 1.0526913;
    return b0 + b1 + b2 + white * 0.1848;
  }
};

inline std::mt19937_64 channel_rng(uint64_t seed, int channel) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(channel) + 0x9e37u};
  return std::mt19937_64(seq);
}

}  // namespace detail

inline Recording synth_generate(const SynthConfig& cfg) {
  if (!(cfg.duration_s > 0.0) || !(cfg.fs > 0.0) || cfg.channels < 1) {
    throw DataError("synth_generate: bad duration/fs/channels");
  }
  std::vector<double> onsets = cfg.seizure_onsets_s;
  std::sort(onsets.begin(), onsets.end());

  const double sig_s = cfg.preictal_signature_minutes * 60.0;
  double prev_offset = 0.0;
  for (size_t i = 0; i < onsets.size(); ++i) {
    const double gap = onsets[i] - prev_offset;
    if (gap < sig_s || (i > 0 && gap < cfg.min_gap_minutes * 60.0)) {
      throw DataError("synth_generate: infeasible onset layout at seizure " + std::to_string(i));
    }
    prev_offset = onsets[i] + cfg.seizure_duration_s;
    if (prev_offset > cfg.duration_s) {
      throw DataError("synth_generate: seizure " + std::to_string(i) + " runs past the end");
    }
  }

  // Per-seizure signature frequency and phase, drawn before the parallel
  // channel loop so they do not depend on scheduling.
  std::mt19937_64 master(cfg.seed);
  std::uniform_real_distribution<double> freq_dist(cfg.signature_low_hz, cfg.signature_high_hz);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::vector<double> sig_freq(onsets.size()), sig_phase(onsets.size());
  for (size_t i = 0; i < onsets.size(); ++i) {
    sig_freq[i] = freq_dist(master);
    sig_phase[i] = phase_dist(master);
  }

  const auto n_samples = static_cast<size_t>(std::llround(cfg.duration_s * cfg.fs));
  const BiquadCascade band = design_bandpass(cfg.fs, 0.5, std::min(100.0, cfg.fs / 2.0 - 1.0), 4);

  Recording rec;
  rec.patient_id = cfg.patient_id;
  rec.fs = cfg.fs;
  rec.samples.assign(static_cast<size_t>(cfg.channels), {});
  rec.channel_names = cfg.channels == kStandardChannels
                          ? standard_channel_names()
                          : std::vector<std::string>(static_cast<size_t>(cfg.channels));
  if (cfg.channels != kStandardChannels) {
    for (int c = 0; c < cfg.channels; ++c) rec.channel_names[c] = "ch" + std::to_string(c);
  }

  std::vector<char> carries(static_cast<size_t>(cfg.channels), 0);
  for (int s : cfg.signature_channels) {
    if (s >= 0 && s < cfg.channels) carries[static_cast<size_t>(s)] = 1;
  }

#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < cfg.channels; ++ch) {
    auto rng = detail::channel_rng(cfg.seed, ch);
    std::normal_distribution<double> gauss(0.0, 1.0);
    detail::PinkFilter pink;

    std::vector<float>& x = rec.samples[static_cast<size_t>(ch)];
    x.resize(n_samples);
    for (size_t t = 0; t < n_samples; ++t) {
      x[t] = static_cast<float>(cfg.background_amplitude * 0.35 * pink.step(gauss(rng)));
    }
    apply_filter_inplace(x, band);

    for (size_t i = 0; i < onsets.size(); ++i) {
      // Ramped signature on the configured subset of channels.
      if (carries[static_cast<size_t>(ch)]) {
        const double start = onsets[i] - sig_s;
        const auto t0 = static_cast<size_t>(std::llround(start * cfg.fs));
        const auto t1 = static_cast<size_t>(std::llround(onsets[i] * cfg.fs));
        const double phase_ch = sig_phase[i] + 0.3 * ch;
        for (size_t t = t0; t < t1 && t < n_samples; ++t) {
          const double progress = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
          const double amp = cfg.signature_peak_amplitude *
                             (cfg.signature_floor_fraction +
                              (1.0 - cfg.signature_floor_fraction) * progress);
          const double ts = static_cast<double>(t) / cfg.fs;
          x[t] += static_cast<float>(
              amp * std::sin(2.0 * std::numbers::pi * sig_freq[i] * ts + phase_ch));
        }
      }
      // Broad ictal burst on every channel.
      const auto i0 = static_cast<size_t>(std::llround(onsets[i] * cfg.fs));
      const auto i1 = static_cast<size_t>(
          std::llround((onsets[i] + cfg.seizure_duration_s) * cfg.fs));
      for (size_t t = i0; t < i1 && t < n_samples; ++t) {
        const double ts = static_cast<double>(t) / cfg.fs;
        x[t] += static_cast<float>(
            cfg.ictal_amplitude * std::sin(2.0 * std::numbers::pi * 4.0 * ts + 0.15 * ch));
      }
    }
  }

  for (size_t i = 0; i < onsets.size(); ++i) {
    rec.annotations.push_back(
        {onsets[i], onsets[i] + cfg.seizure_duration_s, AnnotationKind::Synthetic});
  }
  validate(rec);
  return rec;
}

}  // namespace ictus
