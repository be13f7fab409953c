#pragma once
// IIR design (Butterworth bandpass, constrained notch) and causal filtering.
// Everything is realized as cascades of second-order sections so that the
// 0.5 Hz corner at fs=256 stays numerically well behaved.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ictus {

// One second-order section, a0 normalized to 1:
//   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct BiquadSection {
  double b0{1.0}, b1{0.0}, b2{0.0};
  double a1{0.0}, a2{0.0};
};

struct BiquadCascade {
  std::vector<BiquadSection> sections;
  std::string description;
};

// Stability triangle: |a2| < 1 and |a1| < 1 + a2.
inline bool is_stable(const BiquadSection& s) {
  return std::abs(s.a2) < 1.0 && std::abs(s.a1) < 1.0 + s.a2;
}

inline bool is_stable(const BiquadCascade& c) {
  for (const auto& s : c.sections) {
    if (!is_stable(s)) return false;
  }
  return true;
}

namespace detail {

inline std::complex<double> section_response(const BiquadSection& s, double omega) {
  const std::complex<double> z1 = std::polar(1.0, -omega);
  const std::complex<double> z2 = std::polar(1.0, -2.0 * omega);
  return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

inline std::complex<double> cascade_response(const BiquadCascade& c, double omega) {
  std::complex<double> h{1.0, 0.0};
  for (const auto& s : c.sections) h *= section_response(s, omega);
  return h;
}

// Bilinear transform of an analog pole/zero, fs-scaled.
inline std::complex<double> bilinear(std::complex<double> s, double fs) {
  const double two_fs = 2.0 * fs;
  return (two_fs + s) / (two_fs - s);
}

// Denominator of one section from a pole pair (conjugates or two reals).
inline BiquadSection section_from_pole_pair(std::complex<double> p1, std::complex<double> p2) {
  BiquadSection s;
  s.a1 = -(p1 + p2).real();
  s.a2 = (p1 * p2).real();
  // Bandpass sections carry one zero at z=1 and one at z=-1.
  s.b0 = 1.0;
  s.b1 = 0.0;
  s.b2 = -1.0;
  return s;
}

}  // namespace detail

// Butterworth bandpass via the analog prototype of the given order, the
// lowpass-to-bandpass transform, and the bilinear transform with frequency
// pre-warping. A prototype of order N yields a 2N-pole digital filter as N
// sections. Band edges land at -3.01 dB exactly; DC gain is exactly zero
// because every section keeps a zero at z=1.
inline BiquadCascade design_bandpass(double fs, double low_hz, double high_hz, int order) {
  if (!(fs > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs / 2.0)) {
    throw std::invalid_argument("design_bandpass: need 0 < low < high < fs/2");
  }
  if (order < 1) {
    throw std::invalid_argument("design_bandpass: order must be >= 1");
  }

  using cd = std::complex<double>;
  const double pi = std::numbers::pi;

  // Pre-warped analog band edges, center, bandwidth.
  const double w1 = 2.0 * fs * std::tan(pi * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(pi * high_hz / fs);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  BiquadCascade cascade;
  auto add_section_from_analog = [&](cd q1, cd q2) {
    cascade.sections.push_back(
        detail::section_from_pole_pair(detail::bilinear(q1, fs), detail::bilinear(q2, fs)));
  };

  // Prototype poles with positive imaginary part; each maps to two analog
  // bandpass poles q+ and q- whose conjugates come from the mirror pole, so
  // the pairs (q+, conj q+) and (q-, conj q-) form two real sections.
  for (int k = 1; k <= order / 2; ++k) {
    const double phi = pi / 2.0 + pi * (2.0 * k - 1.0) / (2.0 * order);
    const cd p{std::cos(phi), std::sin(phi)};
    const cd half = 0.5 * bw * p;
    const cd disc = std::sqrt(half * half - cd{w0 * w0, 0.0});
    const cd q_plus = half + disc;
    const cd q_minus = half - disc;
    add_section_from_analog(q_plus, std::conj(q_plus));
    add_section_from_analog(q_minus, std::conj(q_minus));
  }
  if (order % 2 == 1) {
    // Real prototype pole at s=-1 yields one section.
    const double half = -0.5 * bw;
    const cd disc = std::sqrt(cd{half * half - w0 * w0, 0.0});
    add_section_from_analog(cd{half, 0.0} + disc, cd{half, 0.0} - disc);
  }

  // Normalize passband gain at the digital image of the analog center.
  const double wc = 2.0 * std::atan(w0 / (2.0 * fs));
  const double g = std::abs(detail::cascade_response(cascade, wc));
  const double per_section = std::pow(1.0 / g, 1.0 / static_cast<double>(cascade.sections.size()));
  for (auto& s : cascade.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }

  cascade.description = "butterworth bandpass " + std::to_string(low_hz) + "-" +
                        std::to_string(high_hz) + " Hz, order " + std::to_string(order);
  if (!is_stable(cascade)) {
    throw std::runtime_error("design_bandpass: produced unstable cascade");
  }
  return cascade;
}

// Single-section notch with zeros on the unit circle at f0 (so the notch
// floor is exact) and -3 dB bandwidth of f0/q. Uses the constrained design
// with b = 1/(1 + tan(dw/2)), which pins the -3 dB width in the digital
// domain rather than in a pre-warped analog prototype.
inline BiquadCascade design_notch(double fs, double f0_hz, double q) {
  if (!(fs > 0.0) || !(f0_hz > 0.0) || !(f0_hz < fs / 2.0)) {
    throw std::invalid_argument("design_notch: need 0 < f0 < fs/2");
  }
  if (!(q > 0.0)) {
    throw std::invalid_argument("design_notch: q must be positive");
  }

  const double w0 = 2.0 * std::numbers::pi * f0_hz / fs;
  const double dw = 2.0 * std::numbers::pi * (f0_hz / q) / fs;
  const double b = 1.0 / (1.0 + std::tan(dw / 2.0));

  BiquadSection s;
  s.b0 = b;
  s.b1 = -2.0 * b * std::cos(w0);
  s.b2 = b;
  s.a1 = -2.0 * b * std::cos(w0);
  s.a2 = 2.0 * b - 1.0;

  BiquadCascade cascade;
  cascade.sections.push_back(s);
  cascade.description =
      "notch " + std::to_string(f0_hz) + " Hz, q " + std::to_string(q);
  if (!is_stable(cascade)) {
    throw std::runtime_error("design_notch: produced unstable section");
  }
  return cascade;
}

// Causal direct-form-II-transposed evaluation, zero initial state. The
// sample value and all section states stay in double across the cascade;
// only the final write-back rounds to T.
template <class T>
void apply_filter_inplace(std::vector<T>& x, const BiquadCascade& c) {
  const size_t nsec = c.sections.size();
  if (nsec == 0) return;
  std::vector<double> s1(nsec, 0.0), s2(nsec, 0.0);
  for (auto& sample : x) {
    double v = static_cast<double>(sample);
    for (size_t i = 0; i < nsec; ++i) {
      const BiquadSection& s = c.sections[i];
      const double out = s.b0 * v + s1[i];
      s1[i] = s.b1 * v - s.a1 * out + s2[i];
      s2[i] = s.b2 * v - s.a2 * out;
      v = out;
    }
    sample = static_cast<T>(v);
  }
}

template <class T>
std::vector<T> apply_filter(std::vector<T> x, const BiquadCascade& c) {
  apply_filter_inplace(x, c);
  return x;
}

}  // namespace ictus
