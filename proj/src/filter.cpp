#include "pulse/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pulse/error.hpp"

namespace pulse {

namespace {

using cplx = std::complex<double>;

cplx section_response(const Biquad& s, cplx zinv) {
  const cplx num = s.b0 + zinv * (s.b1 + zinv * s.b2);
  const cplx den = 1.0 + zinv * (s.a1 + zinv * s.a2);
  return num / den;
}

cplx cascade_response(const FilterCoefficients& c, double omega) {
  const cplx zinv = std::polar(1.0, -omega);
  cplx h = 1.0;
  for (const auto& s : c.sections) h *= section_response(s, zinv);
  return h;
}

struct SectionState {
  double z1 = 0.0, z2 = 0.0;
};

// Transposed direct form II, in place.
void run_cascade(const FilterCoefficients& c, std::vector<SectionState> state, std::span<double> x) {
  for (std::size_t k = 0; k < c.sections.size(); ++k) {
    const auto& s = c.sections[k];
    auto [z1, z2] = state[k];
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

// Per-section states for a unit step applied to the cascade input at steady state.
std::vector<SectionState> step_steady_state(const FilterCoefficients& c) {
  std::vector<SectionState> zi(c.sections.size());
  double u = 1.0;
  for (std::size_t k = 0; k < c.sections.size(); ++k) {
    const auto& s = c.sections[k];
    const double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double y = dc * u;
    zi[k].z1 = y - s.b0 * u;
    zi[k].z2 = s.b2 * u - s.a2 * y;
    u = y;
  }
  return zi;
}

std::vector<SectionState> scaled(std::vector<SectionState> zi, double x0) {
  for (auto& s : zi) {
    s.z1 *= x0;
    s.z2 *= x0;
  }
  return zi;
}

}  // namespace

FilterCoefficients design_butterworth_bandpass(const FilterSpec& spec) {
  if (spec.order <= 0 || spec.order % 2 != 0) {
    fail(ErrorKind::Design, "Butterworth prototype order must be positive and even, got " +
                                std::to_string(spec.order));
  }
  if (!(spec.fs > 0.0)) fail(ErrorKind::Design, "sampling rate must be positive");
  const double nyquist = 0.5 * spec.fs;
  if (!(spec.low_hz > 0.0 && spec.low_hz < spec.high_hz)) {
    fail(ErrorKind::Design, "band edges must satisfy 0 < low < high");
  }
  if (spec.high_hz >= nyquist) {
    fail(ErrorKind::Design, "upper band edge " + std::to_string(spec.high_hz) +
                                " Hz is at or above Nyquist (" + std::to_string(nyquist) + " Hz)");
  }

  const double k2 = 2.0 * spec.fs;
  const double wl = k2 * std::tan(std::numbers::pi * spec.low_hz / spec.fs);
  const double wh = k2 * std::tan(std::numbers::pi * spec.high_hz / spec.fs);
  const double bw = wh - wl;
  const double w0sq = wl * wh;

  FilterCoefficients c;
  const int n = spec.order;
  for (int k = 0; k < n; ++k) {
    const cplx p = std::polar(1.0, std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n));
    const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0sq);
    for (const cplx s : {(p * bw + disc) / 2.0, (p * bw - disc) / 2.0}) {
      if (s.imag() <= 0.0) continue;  // each conjugate pair contributes one section
      const cplx z = (k2 + s) / (k2 - s);
      Biquad sec;
      sec.b0 = 1.0;
      sec.b1 = 0.0;
      sec.b2 = -1.0;
      sec.a1 = -2.0 * z.real();
      sec.a2 = std::norm(z);
      c.sections.push_back(sec);
    }
  }

  const double wc = 2.0 * std::atan(std::sqrt(w0sq) / k2);
  const cplx g = cascade_response(c, wc);
  const double per_section = std::pow(std::abs(g), -1.0 / static_cast<double>(c.sections.size()));
  for (auto& s : c.sections) {
    s.b0 *= per_section;
    s.b1 *= per_section;
    s.b2 *= per_section;
  }
  if (g.real() < 0.0) {
    auto& s = c.sections.front();
    s.b0 = -s.b0;
    s.b1 = -s.b1;
    s.b2 = -s.b2;
  }
  return c;
}

std::vector<std::complex<double>> frequency_response(const FilterCoefficients& coeffs,
                                                     std::span<const double> freqs_hz, double fs) {
  std::vector<cplx> out;
  out.reserve(freqs_hz.size());
  for (double f : freqs_hz) {
    if (!(f >= 0.0 && f <= 0.5 * fs)) {
      fail(ErrorKind::Domain, "frequency " + std::to_string(f) + " Hz outside [0, fs/2]");
    }
    out.push_back(cascade_response(coeffs, 2.0 * std::numbers::pi * f / fs));
  }
  return out;
}

double max_pole_radius(const FilterCoefficients& coeffs) {
  double r = 0.0;
  for (const auto& s : coeffs.sections) {
    // roots of z^2 + a1 z + a2
    const cplx disc = std::sqrt(cplx(s.a1 * s.a1 - 4.0 * s.a2, 0.0));
    r = std::max({r, std::abs((-s.a1 + disc) / 2.0), std::abs((-s.a1 - disc) / 2.0)});
  }
  return r;
}

std::vector<double> sosfilt(const FilterCoefficients& coeffs, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  run_cascade(coeffs, std::vector<SectionState>(coeffs.sections.size()), y);
  return y;
}

std::size_t filtfilt_padding(const FilterCoefficients& coeffs) noexcept {
  return 3 * (2 * coeffs.sections.size() + 1);
}

std::vector<double> filtfilt(const FilterCoefficients& coeffs, std::span<const double> x) {
  const std::size_t pad = filtfilt_padding(coeffs);
  const std::size_t n = x.size();
  if (n <= pad) {
    fail(ErrorKind::Length, "filtfilt needs more than " + std::to_string(pad) +
                                " samples, got " + std::to_string(n));
  }
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * x[0] - x[pad - i];
    ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  const auto zi = step_steady_state(coeffs);
  run_cascade(coeffs, scaled(zi, ext.front()), ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(coeffs, scaled(zi, ext.front()), ext);
  std::reverse(ext.begin(), ext.end());

  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

EcgSegment preprocess_ecg(const EcgSegment& seg) {
  if (seg.fs != kPreprocessFilter.fs) {
    fail(ErrorKind::Validation, "preprocessing expects 250 Hz input, got " + std::to_string(seg.fs));
  }
  static const FilterCoefficients coeffs = design_butterworth_bandpass(kPreprocessFilter);
  return preprocess_ecg(seg, coeffs);
}

EcgSegment preprocess_ecg(const EcgSegment& seg, const FilterCoefficients& coeffs) {
  EcgSegment out = seg;
  out.samples = filtfilt(coeffs, seg.samples);
  return out;
}

}  // namespace pulse
