#pragma once

#include <complex>
#include <span>
#include <vector>

#include "pulse/segment.hpp"

namespace pulse {

struct FilterSpec {
  int order = 4;  // analog lowpass prototype order; the bandpass has 2 * order poles
  double low_hz = 1.0;
  double high_hz = 40.0;
  double fs = 250.0;
};

// Normalized second-order section, denominator (1, a1, a2).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

struct FilterCoefficients {
  std::vector<Biquad> sections;
};

inline constexpr FilterSpec kPreprocessFilter{4, 1.0, 40.0, 250.0};
inline constexpr FilterSpec kQrsFilter{8, 10.0, 40.0, 250.0};

/// Digital Butterworth bandpass as a cascade of second-order sections.
///
/// The analog prototype poles are mapped through the lowpass-to-bandpass
/// transform using pre-warped edges, then through the bilinear transform, so
/// the -3 dB points land exactly on `low_hz` and `high_hz`. The cascade is
/// scaled to unit gain at the (warped) geometric centre frequency.
FilterCoefficients design_butterworth_bandpass(const FilterSpec& spec);

std::vector<std::complex<double>> frequency_response(const FilterCoefficients& coeffs,
                                                     std::span<const double> freqs_hz,
                                                     double fs);

// Largest pole magnitude over all sections.
double max_pole_radius(const FilterCoefficients& coeffs);

// Single forward pass with zero initial state.
std::vector<double> sosfilt(const FilterCoefficients& coeffs, std::span<const double> x);

// Number of samples reflected at each end by filtfilt.
std::size_t filtfilt_padding(const FilterCoefficients& coeffs) noexcept;

/// Zero-phase forward-backward filtering.
///
/// Odd reflection pads both ends by filtfilt_padding() samples, and each pass
/// starts from the step-response steady state scaled by its first sample.
std::vector<double> filtfilt(const FilterCoefficients& coeffs, std::span<const double> x);

// 1-40 Hz, prototype order 4, zero phase. Requires fs == 250.
EcgSegment preprocess_ecg(const EcgSegment& seg);
// Same, with caller-designed coefficients and no rate check.
EcgSegment preprocess_ecg(const EcgSegment& seg, const FilterCoefficients& coeffs);

}  // namespace pulse
