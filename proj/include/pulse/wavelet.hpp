#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

namespace pulse {

/// Bump wavelet and analysis band.
///
/// `mu` and `sigma` are in radians per sample at unit scale, so a scale `a`
/// (in samples) has centre frequency mu * fs / (2 pi a) Hz.
struct WaveletParams {
  double mu = 5.0;
  double sigma = 0.6;
  int voices_per_octave = 10;
  double f_min = 1.0;
  double f_max = 40.0;
};

struct ScaleGrid {
  std::vector<double> scales;  // increasing
  std::vector<double> freqs;   // Hz, strictly decreasing
};

struct Scalogram {
  Eigen::ArrayXXd energy;  // [n_scales x n_times], |W|^2 in mV^2
  std::vector<double> scales;
  std::vector<double> freqs;
  std::vector<double> times;       // column centres, s
  std::vector<bool> edge_columns;  // within kEdgeSeconds of either end
};

enum class Normalization { UnitEnergy, None };

inline constexpr double kEdgeSeconds = 0.5;

// Fourier-domain bump: exp(1 - 1 / (1 - (a w - mu)^2 / sigma^2)) on the open
// support ((mu - sigma)/a, (mu + sigma)/a), zero elsewhere.
double bump_hat(double omega, double scale, const WaveletParams& params) noexcept;

inline double scale_for_frequency(double f_hz, double fs, const WaveletParams& params) {
  return params.mu * fs / (2.0 * 3.14159265358979323846 * f_hz);
}

// Scales from f_max downward in steps of 1/voices octave, stopping at f_min:
// floor(v log2(fmax/fmin)) + 1 points.
ScaleGrid build_scale_grid(const WaveletParams& params, double fs);

// Throws Config if the parameters violate the pipeline invariants.
void validate_wavelet_params(const WaveletParams& params);

/// Continuous wavelet transform, one row per scale and one column per sample.
///
/// Computed as a circular convolution: the signal spectrum is multiplied by
/// bump_hat(w, a_j) on the non-negative frequencies and inverted. Columns
/// near the ends therefore carry wrap-around; Scalogram::edge_columns marks
/// them.
Eigen::MatrixXcd cwt(std::span<const double> x, double fs, const ScaleGrid& grid,
                     const WaveletParams& params);
Eigen::MatrixXcd cwt(std::span<const double> x, double fs, const WaveletParams& params);

Scalogram scalogram_energy(const Eigen::MatrixXcd& coeffs, const ScaleGrid& grid, double fs);

// Bilinear resample onto rows x cols (corner aligned), row-major flatten,
// optionally scaled to unit sum.
Eigen::VectorXd vectorize_scalogram(const Scalogram& s, int rows, int cols, Normalization norm);

// Plain-text export: a "# scalogram" header line, a "freqs_hz" row, a
// "times_s" row, then one whitespace-separated energy row per scale.
void write_scalogram_text(std::ostream& out, const Scalogram& s);

}  // namespace pulse
