#include "pulse/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "fft.hpp"
#include "pulse/error.hpp"

namespace pulse {

double bump_hat(double omega, double scale, const WaveletParams& params) noexcept {
  const double u = (scale * omega - params.mu) / params.sigma;
  const double u2 = u * u;
  if (!(u2 < 1.0)) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u2));
}

void validate_wavelet_params(const WaveletParams& p) {
  if (!(p.sigma > 0.0 && p.sigma < p.mu)) fail(ErrorKind::Config, "bump wavelet needs 0 < sigma < mu");
  if (p.voices_per_octave < 4) fail(ErrorKind::Config, "voices_per_octave must be at least 4");
  if (!(p.f_min >= 1.0)) fail(ErrorKind::Config, "f_min must be at least 1 Hz");
  if (!(p.f_max <= 40.0)) fail(ErrorKind::Config, "f_max must not exceed 40 Hz");
  if (!(p.f_min < p.f_max)) fail(ErrorKind::Config, "analysis band collapses (f_min >= f_max)");
}

ScaleGrid build_scale_grid(const WaveletParams& p, double fs) {
  if (!(p.f_min > 0.0 && p.f_min < p.f_max)) {
    fail(ErrorKind::Config, "analysis band collapses (f_min >= f_max)");
  }
  if (p.voices_per_octave < 1) fail(ErrorKind::Config, "voices_per_octave must be positive");
  if (!(p.sigma > 0.0 && p.sigma < p.mu)) fail(ErrorKind::Config, "bump wavelet needs 0 < sigma < mu");
  if (p.f_max >= 0.5 * fs) fail(ErrorKind::Config, "f_max must lie below Nyquist");

  const double v = static_cast<double>(p.voices_per_octave);
  // Largest whole number of voice steps that stays inside [f_min, f_max];
  // the epsilon absorbs log2 rounding on exact octaves.
  const double steps = std::floor(v * std::log2(p.f_max / p.f_min) + 1e-9);
  const auto n = static_cast<std::size_t>(steps) + 1;
  ScaleGrid grid;
  grid.freqs.resize(n);
  grid.scales.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double f = p.f_max * std::exp2(-static_cast<double>(j) / v);
    grid.freqs[j] = f;
    grid.scales[j] = scale_for_frequency(f, fs, p);
  }
  return grid;
}

Eigen::MatrixXcd cwt(std::span<const double> x, double fs, const ScaleGrid& grid,
                     const WaveletParams& params) {
  if (grid.scales.empty()) fail(ErrorKind::Config, "empty scale grid");
  if (static_cast<double>(x.size()) < 2.0 * fs) {
    fail(ErrorKind::Length, "wavelet transform needs at least 2 s of samples");
  }
  const auto n = x.size();
  const auto spectrum = detail::rfft(x);
  const double dw = 2.0 * std::numbers::pi / static_cast<double>(n);

  Eigen::MatrixXcd out(static_cast<Eigen::Index>(grid.scales.size()), static_cast<Eigen::Index>(n));
  std::vector<std::complex<double>> row(n);
  for (std::size_t j = 0; j < grid.scales.size(); ++j) {
    const double a = grid.scales[j];
    std::fill(row.begin(), row.end(), std::complex<double>{});
    for (std::size_t m = 0; m < spectrum.size(); ++m) {
      const double h = bump_hat(dw * static_cast<double>(m), a, params);
      if (h != 0.0) row[m] = spectrum[m] * h;
    }
    detail::inverse_fft(row);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = row[k] * inv_n;
    }
  }
  return out;
}

Eigen::MatrixXcd cwt(std::span<const double> x, double fs, const WaveletParams& params) {
  return cwt(x, fs, build_scale_grid(params, fs), params);
}

Scalogram scalogram_energy(const Eigen::MatrixXcd& coeffs, const ScaleGrid& grid, double fs) {
  if (static_cast<std::size_t>(coeffs.rows()) != grid.scales.size()) {
    fail(ErrorKind::Shape, "coefficient rows do not match the scale grid");
  }
  if (!coeffs.allFinite()) fail(ErrorKind::Numeric, "non-finite wavelet coefficients");
  Scalogram s;
  s.energy = coeffs.array().abs2();
  s.scales = grid.scales;
  s.freqs = grid.freqs;
  const auto cols = static_cast<std::size_t>(coeffs.cols());
  s.times.resize(cols);
  s.edge_columns.resize(cols);
  const double duration = static_cast<double>(cols) / fs;
  for (std::size_t k = 0; k < cols; ++k) {
    const double t = static_cast<double>(k) / fs;
    s.times[k] = t;
    s.edge_columns[k] = t < kEdgeSeconds || t >= duration - kEdgeSeconds;
  }
  return s;
}

Eigen::VectorXd vectorize_scalogram(const Scalogram& s, int rows, int cols, Normalization norm) {
  if (rows < 2 || cols < 2) fail(ErrorKind::Config, "vectorization grid must be at least 2 x 2");
  const auto& e = s.energy;
  if (e.size() == 0) fail(ErrorKind::Shape, "empty scalogram");
  const Eigen::Index src_rows = e.rows();
  const Eigen::Index src_cols = e.cols();

  // Corner-aligned triangle kernel. When shrinking, the kernel widens to the
  // source step so every input sample contributes (antialiased bilinear).
  // Each output keeps only its band of nonzero taps.
  struct Taps {
    Eigen::Index lo = 0;
    std::vector<double> w;
  };
  const auto weights = [](int dst, Eigen::Index src) {
    std::vector<Taps> taps(static_cast<std::size_t>(dst));
    if (src == 1) {
      for (auto& t : taps) t.w = {1.0};
      return taps;
    }
    const double step = static_cast<double>(src - 1) / static_cast<double>(dst - 1);
    const double width = std::max(1.0, step);
    for (int i = 0; i < dst; ++i) {
      const double pos = static_cast<double>(i) * step;
      const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::ceil(pos - width)));
      const auto hi = std::min<Eigen::Index>(src - 1, static_cast<Eigen::Index>(std::floor(pos + width)));
      auto& t = taps[static_cast<std::size_t>(i)];
      t.lo = lo;
      double total = 0.0;
      for (Eigen::Index k = lo; k <= hi; ++k) {
        const double v = std::max(0.0, 1.0 - std::abs(static_cast<double>(k) - pos) / width);
        t.w.push_back(v);
        total += v;
      }
      for (double& v : t.w) v /= total;
    }
    return taps;
  };

  const auto row_taps = weights(rows, src_rows);
  const auto col_taps = weights(cols, src_cols);
  Eigen::MatrixXd narrow(src_rows, cols);
  for (int c = 0; c < cols; ++c) {
    const auto& t = col_taps[static_cast<std::size_t>(c)];
    narrow.col(c).setZero();
    for (std::size_t k = 0; k < t.w.size(); ++k) narrow.col(c) += t.w[k] * e.col(t.lo + static_cast<Eigen::Index>(k)).matrix();
  }
  Eigen::MatrixXd resized(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const auto& t = row_taps[static_cast<std::size_t>(r)];
    resized.row(r).setZero();
    for (std::size_t k = 0; k < t.w.size(); ++k) resized.row(r) += t.w[k] * narrow.row(t.lo + static_cast<Eigen::Index>(k));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) v(static_cast<Eigen::Index>(r) * cols + c) = resized(r, c);
  if (norm == Normalization::UnitEnergy) {
    const double total = v.sum();
    if (total > 0.0) v /= total;
  }
  return v;
}

void write_scalogram_text(std::ostream& out, const Scalogram& s) {
  const auto old_precision = out.precision(17);
  out << "# scalogram rows=" << s.energy.rows() << " cols=" << s.energy.cols() << '\n';
  out << "freqs_hz";
  for (double f : s.freqs) out << ' ' << f;
  out << "\ntimes_s";
  for (double t : s.times) out << ' ' << t;
  out << '\n';
  for (Eigen::Index r = 0; r < s.energy.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.energy.cols(); ++c) {
      if (c) out << ' ';
      out << s.energy(r, c);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace pulse
