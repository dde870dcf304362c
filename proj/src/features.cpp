#include "pulse/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pulse/error.hpp"
#include "pulse/filter.hpp"

namespace pulse {

PcaBasis fit_pca(const Eigen::MatrixXd& vectors, double cutoff, Condition condition) {
  const Eigen::Index n = vectors.rows();
  const Eigen::Index d = vectors.cols();
  if (n < 4) fail(ErrorKind::InsufficientData, "PCA needs at least 4 rows, got " + std::to_string(n));
  if (d < kFeatureModes) {
    fail(ErrorKind::Degenerate, "PCA needs dimension >= 3 to produce 3 modes");
  }
  if (!vectors.allFinite()) fail(ErrorKind::Validation, "PCA input contains non-finite entries");

  PcaBasis basis;
  basis.condition = condition;
  basis.mean = vectors.colwise().mean().transpose();
  // Tall orientation (d x n) so the modes come out as thin left singular vectors.
  const Eigen::MatrixXd centred_t = (vectors.rowwise() - basis.mean.transpose()).transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centred_t, Eigen::ComputeThinU);
  Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0)) fail(ErrorKind::Degenerate, "PCA input has zero variance");

  const double tol = static_cast<double>(std::max(n, d)) * std::numeric_limits<double>::epsilon() * sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) <= tol) sv(i) = 0.0;
  }
  const double total = sv.squaredNorm();

  basis.modes = svd.matrixU();
  for (Eigen::Index i = 0; i < basis.modes.cols(); ++i) {
    Eigen::Index arg = 0;
    basis.modes.col(i).cwiseAbs().maxCoeff(&arg);
    if (basis.modes(arg, i) < 0.0) basis.modes.col(i) = -basis.modes.col(i);
  }

  basis.explained_fraction.resize(static_cast<std::size_t>(sv.size()));
  int above = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double f = sv(i) * sv(i) / total;
    basis.explained_fraction[static_cast<std::size_t>(i)] = f;
    if (f >= cutoff) ++above;
  }
  basis.n_selected = std::min<int>(std::max(above, kFeatureModes), static_cast<int>(sv.size()));
  return basis;
}

FeatureVector project_features(const PcaBasis& basis, const Eigen::VectorXd& vector,
                               Condition condition, std::optional<double> heart_rate_bpm) {
  if (vector.size() != basis.dimension()) {
    fail(ErrorKind::Shape, "feature vector has length " + std::to_string(vector.size()) +
                               ", basis expects " + std::to_string(basis.dimension()));
  }
  if (condition != basis.condition) {
    fail(ErrorKind::Usage, std::string(to_string(condition)) + " segment projected onto " +
                               std::string(to_string(basis.condition)) + " basis");
  }
  if (basis.modes.cols() < kFeatureModes) fail(ErrorKind::Shape, "basis has fewer than 3 modes");
  const Eigen::VectorXd centred = vector - basis.mean;
  FeatureVector f;
  f.condition = condition;
  f.heart_rate_bpm = heart_rate_bpm;
  for (int i = 0; i < kFeatureModes; ++i) f.modes[static_cast<std::size_t>(i)] = centred.dot(basis.modes.col(i));
  return f;
}

namespace {

double percentile_of(std::vector<double> values, double pct) {
  std::sort(values.begin(), values.end());
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

std::vector<std::size_t> detect_qrs_peaks(const EcgSegment& seg, const HeartRateOptions& options) {
  if (seg.fs != kQrsFilter.fs) {
    fail(ErrorKind::Validation, "heart-rate estimation expects 250 Hz input, got " + std::to_string(seg.fs));
  }
  if (seg.duration_s() < 2.0) fail(ErrorKind::Length, "heart-rate estimation needs at least 2 s");
  static const FilterCoefficients qrs = design_butterworth_bandpass(kQrsFilter);

  std::vector<double> mag = filtfilt(qrs, seg.samples);
  for (double& v : mag) v = std::abs(v);
  const double threshold = options.threshold_fraction * percentile_of(mag, options.percentile);
  if (!(threshold > 0.0)) return {};

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (mag[i] < threshold) continue;
    const bool left = i == 0 || mag[i] >= mag[i - 1];
    const bool right = i + 1 == mag.size() || mag[i] > mag[i + 1];
    if (left && right) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });

  const auto spacing = static_cast<std::size_t>(std::llround(options.refractory_s * seg.fs));
  std::vector<std::size_t> peaks;
  for (auto c : candidates) {
    const bool clear = std::none_of(peaks.begin(), peaks.end(), [&](std::size_t p) {
      return (c > p ? c - p : p - c) < spacing;
    });
    if (clear) peaks.push_back(c);
  }
  std::sort(peaks.begin(), peaks.end());
  return peaks;
}

std::optional<double> estimate_heart_rate(const EcgSegment& seg, const HeartRateOptions& options) {
  const auto peaks = detect_qrs_peaks(seg, options);
  if (peaks.size() < 2) return std::nullopt;
  const double span_s = static_cast<double>(peaks.back() - peaks.front()) / seg.fs;
  const double bpm = 60.0 * static_cast<double>(peaks.size() - 1) / span_s;
  if (bpm < options.min_bpm || bpm > options.max_bpm) return std::nullopt;
  return bpm;
}

}  // namespace pulse
