#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

#include "pulse/segment.hpp"

namespace pulse {

inline constexpr int kFeatureModes = 3;

struct PcaBasis {
  Eigen::VectorXd mean;
  Eigen::MatrixXd modes;  // d x r, columns orthonormal, ordered by variance
  std::vector<double> explained_fraction;
  int n_selected = 0;
  Condition condition = Condition::CPR;

  Eigen::Index dimension() const noexcept { return mean.size(); }
};

struct FeatureVector {
  std::array<double, kFeatureModes> modes{};
  std::optional<double> heart_rate_bpm;
  Condition condition = Condition::CPR;
};

/// Mean-centred PCA over the rows of `vectors`.
///
/// Modes are the right singular vectors of the centred matrix, each flipped so
/// that its largest-magnitude entry is positive. Singular values below
/// max(n, d) * eps * sigma_max are treated as exact zeros. n_selected counts
/// modes whose variance fraction is at least `cutoff`, with a floor of 3.
PcaBasis fit_pca(const Eigen::MatrixXd& vectors, double cutoff, Condition condition);

FeatureVector project_features(const PcaBasis& basis, const Eigen::VectorXd& vector,
                               Condition condition, std::optional<double> heart_rate_bpm = {});

struct HeartRateOptions {
  double threshold_fraction = 0.5;  // of the percentile below
  double percentile = 95.0;         // of |filtered|
  double refractory_s = 0.2;
  double min_bpm = 20.0;
  double max_bpm = 250.0;
};

// QRS-band (10-40 Hz, prototype order 8) peak picking. Returns nullopt when
// fewer than two peaks are found or the rate falls outside [min_bpm, max_bpm].
std::optional<double> estimate_heart_rate(const EcgSegment& seg, const HeartRateOptions& options = {});

// Peak sample indices used by estimate_heart_rate, in time order.
std::vector<std::size_t> detect_qrs_peaks(const EcgSegment& seg, const HeartRateOptions& options = {});

}  // namespace pulse
