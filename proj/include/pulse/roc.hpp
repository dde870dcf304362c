#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pulse/segment.hpp"

namespace pulse {

/// Empirical ROC with one step per distinct score (ties grouped).
///
/// Point i counts samples with score >= thresholds[i]; point 0 is (0, 0) at
/// threshold +inf and the last point is (1, 1).
struct RocCurve {
  std::vector<double> fpr, tpr, thresholds;
  std::vector<std::int64_t> fp, tp;
  std::int64_t n_pos = 0, n_neg = 0;
};

struct AucEstimate {
  double auc = 0.0;
  double ci_low = 0.0, ci_high = 0.0;
  int n_resamples = 0;
  std::uint64_t seed = 0;
};

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels);

// Trapezoidal area, computed exactly in integer counts; equals the
// Mann-Whitney statistic (concordant + ties / 2) / (n_pos * n_neg).
double auc(const RocCurve& curve);

double auc(std::span<const double> scores, std::span<const Label> labels);

// Threshold t maximizing TPR - FPR for the rule "Pulse iff score > t";
// the midpoint between the optimal cut score and the next lower score.
double youden_threshold(const RocCurve& curve);

/// Class-stratified percentile bootstrap of the AUC.
///
/// Resample r draws n_pos positives and n_neg negatives with replacement from
/// Rng(seed, r), so results do not depend on evaluation order. The interval
/// uses linearly interpolated alpha/2 and 1 - alpha/2 quantiles.
AucEstimate bootstrap_auc_ci(std::span<const double> scores, std::span<const Label> labels,
                             int n_resamples = 1000, double alpha = 0.05, std::uint64_t seed = 0);

}  // namespace pulse
