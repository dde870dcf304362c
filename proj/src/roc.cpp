#include "pulse/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pulse/error.hpp"
#include "pulse/random.hpp"

namespace pulse {

namespace {

void check_inputs(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) fail(ErrorKind::Shape, "scores and labels differ in length");
  for (double s : scores) {
    if (!std::isfinite(s)) fail(ErrorKind::Validation, "non-finite score");
  }
  const auto pos = std::count(labels.begin(), labels.end(), Label::Pulse);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) {
    fail(ErrorKind::Validation, "ROC undefined: labels contain a single class");
  }
}

// AUC of a weighted sample: weight[i] copies of (sorted_scores[i], is_pos[i]).
// Inputs are sorted ascending by score.
double weighted_auc(std::span<const double> sorted_scores, std::span<const char> is_pos,
                    std::span<const int> weight) {
  // 2 * (concordant + ties / 2), accumulated exactly.
  std::int64_t twice = 0;
  std::int64_t neg_below = 0;
  std::int64_t n_pos = 0, n_neg = 0;
  std::size_t i = 0;
  const std::size_t n = sorted_scores.size();
  while (i < n) {
    std::size_t j = i;
    std::int64_t group_pos = 0, group_neg = 0;
    while (j < n && sorted_scores[j] == sorted_scores[i]) {
      if (is_pos[j]) group_pos += weight[j];
      else group_neg += weight[j];
      ++j;
    }
    twice += group_pos * (2 * neg_below + group_neg);
    neg_below += group_neg;
    n_pos += group_pos;
    n_neg += group_neg;
    i = j;
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  check_inputs(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve c;
  c.n_pos = std::count(labels.begin(), labels.end(), Label::Pulse);
  c.n_neg = static_cast<std::int64_t>(labels.size()) - c.n_pos;
  c.thresholds.push_back(std::numeric_limits<double>::infinity());
  c.tp.push_back(0);
  c.fp.push_back(0);
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == Label::Pulse) ++tp;
      else ++fp;
      ++i;
    }
    c.thresholds.push_back(s);
    c.tp.push_back(tp);
    c.fp.push_back(fp);
  }
  for (std::size_t k = 0; k < c.tp.size(); ++k) {
    c.tpr.push_back(static_cast<double>(c.tp[k]) / static_cast<double>(c.n_pos));
    c.fpr.push_back(static_cast<double>(c.fp[k]) / static_cast<double>(c.n_neg));
  }
  return c;
}

double auc(const RocCurve& curve) {
  if (curve.n_pos <= 0 || curve.n_neg <= 0 || curve.tp.size() < 2) {
    fail(ErrorKind::Validation, "ROC curve is empty");
  }
  std::int64_t twice = 0;
  for (std::size_t k = 1; k < curve.tp.size(); ++k) {
    twice += (curve.fp[k] - curve.fp[k - 1]) * (curve.tp[k] + curve.tp[k - 1]);
  }
  return static_cast<double>(twice) /
         (2.0 * static_cast<double>(curve.n_pos) * static_cast<double>(curve.n_neg));
}

double auc(std::span<const double> scores, std::span<const Label> labels) {
  return auc(roc_curve(scores, labels));
}

double youden_threshold(const RocCurve& curve) {
  std::size_t best = 0;
  double best_j = -1.0;
  for (std::size_t k = 0; k < curve.tpr.size(); ++k) {
    const double j = curve.tpr[k] - curve.fpr[k];
    if (j > best_j) {
      best_j = j;
      best = k;
    }
  }
  if (best == 0) {
    // Nothing beats the empty rule; predict Pulseless for every observed score.
    return curve.thresholds.size() > 1 ? curve.thresholds[1] + 1.0 : 0.0;
  }
  if (best + 1 < curve.thresholds.size()) {
    return 0.5 * (curve.thresholds[best] + curve.thresholds[best + 1]);
  }
  return curve.thresholds[best] - 1.0;
}

AucEstimate bootstrap_auc_ci(std::span<const double> scores, std::span<const Label> labels,
                             int n_resamples, double alpha, std::uint64_t seed) {
  check_inputs(scores, labels);
  if (n_resamples < 100) fail(ErrorKind::Config, "bootstrap needs at least 100 resamples");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::Config, "alpha must lie in (0, 1)");

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> sorted(n);
  std::vector<char> is_pos(n);
  std::vector<std::size_t> pos_idx, neg_idx;  // positions in sorted order
  for (std::size_t k = 0; k < n; ++k) {
    sorted[k] = scores[order[k]];
    is_pos[k] = labels[order[k]] == Label::Pulse;
    (is_pos[k] ? pos_idx : neg_idx).push_back(k);
  }

  AucEstimate est;
  est.n_resamples = n_resamples;
  est.seed = seed;
  const std::vector<int> ones(n, 1);
  est.auc = weighted_auc(sorted, is_pos, ones);

  std::vector<double> aucs(static_cast<std::size_t>(n_resamples));
  std::vector<int> weight(n);
  for (int r = 0; r < n_resamples; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    std::fill(weight.begin(), weight.end(), 0);
    for (std::size_t k = 0; k < pos_idx.size(); ++k) ++weight[pos_idx[rng.below(pos_idx.size())]];
    for (std::size_t k = 0; k < neg_idx.size(); ++k) ++weight[neg_idx[rng.below(neg_idx.size())]];
    aucs[static_cast<std::size_t>(r)] = weighted_auc(sorted, is_pos, weight);
  }
  std::sort(aucs.begin(), aucs.end());
  est.ci_low = quantile_sorted(aucs, alpha / 2.0);
  est.ci_high = quantile_sorted(aucs, 1.0 - alpha / 2.0);
  return est;
}

}  // namespace pulse
