#include "pulse/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "pulse/error.hpp"
#include "pulse/filter.hpp"
#include "pulse/random.hpp"
#include "pulse/signal_io.hpp"
#include "pulse/wavelet.hpp"

namespace pulse {

namespace {

std::string record_context(std::size_t i, const EcgSegment& seg) {
  return "record " + std::to_string(i + 1) + " (patient " + seg.patient_id + ", check " +
         std::to_string(seg.check_id) + ", " + std::string(to_string(seg.condition)) + ")";
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<Label> labels_of(const std::vector<const SegmentFeatures*>& rows) {
  std::vector<Label> out;
  out.reserve(rows.size());
  for (const auto* r : rows) out.push_back(r->label);
  return out;
}

FitOptions fit_options(const PipelineConfig& config) {
  FitOptions o;
  o.reg = config.reg;
  o.seed = config.model_seed;
  o.svm_c = config.svm_c;
  o.gmm_components = config.gmm_components;
  return o;
}

ConditionReport condition_report(Condition c, const std::vector<double>& scores, const std::vector<Label>& labels,
                                 double threshold, const PipelineConfig& config) {
  ConditionReport r;
  r.condition = c;
  r.n_segments = scores.size();
  r.n_pulse = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Pulse));
  r.n_pulseless = r.n_segments - r.n_pulse;
  r.threshold = threshold;
  r.roc = roc_curve(scores, labels);
  r.auc = bootstrap_auc_ci(scores, labels, config.bootstrap_resamples, config.alpha, config.bootstrap_seed);
  std::size_t tp = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pos = scores[i] > threshold;
    if (labels[i] == Label::Pulse && pos) ++tp;
    if (labels[i] == Label::Pulseless && !pos) ++tn;
  }
  r.sensitivity = static_cast<double>(tp) / static_cast<double>(r.n_pulse);
  r.specificity = static_cast<double>(tn) / static_cast<double>(r.n_pulseless);
  return r;
}

// Trailing zeros trimmed, at most `digits` decimals.
std::string trim_fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  std::string out = s.str();
  if (out.find('.') != std::string::npos) {
    while (out.back() == '0') out.pop_back();
    if (out.back() == '.') out.pop_back();
  }
  return out;
}

std::string condition_title(Condition c) { return c == Condition::CPR ? "CPR" : "No CPR"; }

nlohmann::json auc_json(const AucEstimate& e) {
  return {{"auc", e.auc}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"n_resamples", e.n_resamples}, {"seed", e.seed}};
}

Scalogram interior_columns(const Scalogram& s) {
  std::vector<Eigen::Index> keep;
  for (std::size_t k = 0; k < s.edge_columns.size(); ++k)
    if (!s.edge_columns[k]) keep.push_back(static_cast<Eigen::Index>(k));
  if (keep.size() < 2) fail(ErrorKind::Length, "segment too short to drop edge columns");
  Scalogram out;
  out.scales = s.scales;
  out.freqs = s.freqs;
  out.energy = s.energy(Eigen::all, keep);
  for (auto k : keep) {
    out.times.push_back(s.times[static_cast<std::size_t>(k)]);
    out.edge_columns.push_back(false);
  }
  return out;
}

}  // namespace

FeatureExtractor::FeatureExtractor(const PipelineConfig& config)
    : config_(config), coeffs_(design_butterworth_bandpass(config.filter)),
      grid_(build_scale_grid(config.wavelet, config.filter.fs)) {}

FeatureExtractor::FeatureExtractor(const PipelineConfig& config, FilterCoefficients coeffs)
    : config_(config), coeffs_(std::move(coeffs)), grid_(build_scale_grid(config.wavelet, config.filter.fs)) {}

Scalogram FeatureExtractor::scalogram(const EcgSegment& seg) const {
  validate_segment(seg);
  const EcgSegment resampled = resample_to_250(seg);
  const EcgSegment filtered = preprocess_ecg(resampled, coeffs_);
  const auto W = cwt(filtered.samples, filtered.fs, grid_, config_.wavelet);
  return scalogram_energy(W, grid_, filtered.fs);
}

SegmentFeatures FeatureExtractor::operator()(const EcgSegment& seg) const {
  SegmentFeatures f;
  f.patient_id = seg.patient_id;
  f.check_id = seg.check_id;
  f.condition = seg.condition;
  f.label = seg.label;
  Scalogram s = scalogram(seg);
  if (config_.exclude_edges) s = interior_columns(s);
  f.vector = vectorize_scalogram(s, config_.grid_rows, config_.grid_cols, config_.normalization);
  f.heart_rate_bpm = estimate_heart_rate(resample_to_250(seg), config_.heart_rate);
  return f;
}

std::vector<SegmentFeatures> extract_features(const SegmentSet& set, const PipelineConfig& config) {
  const FeatureExtractor extract = [&] {
    try {
      return FeatureExtractor(config);
    } catch (const Error& e) {
      throw e.with_stage("feature setup");
    }
  }();
  std::vector<SegmentFeatures> out;
  out.reserve(set.segments.size());
  for (std::size_t i = 0; i < set.segments.size(); ++i) {
    try {
      out.push_back(extract(set.segments[i]));
    } catch (const Error& e) {
      throw e.with_stage("features, " + record_context(i, set.segments[i]));
    }
  }
  return out;
}

Eigen::VectorXd model_features(const ConditionModel& model, const SegmentFeatures& f) {
  const FeatureVector fv = project_features(model.basis, f.vector, f.condition, f.heart_rate_bpm);
  Eigen::VectorXd x(model.use_heart_rate ? kFeatureModes + 1 : kFeatureModes);
  for (int i = 0; i < kFeatureModes; ++i) x(i) = fv.modes[static_cast<std::size_t>(i)];
  if (model.use_heart_rate) x(kFeatureModes) = f.heart_rate_bpm.value_or(model.heart_rate_fill);
  return x;
}

double score(const ConditionModel& model, const SegmentFeatures& f) {
  return score(model.classifier, model_features(model, f));
}

PcaBasis fit_condition_basis(const std::vector<const SegmentFeatures*>& rows, Condition condition,
                             const PipelineConfig& config) {
  if (rows.empty()) fail(ErrorKind::InsufficientData, "no " + std::string(to_string(condition)) + " segments");
  const auto d = rows.front()->vector.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = rows[i]->vector.transpose();
  PcaBasis basis;
  try {
    basis = fit_pca(X, config.pca_cutoff, condition);
  } catch (const Error& e) {
    throw e.with_stage("features (PCA, " + std::string(to_string(condition)) + ")");
  }
  // Keep only the selected modes; that is all scoring ever reads.
  const auto keep = std::min<Eigen::Index>(basis.modes.cols(), std::max(basis.n_selected, kFeatureModes));
  basis.modes = basis.modes.leftCols(keep).eval();
  return basis;
}

ConditionModel train_condition(const std::vector<const SegmentFeatures*>& rows, const PcaBasis& basis,
                               const PipelineConfig& config, ClassifierKind kind, bool use_heart_rate) {
  ConditionModel m;
  m.condition = basis.condition;
  m.basis = basis;
  m.use_heart_rate = use_heart_rate;

  std::vector<double> hrs;
  for (const auto* r : rows)
    if (r->heart_rate_bpm) hrs.push_back(*r->heart_rate_bpm);
  m.heart_rate_fill = hrs.empty() ? 0.0 : median(hrs);

  Eigen::MatrixXd F(static_cast<Eigen::Index>(rows.size()), use_heart_rate ? kFeatureModes + 1 : kFeatureModes);
  for (std::size_t i = 0; i < rows.size(); ++i) F.row(static_cast<Eigen::Index>(i)) = model_features(m, *rows[i]).transpose();
  const auto labels = labels_of(rows);
  try {
    m.classifier = fit_classifier(kind, F, labels, m.condition, fit_options(config));
  } catch (const Error& e) {
    throw e.with_stage("classifiers (" + std::string(to_string(kind)) + ", " + std::string(to_string(m.condition)) + ")");
  }

  std::vector<double> scores(rows.size());
  for (Eigen::Index i = 0; i < F.rows(); ++i) scores[static_cast<std::size_t>(i)] = score(m.classifier, F.row(i).transpose());
  m.threshold = youden_threshold(roc_curve(scores, labels));
  return m;
}

ConditionModel train_condition(const std::vector<const SegmentFeatures*>& rows, Condition condition,
                               const PipelineConfig& config, ClassifierKind kind, bool use_heart_rate) {
  return train_condition(rows, fit_condition_basis(rows, condition, config), config, kind, use_heart_rate);
}

const ConditionModel& TrainedPipeline::for_condition(Condition c) const {
  for (const auto& m : models)
    if (m.condition == c) return m;
  fail(ErrorKind::Usage, "no model for condition " + std::string(to_string(c)));
}

TrainedPipeline train_pipeline(const std::vector<SegmentFeatures>& train, const PipelineConfig& config) {
  TrainedPipeline p;
  for (Condition c : kConditions) {
    std::vector<const SegmentFeatures*> rows;
    for (const auto& f : train)
      if (f.condition == c) rows.push_back(&f);
    p.models.push_back(train_condition(rows, c, config, config.classifier, false));
  }
  return p;
}

EvalReport evaluate(const TrainedPipeline& pipeline, const std::vector<SegmentFeatures>& test,
                    const PipelineConfig& config) {
  EvalReport report;
  report.classifier = std::string(to_string(config.classifier));
  report.config_fingerprint = config_fingerprint(config);
  std::set<std::string> patients;
  for (const auto& f : test) patients.insert(f.patient_id);
  report.n_test_patients = patients.size();
  for (Condition c : kConditions) {
    const auto& model = pipeline.for_condition(c);
    std::vector<double> scores;
    std::vector<Label> labels;
    for (const auto& f : test) {
      if (f.condition != c) continue;
      scores.push_back(score(model, f));
      labels.push_back(f.label);
    }
    try {
      report.conditions.push_back(condition_report(c, scores, labels, model.threshold, config));
    } catch (const Error& e) {
      throw e.with_stage("evaluation (" + std::string(to_string(c)) + ")");
    }
  }
  return report;
}

EvalReport evaluate_split(const SegmentSet& train, const SegmentSet& test, const PipelineConfig& config) {
  const auto train_ids = patient_ids(train);
  const auto test_ids = patient_ids(test);
  std::vector<std::string> shared;
  std::set_intersection(train_ids.begin(), train_ids.end(), test_ids.begin(), test_ids.end(),
                        std::back_inserter(shared));
  if (!shared.empty()) {
    fail(ErrorKind::Leakage, std::to_string(shared.size()) + " patient(s) appear in both train and test, e.g. " +
                                 shared.front());
  }
  const auto pipeline = train_pipeline(extract_features(train, config), config);
  auto report = evaluate(pipeline, extract_features(test, config), config);
  report.n_train_patients = train_ids.size();
  return report;
}

std::vector<std::set<std::string>> patient_folds(const std::vector<std::string>& patients, int k,
                                                 std::uint64_t seed) {
  std::vector<std::string> ids = patients;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (k < 2) fail(ErrorKind::Config, "cross-validation needs k >= 2");
  if (ids.size() < static_cast<std::size_t>(k)) {
    fail(ErrorKind::Config, std::to_string(ids.size()) + " patients cannot fill " + std::to_string(k) + " folds");
  }
  Rng rng(seed, 0xcf01d);
  rng.shuffle(std::span<std::string>(ids));
  std::vector<std::set<std::string>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < ids.size(); ++i) folds[i % folds.size()].insert(ids[i]);
  return folds;
}

const CvCell& CvReport::cell(ClassifierKind kind, bool with_hr, Condition c) const {
  for (const auto& x : cells)
    if (x.kind == kind && x.with_heart_rate == with_hr && x.condition == c) return x;
  fail(ErrorKind::Usage, "no CV cell for " + std::string(to_string(kind)));
}

CvReport cross_validate(const std::vector<SegmentFeatures>& rows, const PipelineConfig& config,
                        const std::vector<ClassifierKind>& kinds) {
  CvReport report;
  report.k = config.cv_folds;
  report.seed = config.cv_seed;
  std::vector<std::string> ids;
  for (const auto& r : rows) ids.push_back(r.patient_id);
  report.folds = patient_folds(ids, config.cv_folds, config.cv_seed);

  for (Condition c : kConditions) {
    std::vector<const SegmentFeatures*> all;
    for (const auto& r : rows)
      if (r.condition == c) all.push_back(&r);

    // PCA depends only on the fold, so fit it once and share it across classifiers.
    struct Fold {
      std::vector<const SegmentFeatures*> fit_rows, held_rows;
      PcaBasis basis;
    };
    std::vector<Fold> folds(report.folds.size());
    for (std::size_t f = 0; f < folds.size(); ++f) {
      for (const auto* r : all) (report.folds[f].count(r->patient_id) ? folds[f].held_rows : folds[f].fit_rows).push_back(r);
      try {
        folds[f].basis = fit_condition_basis(folds[f].fit_rows, c, config);
      } catch (const Error& e) {
        throw e.with_stage("cross-validation fold " + std::to_string(f + 1));
      }
    }

    for (ClassifierKind kind : kinds) {
      for (bool with_hr : {false, true}) {
        CvCell cell;
        cell.kind = kind;
        cell.with_heart_rate = with_hr;
        cell.condition = c;
        std::vector<double> pooled_scores;
        std::vector<Label> pooled_labels;
        for (std::size_t f = 0; f < folds.size(); ++f) {
          const auto model = [&] {
            try {
              return train_condition(folds[f].fit_rows, folds[f].basis, config, kind, with_hr);
            } catch (const Error& e) {
              throw e.with_stage("cross-validation fold " + std::to_string(f + 1));
            }
          }();
          std::vector<double> s;
          std::vector<Label> l;
          for (const auto* r : folds[f].held_rows) {
            s.push_back(score(model, *r));
            l.push_back(r->label);
          }
          const bool both = std::count(l.begin(), l.end(), Label::Pulse) > 0 &&
                            std::count(l.begin(), l.end(), Label::Pulseless) > 0;
          cell.fold_auc.push_back(both ? auc(s, l) : std::numeric_limits<double>::quiet_NaN());
          pooled_scores.insert(pooled_scores.end(), s.begin(), s.end());
          pooled_labels.insert(pooled_labels.end(), l.begin(), l.end());
        }
        cell.pooled = bootstrap_auc_ci(pooled_scores, pooled_labels, config.bootstrap_resamples, config.alpha,
                                       config.bootstrap_seed);
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

std::string format_auc(const AucEstimate& e) {
  return trim_fixed(e.auc, 2) + " (" + trim_fixed(e.ci_low, 3) + "," + trim_fixed(e.ci_high, 3) + ")";
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& c : r.conditions) {
    nlohmann::json roc = nlohmann::json::array();
    for (std::size_t i = 0; i < c.roc.fpr.size(); ++i) {
      // The first point sits at +inf, which JSON cannot carry.
      roc.push_back({{"fpr", c.roc.fpr[i]},
                     {"tpr", c.roc.tpr[i]},
                     {"threshold", std::isfinite(c.roc.thresholds[i]) ? nlohmann::json(c.roc.thresholds[i])
                                                                      : nlohmann::json(nullptr)}});
    }
    conds.push_back({{"condition", to_string(c.condition)},
                     {"n_segments", c.n_segments},
                     {"n_pulse", c.n_pulse},
                     {"n_pulseless", c.n_pulseless},
                     {"auc", auc_json(c.auc)},
                     {"threshold", c.threshold},
                     {"sensitivity", c.sensitivity},
                     {"specificity", c.specificity},
                     {"roc", roc}});
  }
  return {{"classifier", r.classifier},
          {"config_fingerprint", hex64(r.config_fingerprint)},
          {"n_train_patients", r.n_train_patients},
          {"n_test_patients", r.n_test_patients},
          {"conditions", conds}};
}

nlohmann::json to_json(const CvReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json folds = nlohmann::json::array();
    for (double a : c.fold_auc) folds.push_back(std::isnan(a) ? nlohmann::json(nullptr) : nlohmann::json(a));
    cells.push_back({{"classifier", to_string(c.kind)},
                     {"features", c.with_heart_rate ? "modes1-3+HR" : "modes1-3"},
                     {"condition", to_string(c.condition)},
                     {"pooled", auc_json(c.pooled)},
                     {"fold_auc", folds}});
  }
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& f : r.folds) sizes.push_back(f.size());
  return {{"k", r.k}, {"seed", r.seed}, {"fold_patients", sizes}, {"cells", cells}};
}

std::string render_table(const EvalReport& r) {
  std::ostringstream out;
  out << "Test AUC (" << r.classifier << ")\n";
  out << std::left << std::setw(8) << "" << std::setw(22) << "AUC (95% CI)" << std::setw(10) << "n"
      << std::setw(10) << "Pulse" << "Pulseless\n";
  for (const auto& c : r.conditions) {
    out << std::left << std::setw(8) << condition_title(c.condition) << std::setw(22) << format_auc(c.auc)
        << std::setw(10) << c.n_segments << std::setw(10) << c.n_pulse << c.n_pulseless << "\n";
  }
  out << "config " << hex64(r.config_fingerprint) << "\n";
  return out.str();
}

std::string render_table(const CvReport& r) {
  std::ostringstream out;
  out << "Training AUC, " << r.k << "-fold patient cross-validation\n";
  out << std::left << std::setw(12) << "Classifier" << std::setw(14) << "Features" << std::setw(22) << "CPR"
      << "No CPR\n";
  std::vector<std::pair<ClassifierKind, bool>> rows;
  for (const auto& c : r.cells) {
    const std::pair key{c.kind, c.with_heart_rate};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }
  for (const auto& [kind, hr] : rows) {
    out << std::left << std::setw(12) << to_string(kind) << std::setw(14) << (hr ? "modes1-3+HR" : "modes1-3")
        << std::setw(22) << format_auc(r.cell(kind, hr, Condition::CPR).pooled)
        << format_auc(r.cell(kind, hr, Condition::NoCPR).pooled) << "\n";
  }
  return out.str();
}

std::string render_csv(const EvalReport& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "condition,n_segments,n_pulse,n_pulseless,auc,ci_low,ci_high,threshold,sensitivity,specificity\n";
  for (const auto& c : r.conditions) {
    out << to_string(c.condition) << ',' << c.n_segments << ',' << c.n_pulse << ',' << c.n_pulseless << ','
        << c.auc.auc << ',' << c.auc.ci_low << ',' << c.auc.ci_high << ',' << c.threshold << ',' << c.sensitivity
        << ',' << c.specificity << "\n";
  }
  return out.str();
}

std::string render_roc_csv(const EvalReport& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "condition,threshold,fpr,tpr\n";
  for (const auto& c : r.conditions) {
    for (std::size_t i = 0; i < c.roc.fpr.size(); ++i) {
      out << to_string(c.condition) << ',';
      if (std::isfinite(c.roc.thresholds[i])) out << c.roc.thresholds[i];
      else out << "inf";
      out << ',' << c.roc.fpr[i] << ',' << c.roc.tpr[i] << "\n";
    }
  }
  return out.str();
}

}  // namespace pulse
