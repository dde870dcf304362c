#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pulse/classifier.hpp"
#include "pulse/config.hpp"
#include "pulse/features.hpp"
#include "pulse/roc.hpp"
#include "pulse/segment.hpp"

namespace pulse {

// Everything the classifiers need from one segment, computed once.
struct SegmentFeatures {
  std::string patient_id;
  std::int64_t check_id = 0;
  Condition condition = Condition::CPR;
  Label label = Label::Pulse;
  Eigen::VectorXd vector;  // vectorized scalogram
  std::optional<double> heart_rate_bpm;
};

// resample -> bandpass -> CWT -> |W|^2 -> grid vector, plus HR on the resampled trace.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const PipelineConfig& config);
  // Uses stored filter coefficients instead of redesigning them.
  FeatureExtractor(const PipelineConfig& config, FilterCoefficients coeffs);
  SegmentFeatures operator()(const EcgSegment& seg) const;
  // The intermediate scalogram, for inspection and export.
  Scalogram scalogram(const EcgSegment& seg) const;

 private:
  PipelineConfig config_;
  FilterCoefficients coeffs_;
  ScaleGrid grid_;
};

// Errors carry the stage and "record N (patient P, check C)".
std::vector<SegmentFeatures> extract_features(const SegmentSet& set, const PipelineConfig& config);

struct ConditionModel {
  Condition condition = Condition::CPR;
  PcaBasis basis;
  ClassifierModel classifier;
  bool use_heart_rate = false;
  double heart_rate_fill = 0.0;  // training median, used when HR is unavailable
  double threshold = 0.0;        // Youden point on the training ROC
};

Eigen::VectorXd model_features(const ConditionModel& model, const SegmentFeatures& f);
double score(const ConditionModel& model, const SegmentFeatures& f);

// Per-condition PCA, truncated to the selected modes.
PcaBasis fit_condition_basis(const std::vector<const SegmentFeatures*>& rows, Condition condition,
                             const PipelineConfig& config);
// Classifier on a fixed basis; threshold is the training Youden point.
ConditionModel train_condition(const std::vector<const SegmentFeatures*>& rows, const PcaBasis& basis,
                               const PipelineConfig& config, ClassifierKind kind, bool use_heart_rate);
// Fits PCA + classifier on the rows of `rows` with the given condition.
ConditionModel train_condition(const std::vector<const SegmentFeatures*>& rows, Condition condition,
                               const PipelineConfig& config, ClassifierKind kind, bool use_heart_rate);

struct TrainedPipeline {
  std::vector<ConditionModel> models;  // CPR then NoCPR
  const ConditionModel& for_condition(Condition c) const;
};

TrainedPipeline train_pipeline(const std::vector<SegmentFeatures>& train, const PipelineConfig& config);

struct ConditionReport {
  Condition condition = Condition::CPR;
  std::size_t n_segments = 0, n_pulse = 0, n_pulseless = 0;
  AucEstimate auc;
  RocCurve roc;
  double threshold = 0.0;
  double sensitivity = 0.0, specificity = 0.0;  // at threshold
};

struct EvalReport {
  std::vector<ConditionReport> conditions;  // CPR then NoCPR
  std::string classifier;
  std::uint64_t config_fingerprint = 0;
  std::size_t n_train_patients = 0, n_test_patients = 0;
};

EvalReport evaluate(const TrainedPipeline& pipeline, const std::vector<SegmentFeatures>& test,
                    const PipelineConfig& config);

// Train on `train`, score `test`. Overlapping patients raise Leakage.
EvalReport evaluate_split(const SegmentSet& train, const SegmentSet& test, const PipelineConfig& config);

// Fold index per patient: sorted ids shuffled with the seed, dealt round-robin.
std::vector<std::set<std::string>> patient_folds(const std::vector<std::string>& patients, int k,
                                                 std::uint64_t seed);

struct CvCell {
  ClassifierKind kind = ClassifierKind::LDA;
  bool with_heart_rate = false;
  Condition condition = Condition::CPR;
  AucEstimate pooled;
  std::vector<double> fold_auc;  // NaN when a held-out fold lacks one class
};

struct CvReport {
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<std::set<std::string>> folds;
  std::vector<CvCell> cells;
  const CvCell& cell(ClassifierKind kind, bool with_hr, Condition c) const;
};

CvReport cross_validate(const std::vector<SegmentFeatures>& rows, const PipelineConfig& config,
                        const std::vector<ClassifierKind>& kinds = {std::begin(kClassifierKinds),
                                                                    std::end(kClassifierKinds)});

// "0.84 (0.797,0.88)"
std::string format_auc(const AucEstimate& e);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const CvReport& r);
std::string render_table(const EvalReport& r);
std::string render_table(const CvReport& r);
std::string render_csv(const EvalReport& r);
// condition,threshold,fpr,tpr
std::string render_roc_csv(const EvalReport& r);

}  // namespace pulse
