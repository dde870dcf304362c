#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pulse/segment.hpp"

namespace pulse {

enum class ClassifierKind { LDA, QDA, SVM_linear, GMM };

inline constexpr ClassifierKind kClassifierKinds[] = {ClassifierKind::LDA, ClassifierKind::QDA,
                                                      ClassifierKind::SVM_linear, ClassifierKind::GMM};

std::string_view to_string(ClassifierKind kind) noexcept;
std::optional<ClassifierKind> parse_classifier_kind(std::string_view token) noexcept;

/// Multivariate normal with a cached Cholesky factor.
struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  double log_density(const Eigen::VectorXd& x) const;
  // Factorizes `cov`; throws Numeric if it is not positive definite.
  void prepare();

 private:
  Eigen::MatrixXd chol_;  // lower factor
  double log_norm_ = 0.0;
};

struct LdaParams {
  Eigen::VectorXd mean_pulse, mean_pulseless;
  Eigen::MatrixXd pooled_cov;  // ridge included
  double prior_pulse = 0.5;
  double prior_pulseless = 0.5;
  Eigen::VectorXd weights;
  double bias = 0.0;
};

struct QdaParams {
  Gaussian pulse, pulseless;
  double prior_pulse = 0.5;
  double prior_pulseless = 0.5;
};

// Features are z-scored with (center, scale) before the linear score.
struct SvmParams {
  Eigen::VectorXd center, scale;
  Eigen::VectorXd weights;
  double bias = 0.0;
  double c = 1.0;
};

struct GmmComponent {
  double weight = 1.0;
  Gaussian density;
};

struct GmmParams {
  Eigen::VectorXd center, scale;
  std::vector<GmmComponent> pulse, pulseless;
};

struct ClassifierModel {
  ClassifierKind kind = ClassifierKind::LDA;
  Condition condition = Condition::CPR;
  int feature_dim = 3;
  double reg = 1e-4;
  std::uint64_t seed = 0;
  std::variant<LdaParams, QdaParams, SvmParams, GmmParams> params;
};

struct FitOptions {
  double reg = 1e-4;       // ridge as a fraction of trace(cov) / d
  std::uint64_t seed = 0;  // GMM initialization and SVM visiting order
  double svm_c = 1.0;
  int gmm_components = 2;
  bool qda_shared_covariance = false;  // QDA with the LDA pooled covariance
};

/// Fits one classifier. Rows of `features` are samples.
///
/// LDA: pooled within-class covariance plus ridge; w = S^-1 (mu+ - mu-),
///      b = -w.(mu+ + mu-)/2 + log(prior+/prior-).
/// QDA: per-class Gaussians with the same ridge rule.
/// SVM_linear: soft-margin hinge loss solved by dual coordinate descent, bias
///      as an augmented constant feature.
/// GMM: per-class mixtures fitted by EM from seeded k-means.
ClassifierModel fit_classifier(ClassifierKind kind, const Eigen::MatrixXd& features,
                               std::span<const Label> labels, Condition condition,
                               const FitOptions& options = {});

// Larger means more Pulse-like. LDA: w.x + b.
double score(const ClassifierModel& model, const Eigen::VectorXd& x);

Label predict(const ClassifierModel& model, const Eigen::VectorXd& x, double threshold = 0.0);

nlohmann::json to_json(const ClassifierModel& model);
ClassifierModel classifier_from_json(const nlohmann::json& j);

}  // namespace pulse
