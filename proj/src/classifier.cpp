#include "pulse/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pulse/error.hpp"
#include "pulse/json_util.hpp"
#include "pulse/random.hpp"

namespace pulse {

using json_util::matrix_from_json;
using json_util::matrix_to_json;
using json_util::vector_from_json;
using json_util::vector_to_json;

std::string_view to_string(ClassifierKind kind) noexcept {
  switch (kind) {
    case ClassifierKind::LDA: return "LDA";
    case ClassifierKind::QDA: return "QDA";
    case ClassifierKind::SVM_linear: return "SVM_linear";
    case ClassifierKind::GMM: return "GMM";
  }
  return "?";
}

std::optional<ClassifierKind> parse_classifier_kind(std::string_view token) noexcept {
  for (auto k : kClassifierKinds) {
    if (to_string(k) == token) return k;
  }
  if (token == "SVM") return ClassifierKind::SVM_linear;
  return std::nullopt;
}

void Gaussian::prepare() {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::Numeric, "covariance is not positive definite after regularization");
  }
  chol_ = llt.matrixL();
  const double logdet = 2.0 * chol_.diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(mean.size()) * std::log(2.0 * std::numbers::pi) + logdet);
}

double Gaussian::log_density(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(x - mean);
  return log_norm_ - 0.5 * z.squaredNorm();
}

namespace {

struct ClassSplit {
  Eigen::MatrixXd pulse, pulseless;
};

ClassSplit split_classes(const Eigen::MatrixXd& x, std::span<const Label> labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    fail(ErrorKind::Shape, "feature rows and labels differ in length");
  }
  if (!x.allFinite()) fail(ErrorKind::Validation, "classifier features contain non-finite values");
  const auto n_pulse = std::count(labels.begin(), labels.end(), Label::Pulse);
  const auto n_pulseless = static_cast<std::ptrdiff_t>(labels.size()) - n_pulse;
  if (n_pulse == 0 || n_pulseless == 0) {
    fail(ErrorKind::Fit, "training data contains a single class");
  }
  if (n_pulse < 2 || n_pulseless < 2) fail(ErrorKind::Fit, "each class needs at least 2 samples");
  ClassSplit s{Eigen::MatrixXd(n_pulse, x.cols()), Eigen::MatrixXd(n_pulseless, x.cols())};
  Eigen::Index ip = 0, in = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] == Label::Pulse) {
      s.pulse.row(ip++) = x.row(i);
    } else {
      s.pulseless.row(in++) = x.row(i);
    }
  }
  return s;
}

Eigen::MatrixXd scatter(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean) {
  const Eigen::MatrixXd c = x.rowwise() - mean.transpose();
  return c.transpose() * c;
}

void add_ridge(Eigen::MatrixXd& cov, double reg) {
  cov.diagonal().array() += reg * cov.trace() / static_cast<double>(cov.rows());
}

Eigen::MatrixXd pooled_covariance(const ClassSplit& s, const Eigen::VectorXd& mp,
                                  const Eigen::VectorXd& mn, double reg) {
  const double dof = static_cast<double>(s.pulse.rows() + s.pulseless.rows() - 2);
  Eigen::MatrixXd cov = (scatter(s.pulse, mp) + scatter(s.pulseless, mn)) / dof;
  add_ridge(cov, reg);
  return cov;
}

Gaussian class_gaussian(const Eigen::MatrixXd& x, double reg) {
  Gaussian g;
  g.mean = x.colwise().mean().transpose();
  g.cov = scatter(x, g.mean) / static_cast<double>(x.rows() - 1);
  add_ridge(g.cov, reg);
  g.prepare();
  return g;
}

void standardizer(const Eigen::MatrixXd& x, Eigen::VectorXd& center, Eigen::VectorXd& scale) {
  center = x.colwise().mean().transpose();
  scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - center(j)).square().sum() / static_cast<double>(x.rows());
    scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& center,
                            const Eigen::VectorXd& scale) {
  return (x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
}

LdaParams fit_lda(const ClassSplit& s, double reg) {
  LdaParams p;
  p.mean_pulse = s.pulse.colwise().mean().transpose();
  p.mean_pulseless = s.pulseless.colwise().mean().transpose();
  p.pooled_cov = pooled_covariance(s, p.mean_pulse, p.mean_pulseless, reg);
  const double n = static_cast<double>(s.pulse.rows() + s.pulseless.rows());
  p.prior_pulse = static_cast<double>(s.pulse.rows()) / n;
  p.prior_pulseless = static_cast<double>(s.pulseless.rows()) / n;
  Eigen::LLT<Eigen::MatrixXd> llt(p.pooled_cov);
  if (llt.info() != Eigen::Success) {
    fail(ErrorKind::Numeric, "pooled covariance is singular after regularization");
  }
  p.weights = llt.solve(p.mean_pulse - p.mean_pulseless);
  p.bias = -0.5 * p.weights.dot(p.mean_pulse + p.mean_pulseless) +
           std::log(p.prior_pulse / p.prior_pulseless);
  return p;
}

QdaParams fit_qda(const ClassSplit& s, double reg, bool shared) {
  QdaParams p;
  const double n = static_cast<double>(s.pulse.rows() + s.pulseless.rows());
  p.prior_pulse = static_cast<double>(s.pulse.rows()) / n;
  p.prior_pulseless = static_cast<double>(s.pulseless.rows()) / n;
  if (shared) {
    p.pulse.mean = s.pulse.colwise().mean().transpose();
    p.pulseless.mean = s.pulseless.colwise().mean().transpose();
    const Eigen::MatrixXd cov = pooled_covariance(s, p.pulse.mean, p.pulseless.mean, reg);
    p.pulse.cov = cov;
    p.pulseless.cov = cov;
    p.pulse.prepare();
    p.pulseless.prepare();
  } else {
    p.pulse = class_gaussian(s.pulse, reg);
    p.pulseless = class_gaussian(s.pulseless, reg);
  }
  return p;
}

// Dual coordinate descent for the L1-loss linear SVM with an augmented
// constant feature carrying the bias.
SvmParams fit_svm(const Eigen::MatrixXd& x, std::span<const Label> labels, const FitOptions& opt) {
  SvmParams p;
  p.c = opt.svm_c;
  standardizer(x, p.center, p.scale);
  const Eigen::MatrixXd z = standardize(x, p.center, p.scale);
  const Eigen::Index n = z.rows();
  const Eigen::Index d = z.cols();
  Eigen::MatrixXd aug(n, d + 1);
  aug << z, Eigen::VectorXd::Ones(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] == Label::Pulse ? 1.0 : -1.0;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd q = aug.rowwise().squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(opt.seed, 0x5f3);
  constexpr int kMaxPasses = 2000;
  constexpr double kTol = 1e-6;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    rng.shuffle(std::span<Eigen::Index>(order));
    double pg_max = -HUGE_VAL, pg_min = HUGE_VAL;
    for (auto i : order) {
      const double g = y(i) * w.dot(aug.row(i)) - 1.0;
      double pg = g;
      if (alpha(i) <= 0.0) pg = std::min(g, 0.0);
      else if (alpha(i) >= p.c) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha(i);
        alpha(i) = std::clamp(old - g / q(i), 0.0, p.c);
        w += (alpha(i) - old) * y(i) * aug.row(i).transpose();
      }
    }
    if (pg_max - pg_min < kTol) break;
  }
  p.weights = w.head(d);
  p.bias = w(d);
  return p;
}

double logsumexp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double mixture_log_density(const std::vector<GmmComponent>& mix, const Eigen::VectorXd& z) {
  std::vector<double> terms;
  terms.reserve(mix.size());
  for (const auto& c : mix) terms.push_back(std::log(c.weight) + c.density.log_density(z));
  return logsumexp(terms);
}

std::vector<GmmComponent> fit_mixture(const Eigen::MatrixXd& z, int k_requested, double reg,
                                      std::uint64_t seed, std::uint64_t stream) {
  const Eigen::Index n = z.rows();
  const Eigen::Index d = z.cols();
  const int k = static_cast<int>(std::min<Eigen::Index>(k_requested, n));

  const Eigen::VectorXd class_mean = z.colwise().mean().transpose();
  Eigen::MatrixXd class_cov = scatter(z, class_mean) / static_cast<double>(n);
  const double ridge = reg * class_cov.trace() / static_cast<double>(d);
  if (!(ridge > 0.0)) fail(ErrorKind::Numeric, "GMM class covariance is singular");

  // k-means from k distinct seeded rows.
  Rng rng(seed, stream);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  rng.shuffle(std::span<Eigen::Index>(idx));
  Eigen::MatrixXd centers(k, d);
  for (int c = 0; c < k; ++c) centers.row(c) = z.row(idx[static_cast<std::size_t>(c)]);
  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = HUGE_VAL;
      for (int c = 0; c < k; ++c) {
        const double dist = (z.row(i) - centers.row(c)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    for (int c = 0; c < k; ++c) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
      int count = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (assign[static_cast<std::size_t>(i)] == c) {
          sum += z.row(i).transpose();
          ++count;
        }
      }
      if (count > 0) centers.row(c) = (sum / count).transpose();
    }
    if (!changed) break;
  }

  // Responsibilities from the hard assignment, then EM.
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) resp(i, assign[static_cast<std::size_t>(i)]) = 1.0;

  std::vector<GmmComponent> mix(static_cast<std::size_t>(k));
  double prev_ll = -HUGE_VAL;
  for (int iter = 0; iter < 500; ++iter) {
    // M step
    for (int c = 0; c < k; ++c) {
      auto& comp = mix[static_cast<std::size_t>(c)];
      const double nk = resp.col(c).sum();
      if (nk < 1e-10) {
        comp.weight = 1e-10;
        comp.density.mean = class_mean;
        comp.density.cov = class_cov;
      } else {
        comp.weight = nk / static_cast<double>(n);
        comp.density.mean = (z.transpose() * resp.col(c)) / nk;
        const Eigen::MatrixXd centred = z.rowwise() - comp.density.mean.transpose();
        comp.density.cov = (centred.transpose() * resp.col(c).asDiagonal() * centred) / nk;
      }
      comp.density.cov.diagonal().array() += ridge;
      comp.density.prepare();
    }
    // E step
    double ll = 0.0;
    std::vector<double> terms(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd zi = z.row(i).transpose();
      for (int c = 0; c < k; ++c) {
        const auto& comp = mix[static_cast<std::size_t>(c)];
        terms[static_cast<std::size_t>(c)] = std::log(comp.weight) + comp.density.log_density(zi);
      }
      const double lse = logsumexp(terms);
      ll += lse;
      for (int c = 0; c < k; ++c) resp(i, c) = std::exp(terms[static_cast<std::size_t>(c)] - lse);
    }
    if (std::abs(ll - prev_ll) <= 1e-10 * std::max(1.0, std::abs(ll))) break;
    prev_ll = ll;
  }
  return mix;
}

GmmParams fit_gmm(const ClassSplit& s, const Eigen::MatrixXd& x, const FitOptions& opt) {
  GmmParams p;
  standardizer(x, p.center, p.scale);
  p.pulse = fit_mixture(standardize(s.pulse, p.center, p.scale), opt.gmm_components, opt.reg, opt.seed, 1);
  p.pulseless = fit_mixture(standardize(s.pulseless, p.center, p.scale), opt.gmm_components, opt.reg, opt.seed, 2);
  return p;
}

Eigen::VectorXd standardize_one(const Eigen::VectorXd& x, const Eigen::VectorXd& center,
                                const Eigen::VectorXd& scale) {
  return (x - center).cwiseQuotient(scale);
}

}  // namespace

ClassifierModel fit_classifier(ClassifierKind kind, const Eigen::MatrixXd& features,
                               std::span<const Label> labels, Condition condition,
                               const FitOptions& options) {
  if (features.cols() < 1) fail(ErrorKind::Shape, "classifier features are empty");
  const ClassSplit split = split_classes(features, labels);
  ClassifierModel model;
  model.kind = kind;
  model.condition = condition;
  model.feature_dim = static_cast<int>(features.cols());
  model.reg = options.reg;
  model.seed = options.seed;
  switch (kind) {
    case ClassifierKind::LDA:
      model.params = fit_lda(split, options.reg);
      break;
    case ClassifierKind::QDA:
      model.params = fit_qda(split, options.reg, options.qda_shared_covariance);
      break;
    case ClassifierKind::SVM_linear:
      model.params = fit_svm(features, labels, options);
      break;
    case ClassifierKind::GMM:
      model.params = fit_gmm(split, features, options);
      break;
  }
  return model;
}

double score(const ClassifierModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.feature_dim) {
    fail(ErrorKind::Shape, "feature dimension " + std::to_string(x.size()) + " does not match model (" +
                               std::to_string(model.feature_dim) + ")");
  }
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LdaParams>) {
          return p.weights.dot(x) + p.bias;
        } else if constexpr (std::is_same_v<T, QdaParams>) {
          return p.pulse.log_density(x) + std::log(p.prior_pulse) - p.pulseless.log_density(x) -
                 std::log(p.prior_pulseless);
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          return p.weights.dot(standardize_one(x, p.center, p.scale)) + p.bias;
        } else {
          const Eigen::VectorXd z = standardize_one(x, p.center, p.scale);
          return mixture_log_density(p.pulse, z) - mixture_log_density(p.pulseless, z);
        }
      },
      model.params);
}

Label predict(const ClassifierModel& model, const Eigen::VectorXd& x, double threshold) {
  return score(model, x) > threshold ? Label::Pulse : Label::Pulseless;
}

namespace {

nlohmann::json gaussian_json(const Gaussian& g) {
  return {{"mean", vector_to_json(g.mean)}, {"cov", matrix_to_json(g.cov)}};
}

Gaussian gaussian_from(const nlohmann::json& j) {
  Gaussian g;
  g.mean = vector_from_json(j.at("mean"));
  g.cov = matrix_from_json(j.at("cov"));
  g.prepare();
  return g;
}

nlohmann::json mixture_json(const std::vector<GmmComponent>& mix) {
  auto arr = nlohmann::json::array();
  for (const auto& c : mix) arr.push_back({{"weight", c.weight}, {"gaussian", gaussian_json(c.density)}});
  return arr;
}

std::vector<GmmComponent> mixture_from(const nlohmann::json& j) {
  std::vector<GmmComponent> mix;
  for (const auto& c : j) mix.push_back({c.at("weight").get<double>(), gaussian_from(c.at("gaussian"))});
  return mix;
}

}  // namespace

nlohmann::json to_json(const ClassifierModel& model) {
  nlohmann::json j{{"kind", to_string(model.kind)},
                   {"condition", to_string(model.condition)},
                   {"feature_dim", model.feature_dim},
                   {"reg", model.reg},
                   {"seed", model.seed}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LdaParams>) {
          j["mean_pulse"] = vector_to_json(p.mean_pulse);
          j["mean_pulseless"] = vector_to_json(p.mean_pulseless);
          j["pooled_cov"] = matrix_to_json(p.pooled_cov);
          j["prior_pulse"] = p.prior_pulse;
          j["prior_pulseless"] = p.prior_pulseless;
          j["weights"] = vector_to_json(p.weights);
          j["bias"] = p.bias;
        } else if constexpr (std::is_same_v<T, QdaParams>) {
          j["pulse"] = gaussian_json(p.pulse);
          j["pulseless"] = gaussian_json(p.pulseless);
          j["prior_pulse"] = p.prior_pulse;
          j["prior_pulseless"] = p.prior_pulseless;
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          j["center"] = vector_to_json(p.center);
          j["scale"] = vector_to_json(p.scale);
          j["weights"] = vector_to_json(p.weights);
          j["bias"] = p.bias;
          j["c"] = p.c;
        } else {
          j["center"] = vector_to_json(p.center);
          j["scale"] = vector_to_json(p.scale);
          j["pulse"] = mixture_json(p.pulse);
          j["pulseless"] = mixture_json(p.pulseless);
        }
      },
      model.params);
  return j;
}

ClassifierModel classifier_from_json(const nlohmann::json& j) {
  ClassifierModel m;
  try {
    const auto kind = parse_classifier_kind(j.at("kind").get<std::string>());
    if (!kind) fail(ErrorKind::Parse, "unknown classifier kind");
    const auto cond = parse_condition(j.at("condition").get<std::string>());
    if (!cond) fail(ErrorKind::Parse, "unknown classifier condition");
    m.kind = *kind;
    m.condition = *cond;
    m.feature_dim = j.at("feature_dim").get<int>();
    m.reg = j.at("reg").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    switch (m.kind) {
      case ClassifierKind::LDA: {
        LdaParams p;
        p.mean_pulse = vector_from_json(j.at("mean_pulse"));
        p.mean_pulseless = vector_from_json(j.at("mean_pulseless"));
        p.pooled_cov = matrix_from_json(j.at("pooled_cov"));
        p.prior_pulse = j.at("prior_pulse").get<double>();
        p.prior_pulseless = j.at("prior_pulseless").get<double>();
        p.weights = vector_from_json(j.at("weights"));
        p.bias = j.at("bias").get<double>();
        m.params = std::move(p);
        break;
      }
      case ClassifierKind::QDA: {
        QdaParams p;
        p.pulse = gaussian_from(j.at("pulse"));
        p.pulseless = gaussian_from(j.at("pulseless"));
        p.prior_pulse = j.at("prior_pulse").get<double>();
        p.prior_pulseless = j.at("prior_pulseless").get<double>();
        m.params = std::move(p);
        break;
      }
      case ClassifierKind::SVM_linear: {
        SvmParams p;
        p.center = vector_from_json(j.at("center"));
        p.scale = vector_from_json(j.at("scale"));
        p.weights = vector_from_json(j.at("weights"));
        p.bias = j.at("bias").get<double>();
        p.c = j.at("c").get<double>();
        m.params = std::move(p);
        break;
      }
      case ClassifierKind::GMM: {
        GmmParams p;
        p.center = vector_from_json(j.at("center"));
        p.scale = vector_from_json(j.at("scale"));
        p.pulse = mixture_from(j.at("pulse"));
        p.pulseless = mixture_from(j.at("pulseless"));
        m.params = std::move(p);
        break;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("classifier model: ") + e.what());
  }
  return m;
}

}  // namespace pulse
