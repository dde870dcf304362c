#include "doctest.h"

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "pulse/classifier.hpp"
#include "pulse/error.hpp"
#include "pulse/roc.hpp"

using namespace pulse;

namespace {

struct Data {
  Eigen::MatrixXd x;
  std::vector<Label> y;
};

// Two isotropic Gaussian classes at +-offset, unit variance.
Data two_blobs(int per_class, const Eigen::Vector3d& offset, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  Data d{Eigen::MatrixXd(2 * per_class, 3), {}};
  for (int i = 0; i < 2 * per_class; ++i) {
    const bool pos = i < per_class;
    for (int j = 0; j < 3; ++j) d.x(i, j) = (pos ? offset(j) : -offset(j)) + sd * n01(gen);
    d.y.push_back(pos ? Label::Pulse : Label::Pulseless);
  }
  return d;
}

using M3 = std::array<std::array<double, 3>, 3>;

double det3(const M3& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

// mean and covariance (divisor n - 1) of the given rows, plus ridge reg*trace/3
struct Moments {
  std::array<double, 3> mean{};
  M3 scatter{};
};

Moments moments(const std::vector<std::array<double, 3>>& rows) {
  Moments m;
  for (const auto& r : rows)
    for (int j = 0; j < 3; ++j) m.mean[j] += r[j] / static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) m.scatter[a][b] += (r[a] - m.mean[a]) * (r[b] - m.mean[b]);
  return m;
}

void ridge(M3& c, double reg) {
  const double t = (c[0][0] + c[1][1] + c[2][2]) / 3.0;
  for (int j = 0; j < 3; ++j) c[j][j] += reg * t;
}

double log_gauss(const std::array<double, 3>& x, const std::array<double, 3>& mu, const M3& cov) {
  std::array<double, 3> d{x[0] - mu[0], x[1] - mu[1], x[2] - mu[2]};
  const auto sol = oracle::cramer3(cov, d);
  const double quad = d[0] * sol[0] + d[1] * sol[1] + d[2] * sol[2];
  return -0.5 * (3 * std::log(2 * oracle::kPi) + std::log(det3(cov)) + quad);
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

std::vector<double> scores_of(const ClassifierModel& m, const Eigen::MatrixXd& x) {
  std::vector<double> s;
  for (Eigen::Index i = 0; i < x.rows(); ++i) s.push_back(score(m, x.row(i).transpose()));
  return s;
}

}  // namespace

TEST_CASE("LDA on symmetric classes: normal along e1, bias near zero") {
  // Pulseless samples mirror the Pulse ones through the origin.
  auto d = two_blobs(100, {1, 0, 0}, 3);
  d.x.bottomRows(100) = -d.x.topRows(100);
  const auto m = fit_classifier(ClassifierKind::LDA, d.x, d.y, Condition::CPR);
  const auto& p = std::get<LdaParams>(m.params);
  CHECK(p.weights.normalized()(0) > 0.97);
  CHECK(std::abs(p.bias) < 0.1);
  CHECK(p.prior_pulse + p.prior_pulseless == doctest::Approx(1.0));
}

TEST_CASE("LDA bias on independent isotropic draws stays within its sampling spread") {
  // b ~ N(0, 0.02) for 100 unit-variance samples per class at +-e1.
  double mean_abs = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto d = two_blobs(100, {1, 0, 0}, 1000 + seed);
    const auto m = fit_classifier(ClassifierKind::LDA, d.x, d.y, Condition::CPR);
    const auto& p = std::get<LdaParams>(m.params);
    CHECK(p.weights.normalized()(0) > 0.95);
    CHECK(std::abs(p.bias) < 3 * std::sqrt(0.02));
    mean_abs += std::abs(p.bias) / 50;
  }
  CHECK(mean_abs < 0.15);
}

TEST_CASE("LDA weights on a fixed 8-point dataset match the closed form") {
  const std::vector<std::array<double, 3>> pos{{1, 2, 0.5}, {2, 1, 1.5}, {1.5, 2.5, 0}, {3, 2, 1}};
  const std::vector<std::array<double, 3>> neg{{-1, 0, 0.2}, {0, -1, 1}, {-0.5, 0.5, -1}, {0.2, -0.3, 0.1}};
  Eigen::MatrixXd x(8, 3);
  std::vector<Label> y;
  for (int i = 0; i < 4; ++i) {
    x.row(i) << pos[i][0], pos[i][1], pos[i][2];
    x.row(i + 4) << neg[i][0], neg[i][1], neg[i][2];
  }
  y.assign(4, Label::Pulse);
  y.insert(y.end(), 4, Label::Pulseless);

  const auto mp = moments(pos), mn = moments(neg);
  M3 pooled{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) pooled[a][b] = (mp.scatter[a][b] + mn.scatter[a][b]) / 6.0;
  ridge(pooled, 1e-4);
  const auto w = oracle::cramer3(pooled, {mp.mean[0] - mn.mean[0], mp.mean[1] - mn.mean[1], mp.mean[2] - mn.mean[2]});
  double b = 0;
  for (int j = 0; j < 3; ++j) b -= 0.5 * w[j] * (mp.mean[j] + mn.mean[j]);

  const auto m = fit_classifier(ClassifierKind::LDA, x, y, Condition::NoCPR);
  const auto& p = std::get<LdaParams>(m.params);
  for (int j = 0; j < 3; ++j) CHECK(p.weights(j) == doctest::Approx(w[j]).epsilon(1e-10));
  CHECK(p.bias == doctest::Approx(b).epsilon(1e-10));

  // midpoint scores zero; score is affine
  const Eigen::VectorXd mid = 0.5 * (p.mean_pulse + p.mean_pulseless);
  CHECK(std::abs(score(m, mid)) < 1e-9);
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    Eigen::Vector3d u(n01(gen), n01(gen), n01(gen)), v(n01(gen), n01(gen), n01(gen));
    CHECK(score(m, u) + score(m, v) == doctest::Approx(score(m, u + v) + p.bias).epsilon(1e-12));
  }
}

TEST_CASE("LDA bias carries the log prior ratio") {
  auto d = two_blobs(30, {1, 1, 0}, 4);
  // drop 10 positives -> priors 20/50, 30/50
  Data u{d.x.bottomRows(50), std::vector<Label>(d.y.begin() + 10, d.y.end())};
  const auto m = fit_classifier(ClassifierKind::LDA, u.x, u.y, Condition::CPR);
  const auto& p = std::get<LdaParams>(m.params);
  CHECK(p.prior_pulse == doctest::Approx(0.4));
  CHECK(p.bias == doctest::Approx(-0.5 * p.weights.dot(p.mean_pulse + p.mean_pulseless) + std::log(0.4 / 0.6)));
}

TEST_CASE("LDA: translation keeps score differences, scaling keeps labels") {
  std::mt19937_64 gen(21);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = two_blobs(20 + trial, {0.5, -0.3, 0.8}, 100 + trial);
    const auto base = fit_classifier(ClassifierKind::LDA, d.x, d.y, Condition::CPR);
    const Eigen::RowVector3d c(n01(gen) * 5, n01(gen) * 5, n01(gen) * 5);
    const Eigen::MatrixXd shifted = d.x.rowwise() + c;
    const auto moved = fit_classifier(ClassifierKind::LDA, shifted, d.y, Condition::CPR);
    const auto s0 = scores_of(base, d.x), s1 = scores_of(moved, shifted);
    for (std::size_t i = 1; i < s0.size(); ++i) CHECK(s1[i] - s1[0] == doctest::Approx(s0[i] - s0[0]).epsilon(1e-6));

    const double alpha = std::exp(n01(gen));
    const Eigen::MatrixXd scaled = alpha * d.x;
    const auto sc = fit_classifier(ClassifierKind::LDA, scaled, d.y, Condition::CPR);
    for (Eigen::Index i = 0; i < d.x.rows(); ++i)
      CHECK(predict(sc, scaled.row(i).transpose()) == predict(base, d.x.row(i).transpose()));
  }
}

TEST_CASE("QDA score equals the hand-computed Gaussian log-density difference") {
  const std::vector<std::array<double, 3>> pos{{1, 0, 0}, {2, 1, 0.5}};
  const std::vector<std::array<double, 3>> neg{{-1, 0.5, 0}, {0, -1, 1}};
  Eigen::MatrixXd x(4, 3);
  x << 1, 0, 0, 2, 1, 0.5, -1, 0.5, 0, 0, -1, 1;
  const std::vector<Label> y{Label::Pulse, Label::Pulse, Label::Pulseless, Label::Pulseless};
  FitOptions opt;
  opt.reg = 0.5;
  const auto m = fit_classifier(ClassifierKind::QDA, x, y, Condition::CPR, opt);

  auto mp = moments(pos), mn = moments(neg);
  for (auto* mm : {&mp, &mn}) ridge(mm->scatter, 0.5);  // divisor n - 1 == 1
  for (const std::array<double, 3> q : {std::array<double, 3>{0, 0, 0}, {1.5, 0.2, -0.3}, {-2, 3, 1}}) {
    const double ref = log_gauss(q, mp.mean, mp.scatter) - log_gauss(q, mn.mean, mn.scatter);
    CHECK(score(m, Eigen::Vector3d(q[0], q[1], q[2])) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("QDA with a shared covariance makes LDA's decisions") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = two_blobs(15, {0.7, 0.2, -0.4}, 40 + trial);
    FitOptions shared;
    shared.qda_shared_covariance = true;
    const auto q = fit_classifier(ClassifierKind::QDA, d.x, d.y, Condition::CPR, shared);
    const auto l = fit_classifier(ClassifierKind::LDA, d.x, d.y, Condition::CPR);
    for (int t = 0; t < 50; ++t) {
      const Eigen::Vector3d v(2 * n01(gen), 2 * n01(gen), 2 * n01(gen));
      CHECK(score(q, v) == doctest::Approx(score(l, v)).epsilon(1e-8));
      CHECK(predict(q, v) == predict(l, v));
    }
  }
}

TEST_CASE("linear SVM reaches a minimum of its primal objective") {
  const auto d = two_blobs(40, {0.8, 0.4, 0}, 9);
  const auto m = fit_classifier(ClassifierKind::SVM_linear, d.x, d.y, Condition::CPR);
  const auto& p = std::get<SvmParams>(m.params);
  CHECK(p.c == 1.0);
  // primal over the standardized, bias-augmented features
  const Eigen::MatrixXd z = (d.x.rowwise() - p.center.transpose()).array().rowwise() / p.scale.transpose().array();
  auto primal = [&](const Eigen::Vector3d& w, double b) {
    double obj = 0.5 * (w.squaredNorm() + b * b);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double y = d.y[static_cast<std::size_t>(i)] == Label::Pulse ? 1 : -1;
      obj += std::max(0.0, 1 - y * (w.dot(z.row(i).transpose()) + b));
    }
    return obj;
  };
  const double best = primal(p.weights, p.bias);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Vector3d dw(n01(gen), n01(gen), n01(gen));
    const double eps = 1e-2 * std::exp(-0.02 * t);
    CHECK(primal(p.weights + eps * dw, p.bias + eps * n01(gen)) >= best - 1e-5);
  }
  // more Pulse-like scores are larger
  CHECK(auc(scores_of(m, d.x), d.y) > 0.8);
  const auto again = fit_classifier(ClassifierKind::SVM_linear, d.x, d.y, Condition::CPR);
  CHECK(std::get<SvmParams>(again.params).weights == p.weights);
}

TEST_CASE("GMM is deterministic for a fixed seed") {
  const auto d = two_blobs(12, {1, 0, 0.5}, 13);
  FitOptions opt;
  opt.seed = 99;
  const auto a = fit_classifier(ClassifierKind::GMM, d.x, d.y, Condition::NoCPR, opt);
  const auto b = fit_classifier(ClassifierKind::GMM, d.x, d.y, Condition::NoCPR, opt);
  CHECK(to_json(a).dump() == to_json(b).dump());
  const auto& p = std::get<GmmParams>(a.params);
  CHECK(p.pulse.size() == 2);
  CHECK(p.pulseless.size() == 2);
  double w = 0;
  for (const auto& c : p.pulse) w += c.weight;
  CHECK(w == doctest::Approx(1.0));
  CHECK(auc(scores_of(a, d.x), d.y) > 0.8);
}

TEST_CASE("fit and score errors") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 3);
  const std::vector<Label> one(6, Label::Pulse);
  for (auto k : kClassifierKinds) CHECK(kind_of([&] { fit_classifier(k, x, one, Condition::CPR); }) == ErrorKind::Fit);
  std::vector<Label> lonely(6, Label::Pulse);
  lonely[0] = Label::Pulseless;
  CHECK(kind_of([&] { fit_classifier(ClassifierKind::LDA, x, lonely, Condition::CPR); }) == ErrorKind::Fit);
  const std::vector<Label> y{Label::Pulse, Label::Pulse, Label::Pulse, Label::Pulseless, Label::Pulseless, Label::Pulseless};
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(6, 3);
  CHECK(kind_of([&] { fit_classifier(ClassifierKind::LDA, zero, y, Condition::CPR); }) == ErrorKind::Numeric);
  const auto m = fit_classifier(ClassifierKind::LDA, x, y, Condition::CPR);
  CHECK(kind_of([&] { score(m, Eigen::Vector4d::Zero()); }) == ErrorKind::Shape);
  x(1, 1) = std::nan("");
  CHECK(kind_of([&] { fit_classifier(ClassifierKind::LDA, x, y, Condition::CPR); }) == ErrorKind::Validation);
}

TEST_CASE("predict thresholds and Youden accuracy on separable data") {
  const auto d = two_blobs(25, {4, 0, 0}, 17, 0.5);
  const auto m = fit_classifier(ClassifierKind::LDA, d.x, d.y, Condition::CPR);
  const auto s = scores_of(m, d.x);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Eigen::VectorXd xi = d.x.row(static_cast<Eigen::Index>(i)).transpose();
    CHECK(predict(m, xi, s[i] - 1e-9) == Label::Pulse);
    CHECK(predict(m, xi, s[i]) == Label::Pulseless);
    CHECK(predict(m, xi, HUGE_VAL) == Label::Pulseless);
  }
  const double t = youden_threshold(roc_curve(s, d.y));
  for (std::size_t i = 0; i < s.size(); ++i)
    CHECK(predict(m, d.x.row(static_cast<Eigen::Index>(i)).transpose(), t) == d.y[i]);
}

TEST_CASE("model JSON round trip preserves scores") {
  const auto d = two_blobs(20, {0.6, 0.6, -0.2}, 8);
  const Eigen::MatrixXd x4 = [&] {
    Eigen::MatrixXd m(d.x.rows(), 4);
    m << d.x, Eigen::VectorXd::LinSpaced(d.x.rows(), 60, 120);
    return m;
  }();
  for (auto k : kClassifierKinds) {
    for (const Eigen::MatrixXd* x : {&d.x, &x4}) {
      const auto m = fit_classifier(k, *x, d.y, Condition::NoCPR);
      const auto back = classifier_from_json(nlohmann::json::parse(to_json(m).dump()));
      CHECK(back.kind == k);
      CHECK(back.feature_dim == x->cols());
      CHECK(back.condition == Condition::NoCPR);
      const auto a = scores_of(m, *x), b = scores_of(back, *x);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
    }
  }
  CHECK(parse_classifier_kind("SVM") == ClassifierKind::SVM_linear);
  CHECK_FALSE(parse_classifier_kind("NN").has_value());
}
