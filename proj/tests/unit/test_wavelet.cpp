#include "doctest.h"

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "pulse/error.hpp"
#include "pulse/wavelet.hpp"

using namespace pulse;

namespace {

const WaveletParams kDefault{};

std::vector<double> white(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  std::vector<double> x(n);
  for (auto& v : x) v = n01(gen);
  return x;
}

std::vector<double> cosine(double f, double fs, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::cos(2 * oracle::kPi * f * i / fs + phase);
  return x;
}

// argmax over scales of the time-averaged energy, interior columns only
std::size_t ridge_row(const Scalogram& s) {
  std::size_t best = 0;
  double best_v = -1;
  for (Eigen::Index r = 0; r < s.energy.rows(); ++r) {
    double acc = 0;
    for (Eigen::Index c = 0; c < s.energy.cols(); ++c)
      if (!s.edge_columns[static_cast<std::size_t>(c)]) acc += s.energy(r, c);
    if (acc > best_v) best_v = acc, best = static_cast<std::size_t>(r);
  }
  return best;
}

}  // namespace

TEST_CASE("bump_hat spot values") {
  const double a = 3.7;
  CHECK(bump_hat(kDefault.mu / a, a, kDefault) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(bump_hat((kDefault.mu + kDefault.sigma) / a, a, kDefault) == 0.0);
  CHECK(bump_hat((kDefault.mu - kDefault.sigma) / a, a, kDefault) == 0.0);
  CHECK(std::abs(bump_hat((kDefault.mu + kDefault.sigma / 2) / a, a, kDefault) - std::exp(-1.0 / 3.0)) < 1e-9);
  CHECK(std::abs(std::exp(-1.0 / 3.0) - 0.716531) < 1e-6);
}

TEST_CASE("bump_hat is bounded by 1 and vanishes off its support") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> ua(0.5, 200.0), uw(0.0, oracle::kPi);
  for (int i = 0; i < 5000; ++i) {
    const double a = ua(gen), w = uw(gen);
    const double v = bump_hat(w, a, kDefault);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    if (std::abs(a * w - kDefault.mu) >= kDefault.sigma) CHECK(v == 0.0);
    else CHECK(v > 0.0);
  }
}

TEST_CASE("scale grid over 1-40 Hz") {
  const auto g = build_scale_grid(kDefault, 250);
  REQUIRE(g.scales.size() == 54);
  CHECK(g.freqs.front() == doctest::Approx(40.0));
  CHECK(g.freqs.back() >= 1.0);
  CHECK(g.freqs.back() < 1.0 * std::exp2(0.1));
  for (std::size_t j = 1; j < g.freqs.size(); ++j) {
    CHECK(g.freqs[j] < g.freqs[j - 1]);
    CHECK(g.freqs[j - 1] / g.freqs[j] == doctest::Approx(std::exp2(0.1)));
    CHECK(g.scales[j] > g.scales[j - 1]);
  }
  for (std::size_t j = 0; j < g.freqs.size(); ++j)
    CHECK(kDefault.mu * 250 / (2 * oracle::kPi * g.scales[j]) == doctest::Approx(g.freqs[j]));
  CHECK(scale_for_frequency(10, 250, kDefault) == doctest::Approx(19.894).epsilon(1e-4));
}

TEST_CASE("one-voice grid over one octave") {
  WaveletParams p;
  p.voices_per_octave = 1;
  p.f_min = 5;
  p.f_max = 10;
  const auto g = build_scale_grid(p, 250);
  REQUIRE(g.freqs.size() == 2);
  CHECK(g.freqs[0] == doctest::Approx(10).epsilon(0.01));
  CHECK(g.freqs[1] == doctest::Approx(5).epsilon(0.01));
}

TEST_CASE("grid and parameter errors") {
  WaveletParams p;
  p.f_min = 40;
  p.f_max = 40;
  CHECK_THROWS_AS(build_scale_grid(p, 250), Error);
  try {
    build_scale_grid(p, 250);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  WaveletParams v;
  v.voices_per_octave = 3;
  CHECK_THROWS_AS(validate_wavelet_params(v), Error);
  WaveletParams s;
  s.sigma = 6;
  CHECK_THROWS_AS(validate_wavelet_params(s), Error);
  WaveletParams hi;
  hi.f_max = 45;
  CHECK_THROWS_AS(validate_wavelet_params(hi), Error);
  WaveletParams lo;
  lo.f_min = 0.5;
  CHECK_THROWS_AS(validate_wavelet_params(lo), Error);
  CHECK_NOTHROW(validate_wavelet_params(kDefault));
}

TEST_CASE("cwt of zero is zero; short input and empty grid are refused") {
  const std::vector<double> z(1250, 0.0);
  const auto W = cwt(z, 250, kDefault);
  CHECK(W.rows() == 54);
  CHECK(W.cols() == 1250);
  CHECK(W.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(cwt(std::vector<double>(499, 1.0), 250, kDefault), Error);
  CHECK_THROWS_AS(cwt(z, 250, ScaleGrid{}, kDefault), Error);
}

TEST_CASE("frequency-domain cwt matches direct quadrature of the transform integral") {
  const double fs = 250;
  const auto grid = build_scale_grid(kDefault, fs);
  std::mt19937_64 gen(17);
  std::map<std::size_t, oracle::CwtQuadrature> cache;
  double worst = 0;
  for (int signal = 0; signal < 5; ++signal) {
    const auto x = white(1250, 100 + signal);
    const auto W = cwt(x, fs, grid, kDefault);
    for (int probe = 0; probe < 10; ++probe) {
      const auto j = static_cast<std::size_t>(gen() % grid.scales.size());
      const auto k = static_cast<std::size_t>(gen() % x.size());
      auto it = cache.find(j);
      if (it == cache.end())
        it = cache.emplace(j, oracle::CwtQuadrature(x.size(), grid.scales[j], kDefault.mu, kDefault.sigma)).first;
      const auto ref = it->second.at(x, k);
      const double rel = std::abs(W(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) - ref) / std::abs(ref);
      worst = std::max(worst, rel);
      CHECK(rel < 1e-3);
    }
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("10 Hz cosine ridge sits on the nearest-frequency row at every interior column") {
  const double fs = 250;
  const auto grid = build_scale_grid(kDefault, fs);
  const auto x = cosine(10, fs, 2500);
  const auto W = cwt(x, fs, grid, kDefault);
  const auto s = scalogram_energy(W, grid, fs);
  std::size_t nearest = 0;
  for (std::size_t j = 0; j < grid.freqs.size(); ++j)
    if (std::abs(std::log(grid.freqs[j] / 10)) < std::abs(std::log(grid.freqs[nearest] / 10))) nearest = j;
  for (Eigen::Index c = 0; c < s.energy.cols(); ++c) {
    if (s.edge_columns[static_cast<std::size_t>(c)]) continue;
    Eigen::Index arg;
    s.energy.col(c).maxCoeff(&arg);
    CHECK(static_cast<std::size_t>(arg) == nearest);
  }
  const oracle::CwtQuadrature q(x.size(), grid.scales[nearest], kDefault.mu, kDefault.sigma);
  for (std::size_t k : {600u, 1250u, 1900u}) {
    const auto ref = q.at(x, k);
    CHECK(std::abs(W(static_cast<Eigen::Index>(nearest), static_cast<Eigen::Index>(k)) - ref) / std::abs(ref) < 1e-3);
  }
}

TEST_CASE("two tones give two ridge rows") {
  const double fs = 250;
  const auto grid = build_scale_grid(kDefault, fs);
  auto x = cosine(5, fs, 2500);
  const auto y = cosine(20, fs, 2500);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += y[i];
  const auto s = scalogram_energy(cwt(x, fs, grid, kDefault), grid, fs);
  std::vector<double> profile(grid.freqs.size());
  for (std::size_t r = 0; r < profile.size(); ++r) profile[r] = s.energy.row(static_cast<Eigen::Index>(r)).mean();
  auto nearest = [&](double f) {
    std::size_t n = 0;
    for (std::size_t j = 0; j < grid.freqs.size(); ++j)
      if (std::abs(std::log(grid.freqs[j] / f)) < std::abs(std::log(grid.freqs[n] / f))) n = j;
    return n;
  };
  const auto r5 = nearest(5), r20 = nearest(20);
  // Each is a local maximum of the profile and they dominate everything else.
  for (auto r : {r5, r20}) {
    CHECK(profile[r] > profile[r - 1]);
    CHECK(profile[r] > profile[r + 1]);
  }
  for (std::size_t j = 0; j < profile.size(); ++j) {
    if (std::abs(static_cast<long>(j) - static_cast<long>(r5)) > 3 && std::abs(static_cast<long>(j) - static_cast<long>(r20)) > 3)
      CHECK(profile[j] < 0.1 * std::min(profile[r5], profile[r20]));
  }
}

TEST_CASE("pure-tone ridge within one voice across 2-35 Hz") {
  const double fs = 250;
  const auto grid = build_scale_grid(kDefault, fs);
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> uf(2.0, 35.0), up(0, 2 * oracle::kPi);
  for (int t = 0; t < 20; ++t) {
    const double f0 = uf(gen);
    const auto s = scalogram_energy(cwt(cosine(f0, fs, 2500, 1.0, up(gen)), fs, grid, kDefault), grid, fs);
    const double f = grid.freqs[ridge_row(s)];
    CHECK(std::abs(std::log2(f / f0)) * kDefault.voices_per_octave <= 1.0);
  }
}

TEST_CASE("cwt is linear") {
  const auto x = white(1250, 1), y = white(1250, 2);
  std::vector<double> z(x.size());
  const double a = 0.3, b = -2.5;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto Wx = cwt(x, 250, kDefault), Wy = cwt(y, 250, kDefault), Wz = cwt(z, 250, kDefault);
  const Eigen::MatrixXcd combo = a * Wx + b * Wy;
  CHECK((Wz - combo).norm() / Wz.norm() < 1e-9);
}

TEST_CASE("scalogram energy") {
  ScaleGrid g{{1.0}, {10.0}};
  Eigen::MatrixXcd W(1, 1);
  W(0, 0) = {3, 4};
  CHECK(scalogram_energy(W, g, 250).energy(0, 0) == 25.0);
  CHECK(scalogram_energy(Eigen::MatrixXcd::Zero(1, 4), g, 250).energy.maxCoeff() == 0.0);

  const auto grid = build_scale_grid(kDefault, 250);
  auto x = white(1250, 9);
  const auto e1 = scalogram_energy(cwt(x, 250, grid, kDefault), grid, 250).energy;
  for (auto& v : x) v *= 2.5;
  const auto e2 = scalogram_energy(cwt(x, 250, grid, kDefault), grid, 250).energy;
  CHECK((e2 - 6.25 * e1).matrix().norm() / e2.matrix().norm() < 1e-12);

  const auto s = scalogram_energy(cwt(x, 250, grid, kDefault), grid, 250);
  CHECK(s.times.size() == 1250);
  CHECK(s.times[250] == doctest::Approx(1.0));
  CHECK(s.edge_columns[0]);
  CHECK(s.edge_columns[124]);
  CHECK_FALSE(s.edge_columns[125]);
  CHECK_FALSE(s.edge_columns[1124]);
  CHECK(s.edge_columns[1125]);
  CHECK(s.edge_columns[1249]);
}

TEST_CASE("vectorize: identity grid, constant input, degenerate grid") {
  Scalogram s;
  s.energy = Eigen::ArrayXXd::Zero(3, 4);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) s.energy(r, c) = 1.0 + r * 10 + c * 0.37;
  const auto v = vectorize_scalogram(s, 3, 4, Normalization::None);
  REQUIRE(v.size() == 12);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) CHECK(v(r * 4 + c) == s.energy(r, c));

  Scalogram k;
  k.energy = Eigen::ArrayXXd::Constant(54, 1250, 4.2);
  const auto u = vectorize_scalogram(k, 54, 100, Normalization::UnitEnergy);
  REQUIRE(u.size() == 5400);
  for (Eigen::Index i = 0; i < u.size(); ++i) CHECK(u(i) == doctest::Approx(1.0 / 5400).epsilon(1e-12));

  CHECK_THROWS_AS(vectorize_scalogram(k, 1, 100, Normalization::None), Error);
  CHECK_THROWS_AS(vectorize_scalogram(k, 54, 1, Normalization::None), Error);
}

TEST_CASE("vectorize 54x2500 to 54x100 keeps column means of smooth inputs") {
  Scalogram s;
  s.energy.resize(54, 2500);
  for (int r = 0; r < 54; ++r)
    for (int c = 0; c < 2500; ++c)
      s.energy(r, c) = 2.0 + std::sin(2 * oracle::kPi * c / 2500.0 * 1.5 + r * 0.1) + 0.5 * std::cos(r * 0.2);
  const auto v = vectorize_scalogram(s, 54, 100, Normalization::None);
  REQUIRE(v.size() == 5400);
  // Block-average oracle: output column c summarizes the 25 input columns nearest its centre.
  for (int c = 0; c < 100; ++c) {
    const double centre = c * 2499.0 / 99.0;
    const int lo = std::max(0, static_cast<int>(std::lround(centre - 12))), hi = std::min(2499, lo + 24);
    double block = 0, got = 0;
    for (int r = 0; r < 54; ++r) {
      for (int k = lo; k <= hi; ++k) block += s.energy(r, k);
      got += v(r * 100 + c);
    }
    block /= (hi - lo + 1);
    CHECK(got == doctest::Approx(block).epsilon(0.02));
  }
}

TEST_CASE("scalogram text export") {
  Scalogram s;
  s.energy = Eigen::ArrayXXd::Constant(2, 3, 0.5);
  s.freqs = {20, 10};
  s.scales = {1, 2};
  s.times = {0, 0.004, 0.008};
  s.edge_columns = {true, false, true};
  std::ostringstream out;
  write_scalogram_text(out, s);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# scalogram rows=2 cols=3");
  std::getline(in, line);
  CHECK(line.rfind("freqs_hz 20 10", 0) == 0);
  std::getline(in, line);
  CHECK(line.rfind("times_s 0 0.004", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) rows += !line.empty();
  CHECK(rows == 2);
}
