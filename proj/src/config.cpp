#include "pulse/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pulse/error.hpp"
#include "pulse/hash.hpp"

namespace pulse {

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

std::string_view to_string(Normalization n) { return n == Normalization::UnitEnergy ? "unit_energy" : "none"; }

Normalization parse_normalization(const std::string& s) {
  if (s == "unit_energy") return Normalization::UnitEnergy;
  if (s == "none") return Normalization::None;
  fail(ErrorKind::Config, "unknown normalization '" + s + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

nlohmann::json parse_scalar(std::string_view v) {
  // Numbers, booleans and quoted strings parse as JSON; anything else is a bare string.
  try {
    return nlohmann::json::parse(v);
  } catch (const nlohmann::json::parse_error&) {
    return std::string(v);
  }
}

nlohmann::json parse_key_values(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = trim(line);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = trim(s.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']') {
      section = std::string(trim(s.substr(1, s.size() - 2)));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::Config, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key(trim(s.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    std::string pointer = "/";
    for (char c : key) pointer += c == '.' ? '/' : c;
    root[nlohmann::json::json_pointer(pointer)] = parse_scalar(trim(s.substr(eq + 1)));
  }
  return root;
}

}  // namespace

void validate_config(const PipelineConfig& c) {
  validate_wavelet_params(c.wavelet);
  if (c.filter.order <= 0 || c.filter.order % 2) fail(ErrorKind::Config, "filter order must be positive and even");
  if (c.grid_rows < 2 || c.grid_cols < 2) fail(ErrorKind::Config, "vectorization grid must be at least 2 x 2");
  if (!(c.pca_cutoff >= 0.0 && c.pca_cutoff < 1.0)) fail(ErrorKind::Config, "pca_cutoff must lie in [0, 1)");
  if (c.reg < 0.0) fail(ErrorKind::Config, "reg must be non-negative");
  if (c.bootstrap_resamples < 100) fail(ErrorKind::Config, "bootstrap_resamples must be at least 100");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail(ErrorKind::Config, "alpha must lie in (0, 1)");
  if (c.cap_per_label == 0) fail(ErrorKind::Config, "cap_per_label must be positive");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) fail(ErrorKind::Config, "train_fraction must lie in (0, 1)");
  if (c.cv_folds < 2) fail(ErrorKind::Config, "cv_folds must be at least 2");
  if (c.gmm_components < 1) fail(ErrorKind::Config, "gmm_components must be positive");
  if (!(c.svm_c > 0.0)) fail(ErrorKind::Config, "svm_c must be positive");
}

nlohmann::json to_json(const PipelineConfig& c) {
  return {
      {"filter", {{"order", c.filter.order}, {"low_hz", c.filter.low_hz}, {"high_hz", c.filter.high_hz}, {"fs", c.filter.fs}}},
      {"wavelet",
       {{"mu", c.wavelet.mu},
        {"sigma", c.wavelet.sigma},
        {"voices_per_octave", c.wavelet.voices_per_octave},
        {"f_min", c.wavelet.f_min},
        {"f_max", c.wavelet.f_max}}},
      {"grid_rows", c.grid_rows},
      {"grid_cols", c.grid_cols},
      {"normalization", to_string(c.normalization)},
      {"exclude_edges", c.exclude_edges},
      {"pca_cutoff", c.pca_cutoff},
      {"heart_rate",
       {{"threshold_fraction", c.heart_rate.threshold_fraction},
        {"percentile", c.heart_rate.percentile},
        {"refractory_s", c.heart_rate.refractory_s},
        {"min_bpm", c.heart_rate.min_bpm},
        {"max_bpm", c.heart_rate.max_bpm}}},
      {"classifier", to_string(c.classifier)},
      {"reg", c.reg},
      {"svm_c", c.svm_c},
      {"gmm_components", c.gmm_components},
      {"model_seed", c.model_seed},
      {"bootstrap_resamples", c.bootstrap_resamples},
      {"alpha", c.alpha},
      {"bootstrap_seed", c.bootstrap_seed},
      {"cap_per_label", c.cap_per_label},
      {"cap_seed", c.cap_seed},
      {"train_fraction", c.train_fraction},
      {"split_seed", c.split_seed},
      {"cv_folds", c.cv_folds},
      {"cv_seed", c.cv_seed},
      {"synth", to_json(c.synth)},
  };
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c) {
  if (!j.is_object()) fail(ErrorKind::Config, "config must be an object");
  try {
    if (auto it = j.find("filter"); it != j.end()) {
      read_opt(*it, "order", c.filter.order);
      read_opt(*it, "low_hz", c.filter.low_hz);
      read_opt(*it, "high_hz", c.filter.high_hz);
      read_opt(*it, "fs", c.filter.fs);
    }
    if (auto it = j.find("wavelet"); it != j.end()) {
      read_opt(*it, "mu", c.wavelet.mu);
      read_opt(*it, "sigma", c.wavelet.sigma);
      read_opt(*it, "voices_per_octave", c.wavelet.voices_per_octave);
      read_opt(*it, "f_min", c.wavelet.f_min);
      read_opt(*it, "f_max", c.wavelet.f_max);
    }
    read_opt(j, "grid_rows", c.grid_rows);
    read_opt(j, "grid_cols", c.grid_cols);
    if (auto it = j.find("normalization"); it != j.end()) c.normalization = parse_normalization(it->get<std::string>());
    read_opt(j, "exclude_edges", c.exclude_edges);
    read_opt(j, "pca_cutoff", c.pca_cutoff);
    if (auto it = j.find("heart_rate"); it != j.end()) {
      read_opt(*it, "threshold_fraction", c.heart_rate.threshold_fraction);
      read_opt(*it, "percentile", c.heart_rate.percentile);
      read_opt(*it, "refractory_s", c.heart_rate.refractory_s);
      read_opt(*it, "min_bpm", c.heart_rate.min_bpm);
      read_opt(*it, "max_bpm", c.heart_rate.max_bpm);
    }
    if (auto it = j.find("classifier"); it != j.end()) {
      const auto kind = parse_classifier_kind(it->get<std::string>());
      if (!kind) fail(ErrorKind::Config, "unknown classifier '" + it->get<std::string>() + "'");
      c.classifier = *kind;
    }
    read_opt(j, "reg", c.reg);
    read_opt(j, "svm_c", c.svm_c);
    read_opt(j, "gmm_components", c.gmm_components);
    read_opt(j, "model_seed", c.model_seed);
    read_opt(j, "bootstrap_resamples", c.bootstrap_resamples);
    read_opt(j, "alpha", c.alpha);
    read_opt(j, "bootstrap_seed", c.bootstrap_seed);
    read_opt(j, "cap_per_label", c.cap_per_label);
    read_opt(j, "cap_seed", c.cap_seed);
    read_opt(j, "train_fraction", c.train_fraction);
    read_opt(j, "split_seed", c.split_seed);
    read_opt(j, "cv_folds", c.cv_folds);
    read_opt(j, "cv_seed", c.cv_seed);
    if (auto it = j.find("synth"); it != j.end()) c.synth = synth_spec_from_json(*it, c.synth);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  nlohmann::json j;
  if (first != std::string::npos && text[first] == '{') {
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::Config, "config '" + path.string() + "': " + e.what());
    }
  } else {
    j = parse_key_values(text);
  }
  PipelineConfig c = config_from_json(j, base);
  validate_config(c);
  return c;
}

std::uint64_t config_fingerprint(const PipelineConfig& c) { return fnv1a(to_json(c).dump()); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace pulse
