#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"
#include "pulse/classifier.hpp"
#include "pulse/features.hpp"
#include "pulse/filter.hpp"
#include "pulse/synth.hpp"
#include "pulse/wavelet.hpp"

namespace pulse {

struct PipelineConfig {
  FilterSpec filter = kPreprocessFilter;
  WaveletParams wavelet;
  int grid_rows = 54;
  int grid_cols = 100;
  Normalization normalization = Normalization::UnitEnergy;
  bool exclude_edges = true;  // drop the flagged edge columns before vectorizing
  double pca_cutoff = 0.01;
  HeartRateOptions heart_rate;

  ClassifierKind classifier = ClassifierKind::LDA;
  double reg = 1e-4;
  double svm_c = 1.0;
  int gmm_components = 2;
  std::uint64_t model_seed = 7;

  int bootstrap_resamples = 1000;
  double alpha = 0.05;
  std::uint64_t bootstrap_seed = 7;

  std::size_t cap_per_label = 3;
  std::uint64_t cap_seed = 7;
  double train_fraction = 0.6;
  std::uint64_t split_seed = 7;
  int cv_folds = 5;
  std::uint64_t cv_seed = 7;

  SynthSpec synth;
};

// Throws Config on out-of-range knobs.
void validate_config(const PipelineConfig& c);

nlohmann::json to_json(const PipelineConfig& c);
// Fields absent from `j` keep the value from `base`.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});

/// Reads a JSON object, or "key = value" lines with dotted keys
/// (e.g. "wavelet.mu = 5"), '#' comments and TOML-style [section] headers.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

// FNV-1a of the canonical JSON dump.
std::uint64_t config_fingerprint(const PipelineConfig& c);

std::string hex64(std::uint64_t v);

}  // namespace pulse
