#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pulse/config.hpp"
#include "pulse/experiment.hpp"
#include "pulse/filter.hpp"

namespace pulse {

inline constexpr int kBundleVersion = 1;

struct TrainingFingerprint {
  std::string data_source;
  std::uint64_t data_hash = 0;  // FNV-1a of the training file bytes
  std::size_t record_count = 0;
  std::uint64_t config_fingerprint = 0;
  std::vector<std::string> train_patients, test_patients;
};

struct ModelBundle {
  int version = kBundleVersion;
  PipelineConfig config;
  FilterCoefficients filter;
  TrainedPipeline pipeline;
  TrainingFingerprint fingerprint;
};

nlohmann::json to_json(const ModelBundle& b);
// Version mismatch raises Version; malformed content raises Parse.
ModelBundle bundle_from_json(const nlohmann::json& j);

void save_bundle(const ModelBundle& b, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace pulse
