#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "pulse/config.hpp"

namespace pulse {

enum class ReportFormat { Json, Table, Csv };

// Applies --seed to every seeded stage.
void apply_seed(PipelineConfig& config, std::uint64_t seed);

struct SynthOptions {
  std::filesystem::path out_dir;
};
// corpus.jsonl, truth.json, manifest.json
int cmd_synth(const PipelineConfig& config, const SynthOptions& opts, std::ostream& out, std::ostream& err);

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path model_out;
  std::optional<std::filesystem::path> report_out;   // JSON: CV grid + holdout report
  std::optional<std::filesystem::path> holdout_out;  // held-out patients as JSONL
  bool cross_validation = true;
};
int cmd_train(const PipelineConfig& config, const TrainOptions& opts, std::ostream& out, std::ostream& err);

struct EvalOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::optional<std::filesystem::path> out_prefix;  // <prefix>.json, .txt, .roc.csv
  ReportFormat format = ReportFormat::Table;
};
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);

struct ClassifyOptions {
  std::filesystem::path model;
  std::optional<double> threshold;
};
// One JSONL segment per input line; "check_id condition score label" per output line.
// Returns 1 if any line failed, 0 otherwise.
int cmd_classify(const ClassifyOptions& opts, std::istream& in, std::ostream& out, std::ostream& err);

struct RocPlotOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::filesystem::path out;  // ROC CSV
  std::optional<std::filesystem::path> scalogram_out;
  std::size_t scalogram_record = 0;  // 0-based record index for the scalogram export
};
int cmd_roc_plot(const RocPlotOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace pulse
