// pulsecheck: synth | train | eval | classify | roc-plot
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pulse/commands.hpp"
#include "pulse/error.hpp"

namespace {

pulse::PipelineConfig make_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
  pulse::PipelineConfig c;
  if (!path.empty()) c = pulse::load_config(path);
  if (seed) pulse::apply_seed(c, *seed);
  pulse::validate_config(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ECG pulse-status classification pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON or key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "seed applied to every seeded stage");

  std::string out;
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  synth->add_option("--out", out, "output directory")->required();

  pulse::TrainOptions train_opts;
  std::string report, holdout, data;
  bool no_cv = false;
  auto* train = app.add_subcommand("train", "fit per-condition models and write a bundle");
  train->add_option("--data", data, "segments (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "model bundle path")->required();
  train->add_option("--report", report, "training report JSON");
  train->add_option("--holdout-out", holdout, "write held-out patients' segments as JSONL");
  train->add_flag("--no-cv", no_cv, "skip the cross-validation grid");

  std::string model, format = "table";
  auto* eval = app.add_subcommand("eval", "score a labeled dataset and report AUC");
  eval->add_option("--model", model)->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data)->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "prefix for .json, .txt and .roc.csv outputs");
  eval->add_option("--format", format, "stdout format")->check(CLI::IsMember({"json", "table", "csv"}));

  std::optional<double> threshold;
  auto* classify = app.add_subcommand("classify", "label JSONL segments from stdin");
  classify->add_option("--model", model)->required()->check(CLI::ExistingFile);
  classify->add_option("--threshold", threshold, "score cutoff (default: stored Youden point)");

  std::string scalogram;
  std::size_t record = 0;
  auto* roc = app.add_subcommand("roc-plot", "export ROC points and an optional scalogram");
  roc->add_option("--model", model)->required()->check(CLI::ExistingFile);
  roc->add_option("--data", data)->required()->check(CLI::ExistingFile);
  roc->add_option("--out", out, "ROC CSV path")->required();
  roc->add_option("--scalogram", scalogram, "scalogram text export path");
  roc->add_option("--record", record, "0-based record for the scalogram export");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      return pulse::cmd_synth(make_config(config_path, seed), {out}, std::cout, std::cerr);
    }
    if (*train) {
      train_opts.data = data;
      train_opts.model_out = out;
      if (!report.empty()) train_opts.report_out = report;
      if (!holdout.empty()) train_opts.holdout_out = holdout;
      train_opts.cross_validation = !no_cv;
      return pulse::cmd_train(make_config(config_path, seed), train_opts, std::cout, std::cerr);
    }
    if (*eval) {
      pulse::EvalOptions o{model, data, {}, pulse::ReportFormat::Table};
      if (!out.empty()) o.out_prefix = out;
      if (format == "json") o.format = pulse::ReportFormat::Json;
      if (format == "csv") o.format = pulse::ReportFormat::Csv;
      return pulse::cmd_eval(o, std::cout, std::cerr);
    }
    if (*classify) {
      std::ios::sync_with_stdio(false);
      return pulse::cmd_classify({model, threshold}, std::cin, std::cout, std::cerr);
    }
    if (*roc) {
      pulse::RocPlotOptions o{model, data, out, {}, record};
      if (!scalogram.empty()) o.scalogram_out = scalogram;
      return pulse::cmd_roc_plot(o, std::cout, std::cerr);
    }
  } catch (const pulse::Error& e) {
    std::cerr << "error: " << pulse::to_string(e.kind()) << ": " << e.what() << "\n";
    return pulse::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
