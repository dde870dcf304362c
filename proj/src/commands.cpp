#include "pulse/commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pulse/bundle.hpp"
#include "pulse/error.hpp"
#include "pulse/experiment.hpp"
#include "pulse/hash.hpp"
#include "pulse/signal_io.hpp"
#include "pulse/synth.hpp"

namespace pulse {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return f;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  if (!f) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix) {
  return prefix.string() + suffix;
}

SegmentSet load_data(const std::filesystem::path& path) {
  try {
    return load_segments(path, format_from_extension(path));
  } catch (const Error& e) {
    throw e.with_stage("signal-io");
  }
}

}  // namespace

void apply_seed(PipelineConfig& c, std::uint64_t seed) {
  c.synth.seed = c.model_seed = c.bootstrap_seed = c.cap_seed = c.split_seed = c.cv_seed = seed;
}

int cmd_synth(const PipelineConfig& config, const SynthOptions& opts, std::ostream& out, std::ostream&) {
  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create '" + opts.out_dir.string() + "': " + ec.message());

  auto corpus = [&] {
    try {
      return synth_corpus(config.synth);
    } catch (const Error& e) {
      throw e.with_stage("synth-ecg");
    }
  }();
  std::ostringstream jsonl;
  write_segments_jsonl(jsonl, corpus.set);
  const std::string bytes = jsonl.str();
  const auto corpus_path = opts.out_dir / "corpus.jsonl";
  write_file(corpus_path, bytes);

  corpus.set.provenance.source_path = corpus_path.string();
  corpus.set.provenance.record_count = corpus.set.segments.size();
  corpus.set.provenance.content_hash = fnv1a(bytes);
  nlohmann::json manifest = manifest_json(corpus.set);
  manifest["synth"] = to_json(config.synth);
  write_file(opts.out_dir / "manifest.json", manifest.dump(1) + "\n");
  write_file(opts.out_dir / "truth.json", truth_json(corpus).dump(1) + "\n");

  out << "wrote " << corpus.set.segments.size() << " segments to " << corpus_path.string() << "\n";
  return 0;
}

int cmd_train(const PipelineConfig& config, const TrainOptions& opts, std::ostream& out, std::ostream&) {
  validate_config(config);
  const SegmentSet raw = load_data(opts.data);
  const SegmentSet capped = [&] {
    try {
      return pair_and_cap(raw, config.cap_per_label, config.cap_seed);
    } catch (const Error& e) {
      throw e.with_stage("signal-io (pairing)");
    }
  }();
  const auto split = [&] {
    try {
      return split_by_patient(capped, config.train_fraction, config.split_seed);
    } catch (const Error& e) {
      throw e.with_stage("split");
    }
  }();
  const SegmentSet train = select_patients(capped, split.train_patients);
  const SegmentSet test = select_patients(capped, split.test_patients);

  const auto train_rows = extract_features(train, config);
  const auto test_rows = extract_features(test, config);
  ModelBundle bundle;
  bundle.config = config;
  bundle.filter = design_butterworth_bandpass(config.filter);
  bundle.pipeline = train_pipeline(train_rows, config);
  bundle.fingerprint.data_source = opts.data.string();
  bundle.fingerprint.data_hash = raw.provenance.content_hash;
  bundle.fingerprint.record_count = raw.provenance.record_count;
  bundle.fingerprint.config_fingerprint = config_fingerprint(config);
  bundle.fingerprint.train_patients.assign(split.train_patients.begin(), split.train_patients.end());
  bundle.fingerprint.test_patients.assign(split.test_patients.begin(), split.test_patients.end());
  save_bundle(bundle, opts.model_out);

  out << "records " << raw.segments.size() << ", after pairing/cap " << capped.segments.size() << "\n";
  out << "patients train " << split.train_patients.size() << ", test " << split.test_patients.size() << "\n";
  nlohmann::json report;
  if (opts.cross_validation) {
    const auto cv = cross_validate(train_rows, config);
    out << "\n" << render_table(cv);
    report["cross_validation"] = to_json(cv);
  }
  if (!test_rows.empty()) {
    auto holdout = evaluate(bundle.pipeline, test_rows, config);
    holdout.n_train_patients = split.train_patients.size();
    out << "\n" << render_table(holdout);
    report["holdout"] = to_json(holdout);
  }
  out << "\nmodel written to " << opts.model_out.string() << "\n";
  if (opts.report_out) write_file(*opts.report_out, report.dump(1) + "\n");
  if (opts.holdout_out) {
    auto f = open_out(*opts.holdout_out);
    write_segments_jsonl(f, test);
  }
  return 0;
}

int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err) {
  const ModelBundle bundle = load_bundle(opts.model);
  const SegmentSet data = load_data(opts.data);
  if (data.provenance.content_hash == bundle.fingerprint.data_hash) {
    err << "warning: evaluation data has the same manifest hash as the training data ("
        << hex64(bundle.fingerprint.data_hash) << "); scores are likely optimistic\n";
  }
  const std::set<std::string> trained(bundle.fingerprint.train_patients.begin(),
                                      bundle.fingerprint.train_patients.end());
  std::size_t overlap = 0;
  for (const auto& id : patient_ids(data)) overlap += trained.count(id);
  if (overlap) err << "warning: " << overlap << " evaluation patient(s) were used for training\n";

  const FeatureExtractor extract(bundle.config, bundle.filter);
  std::vector<SegmentFeatures> rows;
  rows.reserve(data.segments.size());
  for (std::size_t i = 0; i < data.segments.size(); ++i) {
    try {
      rows.push_back(extract(data.segments[i]));
    } catch (const Error& e) {
      throw e.with_stage("features, record " + std::to_string(i + 1));
    }
  }
  auto report = evaluate(bundle.pipeline, rows, bundle.config);
  report.n_train_patients = bundle.fingerprint.train_patients.size();

  switch (opts.format) {
    case ReportFormat::Json: out << to_json(report).dump(1) << "\n"; break;
    case ReportFormat::Table: out << render_table(report); break;
    case ReportFormat::Csv: out << render_csv(report); break;
  }
  if (opts.out_prefix) {
    write_file(with_suffix(*opts.out_prefix, ".json"), to_json(report).dump(1) + "\n");
    write_file(with_suffix(*opts.out_prefix, ".txt"), render_table(report));
    write_file(with_suffix(*opts.out_prefix, ".roc.csv"), render_roc_csv(report));
  }
  return 0;
}

int cmd_classify(const ClassifyOptions& opts, std::istream& in, std::ostream& out, std::ostream& err) {
  const ModelBundle bundle = load_bundle(opts.model);
  const FeatureExtractor extract(bundle.config, bundle.filter);
  std::string line;
  std::size_t record = 0;
  bool failed = false;
  while (std::getline(in, line)) {
    ++record;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const EcgSegment seg = parse_segment_json(line, record);
      const auto& model = bundle.pipeline.for_condition(seg.condition);
      const double s = score(model, extract(seg));
      const double t = opts.threshold.value_or(model.threshold);
      out << seg.check_id << ' ' << to_string(seg.condition) << ' ' << shortest(s) << ' '
          << to_string(s > t ? Label::Pulse : Label::Pulseless) << '\n';
    } catch (const Error& e) {
      err << "line " << record << ": " << to_string(e.kind()) << ": " << e.what() << '\n';
      failed = true;
    }
  }
  return failed ? 1 : 0;
}

int cmd_roc_plot(const RocPlotOptions& opts, std::ostream& out, std::ostream&) {
  const ModelBundle bundle = load_bundle(opts.model);
  const SegmentSet data = load_data(opts.data);
  const FeatureExtractor extract(bundle.config, bundle.filter);
  std::vector<SegmentFeatures> rows;
  for (const auto& seg : data.segments) rows.push_back(extract(seg));
  const auto report = evaluate(bundle.pipeline, rows, bundle.config);
  write_file(opts.out, render_roc_csv(report));
  out << "ROC points written to " << opts.out.string() << "\n";
  if (opts.scalogram_out) {
    if (opts.scalogram_record >= data.segments.size()) {
      fail(ErrorKind::Usage, "scalogram record " + std::to_string(opts.scalogram_record) + " out of range");
    }
    auto f = open_out(*opts.scalogram_out);
    write_scalogram_text(f, extract.scalogram(data.segments[opts.scalogram_record]));
    out << "scalogram written to " << opts.scalogram_out->string() << "\n";
  }
  return 0;
}

}  // namespace pulse
