#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "pulse/bundle.hpp"
#include "pulse/config.hpp"
#include "pulse/error.hpp"
#include "pulse/experiment.hpp"
#include "pulse/signal_io.hpp"
#include "pulse/synth.hpp"

using namespace pulse;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.bootstrap_resamples = 200;
  cfg.synth.n_patients = 40;
  return cfg;
}

const SegmentSet& small_corpus() {
  static const SegmentSet set = pair_and_cap(synth_corpus(small_config().synth).set, 3, 7);
  return set;
}

const std::vector<SegmentFeatures>& small_features() {
  static const auto rows = extract_features(small_corpus(), small_config());
  return rows;
}

Error error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorKind::Io, "");
}

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

}  // namespace

TEST_CASE("patient folds partition the patients") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("p" + std::to_string(i));
  const auto folds = patient_folds(ids, 5, 3);
  REQUIRE(folds.size() == 5);
  std::map<std::string, int> seen;
  for (const auto& f : folds) {
    CHECK(f.size() == 2);
    for (const auto& p : f) seen[p]++;
  }
  CHECK(seen.size() == 10);
  for (const auto& [p, n] : seen) CHECK(n == 1);
  // order of the input list does not matter
  auto rev = ids;
  std::reverse(rev.begin(), rev.end());
  CHECK(patient_folds(rev, 5, 3) == folds);
  CHECK(error_of([&] { patient_folds(ids, 1, 3); }).kind() == ErrorKind::Config);
  CHECK(error_of([&] { patient_folds({"a", "b", "c"}, 5, 3); }).kind() == ErrorKind::Config);
}

TEST_CASE("cross-validation holds every patient out once and never splits a patient") {
  const auto cfg = small_config();
  const auto cv = cross_validate(small_features(), cfg, {ClassifierKind::LDA});
  std::map<std::string, int> held;
  for (const auto& f : cv.folds)
    for (const auto& p : f) held[p]++;
  CHECK(held.size() == patient_ids(small_corpus()).size());
  for (const auto& [p, n] : held) CHECK(n == 1);
  CHECK(cv.cells.size() == 4);  // 1 kind x {modes, +HR} x 2 conditions
  for (const auto& c : cv.cells) {
    CHECK(c.pooled.auc >= 0.0);
    CHECK(c.pooled.auc <= 1.0);
    CHECK(c.pooled.ci_low <= c.pooled.ci_high);
    CHECK(c.fold_auc.size() == 5);
  }
  CHECK_NOTHROW(cv.cell(ClassifierKind::LDA, true, Condition::NoCPR));
  const auto again = cross_validate(small_features(), cfg, {ClassifierKind::LDA});
  CHECK(to_json(again).dump() == to_json(cv).dump());
}

TEST_CASE("evaluate_split refuses overlapping patients") {
  const auto& set = small_corpus();
  const auto e = error_of([&] { evaluate_split(set, set, small_config()); });
  CHECK(e.kind() == ErrorKind::Leakage);
}

TEST_CASE("a single-class training set fails in the classifier stage") {
  SegmentSet pulse_only;
  for (const auto& s : small_corpus().segments)
    if (s.label == Label::Pulse) pulse_only.segments.push_back(s);
  const auto rows = extract_features(pulse_only, small_config());
  const auto e = error_of([&] { train_pipeline(rows, small_config()); });
  CHECK(e.kind() == ErrorKind::Fit);
  CHECK(std::string(e.what()).find("classifiers") != std::string::npos);
  CHECK(exit_code(e.kind()) == 1);
}

TEST_CASE("feature errors name the record") {
  SegmentSet set;
  set.segments.push_back(small_corpus().segments[0]);
  auto bad = small_corpus().segments[1];
  bad.samples.resize(100);
  set.segments.push_back(bad);
  const auto e = error_of([&] { extract_features(set, small_config()); });
  const std::string msg = e.what();
  CHECK(msg.find("features") != std::string::npos);
  CHECK(msg.find("record 2") != std::string::npos);
  CHECK(msg.find(bad.patient_id) != std::string::npos);
}

TEST_CASE("model bundle round trip reproduces scores") {
  const auto cfg = small_config();
  ModelBundle b;
  b.config = cfg;
  b.filter = design_butterworth_bandpass(cfg.filter);
  b.pipeline = train_pipeline(small_features(), cfg);
  b.fingerprint.data_source = "mem";
  b.fingerprint.data_hash = 0xabc;
  b.fingerprint.record_count = small_corpus().size();
  b.fingerprint.config_fingerprint = config_fingerprint(cfg);
  b.fingerprint.train_patients = patient_ids(small_corpus());

  const auto path = temp_file("pulse_bundle_test.json");
  save_bundle(b, path);
  const auto back = load_bundle(path);
  std::filesystem::remove(path);
  CHECK(back.version == kBundleVersion);
  CHECK(config_fingerprint(back.config) == config_fingerprint(cfg));
  CHECK(back.fingerprint.train_patients == b.fingerprint.train_patients);
  CHECK(back.fingerprint.data_hash == 0xabc);
  REQUIRE(back.filter.sections.size() == b.filter.sections.size());
  for (const auto& f : small_features()) {
    const double s0 = score(b.pipeline.for_condition(f.condition), f);
    const double s1 = score(back.pipeline.for_condition(f.condition), f);
    CHECK(std::abs(s1 - s0) <= 1e-12 * std::max(1.0, std::abs(s0)));
  }
  for (auto c : kConditions) CHECK(back.pipeline.for_condition(c).threshold == b.pipeline.for_condition(c).threshold);

  // Features recomputed from the stored filter match the originals.
  const FeatureExtractor fx(back.config, back.filter);
  const auto f0 = fx(small_corpus().segments[0]);
  CHECK((f0.vector - small_features()[0].vector).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bundle version and format errors") {
  ModelBundle b;
  b.config = small_config();
  b.filter = design_butterworth_bandpass(b.config.filter);
  b.pipeline = train_pipeline(small_features(), b.config);
  auto j = to_json(b);
  j["version"] = kBundleVersion + 1;
  CHECK(error_of([&] { bundle_from_json(j); }).kind() == ErrorKind::Version);
  auto k = to_json(b);
  k.erase("models");
  CHECK(error_of([&] { bundle_from_json(k); }).kind() == ErrorKind::Parse);
  CHECK(error_of([&] { load_bundle("/nonexistent/model.json"); }).kind() == ErrorKind::Io);
  const auto garbage = temp_file("pulse_bundle_garbage.json");
  std::ofstream(garbage) << "{not json";
  CHECK(error_of([&] { load_bundle(garbage); }).kind() == ErrorKind::Parse);
  std::filesystem::remove(garbage);
}

TEST_CASE("config fingerprint tracks every knob") {
  const PipelineConfig base;
  CHECK(config_fingerprint(base) == config_fingerprint(PipelineConfig{}));
  std::vector<PipelineConfig> variants(8, base);
  variants[0].wavelet.mu = 5.5;
  variants[1].filter.high_hz = 35;
  variants[2].grid_cols = 80;
  variants[3].classifier = ClassifierKind::QDA;
  variants[4].bootstrap_seed = 8;
  variants[5].synth.n_patients = 10;
  variants[6].normalization = Normalization::None;
  variants[7].heart_rate.refractory_s = 0.25;
  std::set<std::uint64_t> prints{config_fingerprint(base)};
  for (const auto& v : variants) prints.insert(config_fingerprint(v));
  CHECK(prints.size() == variants.size() + 1);
  CHECK(config_fingerprint(config_from_json(to_json(variants[0]))) == config_fingerprint(variants[0]));
  CHECK(hex64(0xabc) == "0000000000000abc");
}

TEST_CASE("config files: JSON and key = value") {
  const auto jpath = temp_file("pulse_cfg.json");
  std::ofstream(jpath) << R"({"wavelet": {"mu": 5.5}, "classifier": "QDA"})";
  const auto a = load_config(jpath);
  CHECK(a.wavelet.mu == 5.5);
  CHECK(a.wavelet.sigma == PipelineConfig{}.wavelet.sigma);
  CHECK(a.classifier == ClassifierKind::QDA);

  const auto kpath = temp_file("pulse_cfg.toml");
  std::ofstream(kpath) << "# run settings\nbootstrap_resamples = 500\n[wavelet]\nvoices_per_octave = 12  # finer\n"
                          "[synth]\nn_patients = 50\nnormalization_note = \"x\"\n";
  const auto b = load_config(kpath);
  CHECK(b.bootstrap_resamples == 500);
  CHECK(b.wavelet.voices_per_octave == 12);
  CHECK(b.synth.n_patients == 50);

  std::ofstream(kpath) << "wavelet.voices_per_octave = 2\n";
  CHECK(error_of([&] { load_config(kpath); }).kind() == ErrorKind::Config);
  std::ofstream(kpath) << "this is not a setting\n";
  CHECK(error_of([&] { load_config(kpath); }).kind() == ErrorKind::Config);
  std::filesystem::remove(jpath);
  std::filesystem::remove(kpath);
}

TEST_CASE("AUC formatting and report renderers") {
  CHECK(format_auc({0.84, 0.797, 0.88, 1000, 7}) == "0.84 (0.797,0.88)");
  CHECK(format_auc({1.0, 0.9884, 1.0, 1000, 7}) == "1 (0.988,1)");
  CHECK(format_auc({0.5, 0.42, 0.58, 1000, 7}) == "0.5 (0.42,0.58)");

  const auto cfg = small_config();
  std::set<std::string> train_ids, test_ids;
  const auto sp = split_by_patient(small_corpus(), 0.6, 7);
  const auto report = evaluate_split(select_patients(small_corpus(), sp.train_patients),
                                     select_patients(small_corpus(), sp.test_patients), cfg);
  REQUIRE(report.conditions.size() == 2);
  CHECK(report.conditions[0].condition == Condition::CPR);
  CHECK(report.n_train_patients == sp.train_patients.size());
  CHECK(report.config_fingerprint == config_fingerprint(cfg));
  std::size_t segs = 0;
  for (const auto& c : report.conditions) {
    CHECK(c.n_pulse + c.n_pulseless == c.n_segments);
    segs += c.n_segments;
  }
  CHECK(segs == select_patients(small_corpus(), sp.test_patients).size());
  const auto table = render_table(report);
  CHECK(table.find("CPR") != std::string::npos);
  CHECK(table.find("No CPR") != std::string::npos);
  CHECK(table.find(format_auc(report.conditions[0].auc)) != std::string::npos);
  const auto j = to_json(report);
  CHECK(j.at("conditions").size() == 2);
  const auto roc = render_roc_csv(report);
  CHECK(roc.rfind("condition,threshold,fpr,tpr", 0) == 0);
}
