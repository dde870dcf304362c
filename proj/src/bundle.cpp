#include "pulse/bundle.hpp"

#include <fstream>

#include "pulse/error.hpp"
#include "pulse/json_util.hpp"

namespace pulse {

namespace {

using namespace json_util;

nlohmann::json basis_json(const PcaBasis& b) {
  return {{"condition", to_string(b.condition)},
          {"mean", vector_to_json(b.mean)},
          {"modes", matrix_to_json(b.modes)},
          {"explained_fraction", b.explained_fraction},
          {"n_selected", b.n_selected}};
}

PcaBasis basis_from_json(const nlohmann::json& j) {
  PcaBasis b;
  const auto c = parse_condition(j.at("condition").get<std::string>());
  if (!c) fail(ErrorKind::Parse, "bad basis condition");
  b.condition = *c;
  b.mean = vector_from_json(j.at("mean"));
  b.modes = matrix_from_json(j.at("modes"));
  b.explained_fraction = j.at("explained_fraction").get<std::vector<double>>();
  b.n_selected = j.at("n_selected").get<int>();
  if (b.modes.rows() != b.mean.size()) fail(ErrorKind::Parse, "basis modes do not match mean length");
  return b;
}

nlohmann::json filter_json(const FilterCoefficients& f) {
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : f.sections) sections.push_back({s.b0, s.b1, s.b2, 1.0, s.a1, s.a2});
  return sections;
}

FilterCoefficients filter_from_json(const nlohmann::json& j) {
  FilterCoefficients f;
  for (const auto& s : j) {
    const auto v = s.get<std::vector<double>>();
    if (v.size() != 6) fail(ErrorKind::Parse, "filter section needs 6 coefficients");
    f.sections.push_back({v[0], v[1], v[2], v[4], v[5]});
  }
  return f;
}

}  // namespace

nlohmann::json to_json(const ModelBundle& b) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : b.pipeline.models) {
    models.push_back({{"condition", to_string(m.condition)},
                      {"basis", basis_json(m.basis)},
                      {"classifier", to_json(m.classifier)},
                      {"use_heart_rate", m.use_heart_rate},
                      {"heart_rate_fill", m.heart_rate_fill},
                      {"threshold", m.threshold}});
  }
  const auto& fp = b.fingerprint;
  return {{"format", "pulsecheck-model"},
          {"version", b.version},
          {"config", to_json(b.config)},
          {"filter_sos", filter_json(b.filter)},
          {"models", models},
          {"fingerprint",
           {{"data_source", fp.data_source},
            {"data_hash", hex64(fp.data_hash)},
            {"record_count", fp.record_count},
            {"config_fingerprint", hex64(fp.config_fingerprint)},
            {"train_patients", fp.train_patients},
            {"test_patients", fp.test_patients}}}};
}

ModelBundle bundle_from_json(const nlohmann::json& j) {
  const int version = j.value("version", -1);
  if (version != kBundleVersion) {
    fail(ErrorKind::Version, "model bundle version " + std::to_string(version) + ", this build reads version " +
                                 std::to_string(kBundleVersion));
  }
  ModelBundle b;
  try {
    b.config = config_from_json(j.at("config"));
    b.filter = filter_from_json(j.at("filter_sos"));
    for (const auto& m : j.at("models")) {
      ConditionModel cm;
      const auto c = parse_condition(m.at("condition").get<std::string>());
      if (!c) fail(ErrorKind::Parse, "bad model condition");
      cm.condition = *c;
      cm.basis = basis_from_json(m.at("basis"));
      cm.classifier = classifier_from_json(m.at("classifier"));
      cm.use_heart_rate = m.at("use_heart_rate").get<bool>();
      cm.heart_rate_fill = m.at("heart_rate_fill").get<double>();
      cm.threshold = m.at("threshold").get<double>();
      b.pipeline.models.push_back(std::move(cm));
    }
    const auto& fp = j.at("fingerprint");
    b.fingerprint.data_source = fp.at("data_source").get<std::string>();
    b.fingerprint.data_hash = std::stoull(fp.at("data_hash").get<std::string>(), nullptr, 16);
    b.fingerprint.record_count = fp.at("record_count").get<std::size_t>();
    b.fingerprint.config_fingerprint = std::stoull(fp.at("config_fingerprint").get<std::string>(), nullptr, 16);
    b.fingerprint.train_patients = fp.at("train_patients").get<std::vector<std::string>>();
    b.fingerprint.test_patients = fp.at("test_patients").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, std::string("model bundle: ") + e.what());
  } catch (const std::invalid_argument&) {
    fail(ErrorKind::Parse, "model bundle: bad hex hash");
  }
  return b;
}

void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write model '" + path.string() + "'");
  out << to_json(b).dump(1) << "\n";
  if (!out) fail(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open model '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, "model '" + path.string() + "': " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace pulse
