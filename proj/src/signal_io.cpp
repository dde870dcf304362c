#include "pulse/signal_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "pulse/error.hpp"
#include "pulse/hash.hpp"
#include "pulse/random.hpp"

namespace pulse {

namespace {

std::string record_prefix(std::size_t record) {
  return "record " + std::to_string(record) + ": ";
}

double sample_value(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_null()) return std::nan("");
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s == "NaN" || s == "nan") return std::nan("");
    if (s == "Infinity" || s == "inf") return HUGE_VAL;
    if (s == "-Infinity" || s == "-inf") return -HUGE_VAL;
  }
  fail(ErrorKind::Parse, "samples_mv entries must be numbers");
}

void validate_with_context(const EcgSegment& seg, std::size_t record) {
  try {
    validate_segment(seg);
  } catch (const Error& e) {
    throw Error(e.kind(), record_prefix(record) + e.what());
  }
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view token, std::size_t record, std::string_view what) {
  token = trim(token);
  double v = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec == std::errc::result_out_of_range) {
    return (!token.empty() && token.front() == '-') ? -HUGE_VAL : HUGE_VAL;
  }
  if (ec != std::errc() || ptr != last) {
    fail(ErrorKind::Parse, "line " + std::to_string(record) + ": cannot parse " +
                               std::string(what) + " '" + std::string(token) + "'");
  }
  return v;
}

EcgSegment parse_csv_row(std::string_view line, std::size_t record) {
  const auto fields = split_commas(line);
  if (fields.size() < 6) {
    fail(ErrorKind::Parse, "line " + std::to_string(record) + ": expected at least 6 columns");
  }
  EcgSegment seg;
  seg.patient_id = std::string(trim(fields[0]));
  const double check = parse_double(fields[1], record, "check_id");
  if (check != std::floor(check)) {
    fail(ErrorKind::Parse, "line " + std::to_string(record) + ": check_id must be an integer");
  }
  seg.check_id = static_cast<std::int64_t>(check);
  const auto cond = parse_condition(trim(fields[2]));
  if (!cond) {
    fail(ErrorKind::Validation,
         record_prefix(record) + "unknown condition '" + std::string(trim(fields[2])) + "'");
  }
  seg.condition = *cond;
  const auto label = parse_label(trim(fields[3]));
  if (!label) {
    fail(ErrorKind::Validation,
         record_prefix(record) + "unknown label '" + std::string(trim(fields[3])) + "'");
  }
  seg.label = *label;
  seg.fs = parse_double(fields[4], record, "fs");
  seg.samples.reserve(fields.size() - 5);
  for (std::size_t i = 5; i < fields.size(); ++i) {
    if (trim(fields[i]).empty() && i + 1 == fields.size()) break;  // trailing comma
    seg.samples.push_back(parse_double(fields[i], record, "sample"));
  }
  validate_with_context(seg, record);
  return seg;
}

// Kaiser-windowed sinc, `u` in input-sample units.
struct SincKernel {
  double ratio;       // min(1, fs_out / fs_in)
  double half_width;  // kernel support in input samples
  double beta;
  double i0_beta;

  double operator()(double u) const {
    const double x = u / half_width;
    if (std::abs(x) >= 1.0) return 0.0;
    const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / i0_beta;
    const double arg = M_PI * ratio * u;
    const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
    return ratio * sinc * w;
  }
};

constexpr double kKaiserBeta = 8.0;
constexpr int kTapsPerPhase = 64;

}  // namespace

void validate_segment(const EcgSegment& seg) {
  if (!(seg.fs > 0.0) || !std::isfinite(seg.fs)) {
    fail(ErrorKind::Validation, "sampling rate must be positive, got " + std::to_string(seg.fs));
  }
  if (seg.samples.empty()) fail(ErrorKind::Validation, "segment has no samples");
  for (std::size_t i = 0; i < seg.samples.size(); ++i) {
    if (!std::isfinite(seg.samples[i])) {
      fail(ErrorKind::Validation, "non-finite sample at index " + std::to_string(i));
    }
  }
  const double expected = nominal_duration_s(seg.condition) * seg.fs;
  const double n = static_cast<double>(seg.samples.size());
  if (std::abs(n - std::round(expected)) > 1.0) {
    fail(ErrorKind::Validation, std::string(to_string(seg.condition)) + " segment has " +
                                    std::to_string(seg.samples.size()) + " samples, expected " +
                                    std::to_string(static_cast<long long>(std::round(expected))) +
                                    " +/- 1");
  }
}

EcgSegment parse_segment_json(std::string_view line, std::size_t record) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Parse, "line " + std::to_string(record) + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Parse, "line " + std::to_string(record) + ": expected object");
  const auto require = [&](const char* key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) {
      fail(ErrorKind::Parse, "line " + std::to_string(record) + ": missing field '" + key + "'");
    }
    return *it;
  };

  EcgSegment seg;
  try {
    const auto& pid = require("patient_id");
    seg.patient_id = pid.is_string() ? pid.get<std::string>() : pid.dump();
    const auto& check = require("check_id");
    if (!check.is_number_integer()) {
      fail(ErrorKind::Parse, "line " + std::to_string(record) + ": check_id must be an integer");
    }
    seg.check_id = check.get<std::int64_t>();
    const auto cond_token = require("condition").get<std::string>();
    const auto label_token = require("label").get<std::string>();
    const auto& fs = require("fs");
    if (!fs.is_number()) fail(ErrorKind::Parse, "line " + std::to_string(record) + ": fs must be a number");
    seg.fs = fs.get<double>();
    const auto& samples = require("samples_mv");
    if (!samples.is_array()) {
      fail(ErrorKind::Parse, "line " + std::to_string(record) + ": samples_mv must be an array");
    }
    seg.samples.reserve(samples.size());
    for (const auto& v : samples) seg.samples.push_back(sample_value(v));

    const auto cond = parse_condition(cond_token);
    if (!cond) fail(ErrorKind::Validation, record_prefix(record) + "unknown condition '" + cond_token + "'");
    seg.condition = *cond;
    const auto label = parse_label(label_token);
    if (!label) fail(ErrorKind::Validation, record_prefix(record) + "unknown label '" + label_token + "'");
    seg.label = *label;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, "line " + std::to_string(record) + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse && std::string_view(e.what()).rfind("line ", 0) != 0) {
      fail(ErrorKind::Parse, "line " + std::to_string(record) + ": " + e.what());
    }
    throw;
  }
  validate_with_context(seg, record);
  return seg;
}

SegmentSet read_segments(std::istream& in, SegmentFormat format, std::string source_name) {
  SegmentSet set;
  set.provenance.source_path = std::move(source_name);
  std::string line;
  std::size_t lineno = 0;
  if (format == SegmentFormat::Csv) {
    if (!std::getline(in, line)) fail(ErrorKind::Parse, "line 1: missing CSV header");
    ++lineno;
    const auto header = split_commas(line);
    static constexpr std::string_view expected[] = {"patient_id", "check_id", "condition", "label", "fs"};
    if (header.size() < 5) fail(ErrorKind::Parse, "line 1: CSV header too short");
    for (std::size_t i = 0; i < 5; ++i) {
      if (trim(header[i]) != expected[i]) {
        fail(ErrorKind::Parse, "line 1: expected header column '" + std::string(expected[i]) + "'");
      }
    }
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (format == SegmentFormat::Jsonl) {
      set.segments.push_back(parse_segment_json(line, lineno));
    } else {
      set.segments.push_back(parse_csv_row(line, lineno));
    }
  }
  set.provenance.record_count = set.segments.size();
  return set;
}

SegmentSet load_segments(const std::filesystem::path& path, SegmentFormat format) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  const std::string bytes = std::move(buffer).str();
  std::istringstream in(bytes);
  SegmentSet set = read_segments(in, format, path.string());
  set.provenance.content_hash = fnv1a(bytes);
  return set;
}

SegmentFormat format_from_extension(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? SegmentFormat::Csv : SegmentFormat::Jsonl;
}

nlohmann::json segment_to_json(const EcgSegment& seg) {
  return nlohmann::json{{"patient_id", seg.patient_id},
                        {"check_id", seg.check_id},
                        {"condition", to_string(seg.condition)},
                        {"label", to_string(seg.label)},
                        {"fs", seg.fs},
                        {"samples_mv", seg.samples}};
}

void write_segments_jsonl(std::ostream& out, const SegmentSet& set) {
  for (const auto& seg : set.segments) out << segment_to_json(seg).dump() << '\n';
}

void write_segments_csv(std::ostream& out, const SegmentSet& set) {
  out << "patient_id,check_id,condition,label,fs\n";
  char buf[32];
  for (const auto& seg : set.segments) {
    out << seg.patient_id << ',' << seg.check_id << ',' << to_string(seg.condition) << ','
        << to_string(seg.label);
    auto res = std::to_chars(buf, buf + sizeof buf, seg.fs);
    out << ',' << std::string_view(buf, res.ptr - buf);
    for (double v : seg.samples) {
      res = std::to_chars(buf, buf + sizeof buf, v);
      out << ',' << std::string_view(buf, res.ptr - buf);
    }
    out << '\n';
  }
}

nlohmann::json manifest_json(const SegmentSet& set) {
  nlohmann::json j{{"source_path", set.provenance.source_path},
                   {"record_count", set.provenance.record_count},
                   {"content_hash", set.provenance.content_hash}};
  j["capping_seed"] = set.provenance.capping_seed ? nlohmann::json(*set.provenance.capping_seed)
                                                  : nlohmann::json(nullptr);
  return j;
}

EcgSegment resample_to_250(const EcgSegment& seg) {
  if (seg.fs == kTargetRateHz) return seg;
  if (!(seg.fs >= kMinRateHz && seg.fs <= kMaxRateHz)) {
    fail(ErrorKind::UnsupportedRate, "sampling rate " + std::to_string(seg.fs) +
                                         " Hz outside supported range [" +
                                         std::to_string(static_cast<int>(kMinRateHz)) + ", " +
                                         std::to_string(static_cast<int>(kMaxRateHz)) + "]");
  }
  const auto& x = seg.samples;
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  if (n_in < 2) fail(ErrorKind::Length, "resampling needs at least 2 samples");
  const double step = seg.fs / kTargetRateHz;  // input samples per output sample
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) / step));

  SincKernel kernel{std::min(1.0, 1.0 / step), 0.0, kKaiserBeta,
                    std::cyl_bessel_i(0.0, kKaiserBeta)};
  kernel.half_width = 0.5 * kTapsPerPhase / kernel.ratio;
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(kernel.half_width));

  // Odd reflection about each endpoint, clamped for very short inputs.
  const auto at = [&](std::ptrdiff_t k) {
    if (k < 0) {
      const auto m = std::min(-k, n_in - 1);
      return 2.0 * x[0] - x[static_cast<std::size_t>(m)];
    }
    if (k >= n_in) {
      const auto m = std::min(k - (n_in - 1), n_in - 1);
      return 2.0 * x[static_cast<std::size_t>(n_in - 1)] - x[static_cast<std::size_t>(n_in - 1 - m)];
    }
    return x[static_cast<std::size_t>(k)];
  };

  // For integer rates the fractional offset of output n cycles with period L,
  // where step = M / L in lowest terms.
  std::int64_t phases = 0;
  std::int64_t num = 0;
  if (seg.fs == std::floor(seg.fs)) {
    const auto fs_int = static_cast<std::int64_t>(seg.fs);
    const auto target = static_cast<std::int64_t>(kTargetRateHz);
    const auto g = std::gcd(fs_int, target);
    num = fs_int / g;
    phases = target / g;
  }
  const auto taps = static_cast<std::size_t>(2 * reach);
  std::vector<double> table;
  if (phases > 0) {
    table.resize(static_cast<std::size_t>(phases) * taps);
    for (std::int64_t p = 0; p < phases; ++p) {
      const double frac = static_cast<double>(p) / static_cast<double>(phases);
      for (std::size_t t = 0; t < taps; ++t) {
        const double offset = static_cast<double>(static_cast<std::ptrdiff_t>(t) - reach + 1);
        table[static_cast<std::size_t>(p) * taps + t] = kernel(frac - offset);
      }
    }
  }

  EcgSegment out = seg;
  out.fs = kTargetRateHz;
  out.samples.assign(n_out, 0.0);
  for (std::size_t n = 0; n < n_out; ++n) {
    std::ptrdiff_t base;
    double frac;
    const double* row = nullptr;
    if (phases > 0) {
      const auto pos_num = static_cast<std::int64_t>(n) * num;  // position * phases
      base = static_cast<std::ptrdiff_t>(pos_num / phases);
      const auto p = pos_num % phases;
      frac = static_cast<double>(p) / static_cast<double>(phases);
      row = table.data() + static_cast<std::size_t>(p) * taps;
    } else {
      const double pos = static_cast<double>(n) * step;
      base = static_cast<std::ptrdiff_t>(std::floor(pos));
      frac = pos - static_cast<double>(base);
    }
    double acc = 0.0;
    for (std::size_t t = 0; t < taps; ++t) {
      const auto offset = static_cast<std::ptrdiff_t>(t) - reach + 1;
      const double w = row ? row[t] : kernel(frac - static_cast<double>(offset));
      acc += w * at(base + offset);
    }
    out.samples[n] = acc;
  }
  return out;
}

SegmentSet pair_and_cap(const SegmentSet& set, std::size_t max_per_label, std::uint64_t seed) {
  struct CheckSlots {
    std::vector<std::size_t> cpr;
    std::vector<std::size_t> nocpr;
  };
  std::map<std::pair<std::string, std::int64_t>, CheckSlots> checks;
  for (std::size_t i = 0; i < set.segments.size(); ++i) {
    const auto& s = set.segments[i];
    auto& slot = checks[{s.patient_id, s.check_id}];
    (s.condition == Condition::CPR ? slot.cpr : slot.nocpr).push_back(i);
  }

  // Eligible checks per (patient, label), in check_id order.
  std::map<std::pair<std::string, Label>, std::vector<std::int64_t>> eligible;
  for (const auto& [key, slot] : checks) {
    if (slot.cpr.size() != 1 || slot.nocpr.size() != 1) continue;
    const auto& a = set.segments[slot.cpr.front()];
    const auto& b = set.segments[slot.nocpr.front()];
    if (a.label != b.label) continue;
    eligible[{key.first, a.label}].push_back(key.second);
  }

  std::set<std::pair<std::string, std::int64_t>> keep;
  for (auto& [key, ids] : eligible) {
    if (ids.size() > max_per_label) {
      const auto stream = fnv1a(key.first, fnv1a(to_string(key.second)));
      Rng rng(seed, stream);
      rng.shuffle(std::span<std::int64_t>(ids));
      ids.resize(max_per_label);
    }
    for (auto id : ids) keep.insert({key.first, id});
  }

  SegmentSet out;
  out.provenance = set.provenance;
  out.provenance.capping_seed = seed;
  for (const auto& s : set.segments) {
    if (keep.count({s.patient_id, s.check_id})) out.segments.push_back(s);
  }
  out.provenance.record_count = out.segments.size();
  return out;
}

SplitAssignment split_by_patient(const SegmentSet& set, double train_frac, std::uint64_t seed) {
  auto ids = patient_ids(set);
  if (ids.size() < 2) {
    fail(ErrorKind::InsufficientData, "patient split needs at least 2 patients, got " +
                                          std::to_string(ids.size()));
  }
  if (!(train_frac > 0.0 && train_frac < 1.0)) {
    fail(ErrorKind::Config, "train fraction must lie in (0, 1)");
  }
  Rng rng(seed, 0x5b1d);
  rng.shuffle(std::span<std::string>(ids));
  const double target = train_frac * static_cast<double>(ids.size());
  auto n_train = static_cast<std::size_t>(std::floor(target + 0.5));
  n_train = std::clamp<std::size_t>(n_train, 1, ids.size() - 1);

  SplitAssignment split;
  split.seed = seed;
  split.train_patients.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test_patients.insert(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  return split;
}

SegmentSet select_patients(const SegmentSet& set, const std::set<std::string>& patients) {
  SegmentSet out;
  out.provenance = set.provenance;
  for (const auto& s : set.segments) {
    if (patients.count(s.patient_id)) out.segments.push_back(s);
  }
  out.provenance.record_count = out.segments.size();
  return out;
}

}  // namespace pulse
