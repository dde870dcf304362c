#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pulse {

enum class Condition { CPR, NoCPR };
enum class Label { Pulse, Pulseless };

inline constexpr Condition kConditions[] = {Condition::CPR, Condition::NoCPR};

std::string_view to_string(Condition c) noexcept;
std::string_view to_string(Label l) noexcept;
std::optional<Condition> parse_condition(std::string_view token) noexcept;
std::optional<Label> parse_label(std::string_view token) noexcept;

// Nominal window length per condition, in seconds.
constexpr double nominal_duration_s(Condition c) noexcept {
  return c == Condition::CPR ? 10.0 : 5.0;
}

/// One pulse-check window of single-lead ECG.
struct EcgSegment {
  std::vector<double> samples;  // mV
  double fs = 0.0;              // Hz
  std::string patient_id;
  std::int64_t check_id = 0;
  Condition condition = Condition::CPR;
  Label label = Label::Pulse;

  double duration_s() const noexcept {
    return fs > 0.0 ? static_cast<double>(samples.size()) / fs : 0.0;
  }
};

struct Provenance {
  std::string source_path;
  std::size_t record_count = 0;
  std::uint64_t content_hash = 0;  // FNV-1a of the source bytes, 0 if generated
  std::optional<std::uint64_t> capping_seed;
};

struct SegmentSet {
  std::vector<EcgSegment> segments;
  Provenance provenance;

  std::size_t size() const noexcept { return segments.size(); }
  bool empty() const noexcept { return segments.empty(); }
};

// Sorted, de-duplicated patient ids.
std::vector<std::string> patient_ids(const SegmentSet& set);

}  // namespace pulse
