#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"

#include "pulse/segment.hpp"

namespace pulse {

enum class SegmentFormat { Jsonl, Csv };

inline constexpr double kTargetRateHz = 250.0;
inline constexpr double kMinRateHz = 100.0;
inline constexpr double kMaxRateHz = 1024.0;  // admits 1024 Hz recorders

// Throws Validation unless fs > 0, samples non-empty and finite, and the
// length is within one sample of the nominal window for the condition.
void validate_segment(const EcgSegment& seg);

// Parses one JSONL record. `record` is the 1-based line number used in
// error messages.
EcgSegment parse_segment_json(std::string_view line, std::size_t record);

SegmentSet read_segments(std::istream& in, SegmentFormat format, std::string source_name);
SegmentSet load_segments(const std::filesystem::path& path, SegmentFormat format);
SegmentFormat format_from_extension(const std::filesystem::path& path);

nlohmann::json segment_to_json(const EcgSegment& seg);
void write_segments_jsonl(std::ostream& out, const SegmentSet& set);
void write_segments_csv(std::ostream& out, const SegmentSet& set);
nlohmann::json manifest_json(const SegmentSet& set);

/// Band-limited resampling to 250 Hz.
///
/// Kaiser-windowed sinc (beta 8, 64 taps per output phase) with cutoff at the
/// lower of the two Nyquist rates. Integer input rates use a precomputed
/// polyphase table; other rates evaluate the kernel per output sample. Signal
/// edges are extended by odd reflection. A 250 Hz input is returned unchanged.
EcgSegment resample_to_250(const EcgSegment& seg);

// Keeps complete same-check (CPR, NoCPR) pairs, at most `max_per_label` per
// (patient, label), chosen by seeded sampling without replacement.
SegmentSet pair_and_cap(const SegmentSet& set, std::size_t max_per_label, std::uint64_t seed);

struct SplitAssignment {
  std::set<std::string> train_patients;
  std::set<std::string> test_patients;
  std::uint64_t seed = 0;
};

SplitAssignment split_by_patient(const SegmentSet& set, double train_frac, std::uint64_t seed);

SegmentSet select_patients(const SegmentSet& set, const std::set<std::string>& patients);

}  // namespace pulse
