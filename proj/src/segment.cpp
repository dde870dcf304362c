#include "pulse/segment.hpp"

#include <algorithm>

namespace pulse {

std::string_view to_string(Condition c) noexcept {
  return c == Condition::CPR ? "CPR" : "NoCPR";
}

std::string_view to_string(Label l) noexcept {
  return l == Label::Pulse ? "Pulse" : "Pulseless";
}

std::optional<Condition> parse_condition(std::string_view token) noexcept {
  if (token == "CPR") return Condition::CPR;
  if (token == "NoCPR") return Condition::NoCPR;
  return std::nullopt;
}

std::optional<Label> parse_label(std::string_view token) noexcept {
  if (token == "Pulse") return Label::Pulse;
  if (token == "Pulseless") return Label::Pulseless;
  return std::nullopt;
}

std::vector<std::string> patient_ids(const SegmentSet& set) {
  std::vector<std::string> ids;
  ids.reserve(set.segments.size());
  for (const auto& s : set.segments) ids.push_back(s.patient_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace pulse
