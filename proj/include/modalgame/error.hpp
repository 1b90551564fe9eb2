#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace modalgame {

enum class Errc {
  dimension_mismatch,
  unreachable_od,
  validation,
  nonpositive_idle_fleet,
  zero_frequency_on_used_line,
  infeasible_start,
  empty_grid,
  empty_cell,
  infeasible,
  nonpositive_accessibility,
  parse,
  schema_version,
  config,
  io,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::unreachable_od: return "UnreachableOD";
    case Errc::validation: return "ValidationError";
    case Errc::nonpositive_idle_fleet: return "NonpositiveIdleFleet";
    case Errc::zero_frequency_on_used_line: return "ZeroFrequencyOnUsedLine";
    case Errc::infeasible_start: return "InfeasibleStart";
    case Errc::empty_grid: return "EmptyGrid";
    case Errc::empty_cell: return "EmptyCell";
    case Errc::infeasible: return "Infeasible";
    case Errc::nonpositive_accessibility: return "NonpositiveAccessibility";
    case Errc::parse: return "ParseError";
    case Errc::schema_version: return "SchemaVersionError";
    case Errc::config: return "ConfigError";
    case Errc::io: return "IoError";
  }
  return "Error";
}

/// Single exception type for the library; `code()` identifies the failure.
/// Validation failures carry the offending field path (e.g. "zones[3].area").
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        field_(std::move(field)) {}

  Errc code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  Errc code_;
  std::string field_;
};

}  // namespace modalgame
