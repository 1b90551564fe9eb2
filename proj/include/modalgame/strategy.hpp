#pragma once

#include <limits>
#include <optional>
#include <vector>

namespace modalgame {

/// TNC decision: base fare ($/trip), per-zone rates ($/mile), per-zone idle vehicles.
struct TncStrategy {
  double base_fare = 0.0;
  std::vector<double> rate;
  std::vector<double> idle;

  friend bool operator==(const TncStrategy&, const TncStrategy&) = default;
};

/// Transit decision: per-mile fare and per-line frequency (vehicles/hour).
struct TransitStrategy {
  double fare_per_mile = 0.0;
  std::vector<double> frequency;

  friend bool operator==(const TransitStrategy&, const TransitStrategy&) = default;
};

struct PolicyConfig {
  std::optional<double> max_amod_wait;  // hours; disabled when empty
  double subsidy = 0.0;                 // $ per qualifying first/last-mile leg

  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

}  // namespace modalgame
