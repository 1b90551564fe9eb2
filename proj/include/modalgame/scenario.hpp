#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "choice.hpp"
#include "core_model.hpp"
#include "error.hpp"
#include "strategy.hpp"

namespace modalgame {

/// Box bounds on TNC decisions.
struct DecisionBounds {
  double base_fare_max = 40.0;  // $/trip
  double rate_max = 15.0;       // $/mile
  double idle_min = 1e-6;       // vehicles
  double idle_max = 5000.0;

  friend bool operator==(const DecisionBounds&, const DecisionBounds&) = default;
};

struct Scenario {
  MultimodalNetwork network;
  BehaviorParams behavior;
  std::vector<double> potential_demand;  // lambda0, flat (i*M + j)*K + k, trips/hour
  double c_av = 30.0;                    // $/vehicle-hour
  double rp_max = 3.0;                   // $/mile
  double wp_max = 1.0 / 3.0;             // hours
  double pi0 = 1e4;                      // $/hour
  PolicyConfig policy;
  DecisionBounds bounds;

  std::size_t zone_count() const noexcept { return network.zone_count(); }
  std::size_t line_count() const noexcept { return network.line_count(); }
  std::size_t class_count() const noexcept { return behavior.class_count(); }
  double potential(std::size_t i, std::size_t j, std::size_t k) const {
    return potential_demand[(i * zone_count() + j) * class_count() + k];
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Lowest admissible idle fleet in zone i (min-service level inverted into a floor).
inline double idle_floor(const Scenario& sc, std::size_t i) {
  double lo = sc.bounds.idle_min;
  if (sc.policy.max_amod_wait) {
    const double r = sc.network.zones[i].matching_scale / *sc.policy.max_amod_wait;
    lo = std::max(lo, r * r);
  }
  return lo;
}

/// Aggregated validation of every scenario-level invariant; throws Error(validation).
inline void validate_scenario(const Scenario& sc) {
  std::vector<std::string> errs;
  std::string first;
  auto fail = [&](const std::string& field, const std::string& msg) {
    if (first.empty()) first = field;
    errs.push_back(field + ": " + msg);
  };
  const std::size_t M = sc.zone_count();
  const std::size_t K = sc.class_count();
  const auto& b = sc.behavior;
  if (K == 0) fail("behavior.classes", "at least one class required");
  if (!(b.epsilon >= 0)) fail("behavior.epsilon", "must be >= 0");
  if (!(b.v_a > 0)) fail("behavior.speed_amod", "must be > 0");
  if (!(b.v_p > 0)) fail("behavior.speed_transit", "must be > 0");
  if (!(b.v_w > 0)) fail("behavior.speed_walk", "must be > 0");
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = b.classes[k];
    const std::string p = "behavior.classes[" + std::to_string(k) + "]";
    if (!(c.alpha > 0 && c.beta > 0 && c.gamma > 0 && c.theta > 0)) fail(p, "weights must be positive");
    if (!(c.alpha > c.beta) || !(c.theta > c.beta)) fail(p, "need alpha > beta and theta > beta");
  }
  if (b.outside_cost.size() != M * M * K) fail("behavior.outside_cost", "must have M*M*K entries");
  for (double v : b.outside_cost)
    if (!(v >= 0)) {
      fail("behavior.outside_cost", "entries must be >= 0");
      break;
    }
  for (std::size_t z = 0; z < M; ++z)
    if (sc.network.zones[z].population_split.size() != K)
      fail("zones[" + std::to_string(z) + "].population_split", "length must equal class count");
  if (sc.potential_demand.size() != M * M * K) fail("potential_demand", "must have M*M*K entries");
  for (double v : sc.potential_demand)
    if (!(v >= 0)) {
      fail("potential_demand", "entries must be >= 0");
      break;
    }
  if (!(sc.c_av >= 0)) fail("C_av", "must be >= 0");
  if (!(sc.rp_max > 0)) fail("rp_max", "must be > 0");
  if (!(sc.wp_max > 0)) fail("wp_max", "must be > 0");
  if (!std::isfinite(sc.pi0)) fail("pi0", "must be finite");
  if (sc.policy.max_amod_wait && !(*sc.policy.max_amod_wait > 0)) fail("policy.max_amod_wait", "must be > 0");
  if (!(sc.policy.subsidy >= 0)) fail("policy.subsidy", "must be >= 0");
  const auto& bd = sc.bounds;
  if (!(bd.base_fare_max > 0)) fail("bounds.base_fare_max", "must be > 0");
  if (!(bd.rate_max > 0)) fail("bounds.rate_max", "must be > 0");
  if (!(bd.idle_min > 0) || !(bd.idle_max > bd.idle_min)) fail("bounds.idle", "need 0 < idle_min < idle_max");
  if (sc.policy.max_amod_wait)
    for (std::size_t z = 0; z < M; ++z)
      if (idle_floor(sc, z) > bd.idle_max)
        fail("policy.max_amod_wait", "floor for zone " + std::to_string(z) + " exceeds idle_max");
  if (!errs.empty()) {
    std::string msg;
    for (const auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(Errc::validation, msg, first);
  }
}

inline DemandTensor compute_demand(const Scenario& sc, const TncStrategy& tnc, const TransitStrategy& transit) {
  return compute_demand(sc.network, sc.behavior, sc.policy, sc.potential_demand, tnc, transit);
}

/// A neutral starting strategy pair used when no warm start is supplied.
inline TncStrategy default_tnc(const Scenario& sc) {
  const std::size_t M = sc.zone_count();
  TncStrategy t{0.25 * sc.bounds.base_fare_max, std::vector<double>(M, 0.2 * sc.bounds.rate_max),
                std::vector<double>(M, 0.0)};
  for (std::size_t i = 0; i < M; ++i)
    t.idle[i] = std::clamp(50.0, idle_floor(sc, i), sc.bounds.idle_max);
  return t;
}

inline TransitStrategy default_transit(const Scenario& sc) {
  TransitStrategy t{0.5 * sc.rp_max, {}};
  for (const auto& l : sc.network.lines) t.frequency.push_back(std::clamp(10.0, l.f_min, l.f_max));
  return t;
}

}  // namespace modalgame
