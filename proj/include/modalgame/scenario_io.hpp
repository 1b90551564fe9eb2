#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core_model.hpp"
#include "error.hpp"
#include "scenario.hpp"

namespace modalgame {

inline constexpr int kScenarioSchemaVersion = 1;

// Scenario files carry waits and time weights per minute; the library works in hours.
namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw Error(Errc::validation, "missing field", path.empty() ? key : path + "." + key);
  return j.at(key);
}

inline double num(const json& j, const char* key, const std::string& path) {
  const auto& v = require(j, key, path);
  if (!v.is_number()) throw Error(Errc::validation, "expected a number", path.empty() ? key : path + "." + key);
  return v.get<double>();
}

inline Matrix read_matrix(const json& j, std::size_t M, const std::string& field) {
  if (!j.is_array() || j.size() != M) throw Error(Errc::dimension_mismatch, "expected MxM matrix", field);
  Matrix m(M, M);
  for (std::size_t r = 0; r < M; ++r) {
    if (!j[r].is_array() || j[r].size() != M) throw Error(Errc::dimension_mismatch, "expected MxM matrix", field);
    for (std::size_t c = 0; c < M; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline json write_matrix(const Matrix& m) {
  json a = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

inline std::vector<double> read_cube(const json& j, std::size_t M, std::size_t K, const std::string& field) {
  std::vector<double> v(M * M * K);
  if (!j.is_array() || j.size() != M) throw Error(Errc::dimension_mismatch, "expected MxMxK array", field);
  for (std::size_t a = 0; a < M; ++a) {
    if (!j[a].is_array() || j[a].size() != M) throw Error(Errc::dimension_mismatch, "expected MxMxK array", field);
    for (std::size_t b = 0; b < M; ++b) {
      const auto& c = j[a][b];
      if (!c.is_array() || c.size() != K) throw Error(Errc::dimension_mismatch, "expected MxMxK array", field);
      for (std::size_t k = 0; k < K; ++k) v[(a * M + b) * K + k] = c[k].get<double>();
    }
  }
  return v;
}

inline json write_cube(const std::vector<double>& v, std::size_t M, std::size_t K) {
  json a = json::array();
  for (std::size_t i = 0; i < M; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < M; ++j) {
      json cell = json::array();
      for (std::size_t k = 0; k < K; ++k) cell.push_back(v[(i * M + j) * K + k]);
      row.push_back(cell);
    }
    a.push_back(row);
  }
  return a;
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::num;
  using detail::require;
  if (!j.is_object()) throw Error(Errc::parse, "scenario must be a JSON object");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    throw Error(Errc::schema_version, "missing schema_version", "schema_version");
  if (j["schema_version"].get<int>() != kScenarioSchemaVersion)
    throw Error(Errc::schema_version, "unsupported schema_version " + j["schema_version"].dump(), "schema_version");

  std::vector<Zone> zones;
  const auto& jz = require(j, "zones", "");
  for (std::size_t z = 0; z < jz.size(); ++z) {
    const std::string p = "zones[" + std::to_string(z) + "]";
    const auto& e = jz[z];
    Zone zn;
    zn.name = require(e, "name", p).get<std::string>();
    zn.area = num(e, "area_sq_miles", p);
    zn.matching_scale = num(e, "matching_scale_minutes", p) / 60.0;
    zn.firstmile_scale = num(e, "firstmile_scale_miles", p);
    zn.station_count = num(e, "station_count", p);
    zn.underserved = require(e, "underserved", p).get<bool>();
    zn.population_split = require(e, "population_split", p).get<std::vector<double>>();
    zones.push_back(std::move(zn));
  }
  auto zone_index = [&](const std::string& name, const std::string& field) {
    for (std::size_t z = 0; z < zones.size(); ++z)
      if (zones[z].name == name) return z;
    throw Error(Errc::validation, "unknown zone '" + name + "'", field);
  };
  std::vector<TransitLine> lines;
  const auto& jl = require(j, "lines", "");
  for (std::size_t l = 0; l < jl.size(); ++l) {
    const std::string p = "lines[" + std::to_string(l) + "]";
    const auto& e = jl[l];
    TransitLine ln;
    ln.name = require(e, "name", p).get<std::string>();
    for (const auto& s : require(e, "stations", p)) ln.stations.push_back(zone_index(s.get<std::string>(), p + ".stations"));
    ln.op_cost = num(e, "op_cost_per_hour", p);
    ln.f_min = num(e, "frequency_min_per_hour", p);
    ln.f_max = num(e, "frequency_max_per_hour", p);
    lines.push_back(std::move(ln));
  }
  const std::size_t M = zones.size();
  Scenario sc;
  sc.network = build_network(std::move(zones), std::move(lines),
                             detail::read_matrix(require(j, "road_distance_miles", ""), M, "road_distance_miles"),
                             detail::read_matrix(require(j, "transit_distance_miles", ""), M, "transit_distance_miles"));

  const auto& jb = require(j, "behavior", "");
  auto& b = sc.behavior;
  b.epsilon = num(jb, "epsilon", "behavior");
  b.v_a = num(jb, "speed_amod_mph", "behavior");
  b.v_p = num(jb, "speed_transit_mph", "behavior");
  b.v_w = num(jb, "speed_walk_mph", "behavior");
  const auto& jc = require(jb, "classes", "behavior");
  for (std::size_t k = 0; k < jc.size(); ++k) {
    const std::string p = "behavior.classes[" + std::to_string(k) + "]";
    b.classes.push_back({num(jc[k], "alpha_per_minute", p) * 60.0, num(jc[k], "beta_per_minute", p) * 60.0,
                         num(jc[k], "gamma_per_dollar", p), num(jc[k], "theta_per_minute", p) * 60.0});
  }
  const std::size_t K = b.classes.size();
  b.outside_cost = detail::read_cube(require(jb, "outside_cost", "behavior"), M, K, "behavior.outside_cost");
  sc.potential_demand = detail::read_cube(require(j, "potential_demand_per_hour", ""), M, K, "potential_demand_per_hour");
  sc.c_av = num(j, "c_av_per_hour", "");
  sc.rp_max = num(j, "transit_fare_max_per_mile", "");
  sc.wp_max = num(j, "transit_wait_max_minutes", "") / 60.0;
  sc.pi0 = num(j, "transit_profit_floor_per_hour", "");
  if (j.contains("policy")) {
    const auto& jp = j["policy"];
    if (jp.contains("amod_wait_max_minutes") && !jp["amod_wait_max_minutes"].is_null())
      sc.policy.max_amod_wait = jp["amod_wait_max_minutes"].get<double>() / 60.0;
    if (jp.contains("subsidy_per_leg")) sc.policy.subsidy = jp["subsidy_per_leg"].get<double>();
  }
  if (j.contains("bounds")) {
    const auto& jd = j["bounds"];
    if (jd.contains("base_fare_max")) sc.bounds.base_fare_max = jd["base_fare_max"].get<double>();
    if (jd.contains("rate_max_per_mile")) sc.bounds.rate_max = jd["rate_max_per_mile"].get<double>();
    if (jd.contains("idle_min")) sc.bounds.idle_min = jd["idle_min"].get<double>();
    if (jd.contains("idle_max")) sc.bounds.idle_max = jd["idle_max"].get<double>();
  }
  validate_scenario(sc);
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  using nlohmann::json;
  const std::size_t M = sc.zone_count(), K = sc.class_count();
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  json zones = json::array();
  for (const auto& z : sc.network.zones)
    zones.push_back({{"name", z.name},
                     {"area_sq_miles", z.area},
                     {"matching_scale_minutes", z.matching_scale * 60.0},
                     {"firstmile_scale_miles", z.firstmile_scale},
                     {"station_count", z.station_count},
                     {"underserved", z.underserved},
                     {"population_split", z.population_split}});
  j["zones"] = zones;
  json lines = json::array();
  for (const auto& l : sc.network.lines) {
    json st = json::array();
    for (std::size_t z : l.stations) st.push_back(sc.network.zones[z].name);
    lines.push_back({{"name", l.name},
                     {"stations", st},
                     {"op_cost_per_hour", l.op_cost},
                     {"frequency_min_per_hour", l.f_min},
                     {"frequency_max_per_hour", l.f_max}});
  }
  j["lines"] = lines;
  j["road_distance_miles"] = detail::write_matrix(sc.network.road_distance);
  j["transit_distance_miles"] = detail::write_matrix(sc.network.transit_distance);
  json classes = json::array();
  for (const auto& c : sc.behavior.classes)
    classes.push_back({{"alpha_per_minute", c.alpha / 60.0},
                       {"beta_per_minute", c.beta / 60.0},
                       {"gamma_per_dollar", c.gamma},
                       {"theta_per_minute", c.theta / 60.0}});
  j["behavior"] = {{"epsilon", sc.behavior.epsilon},
                   {"speed_amod_mph", sc.behavior.v_a},
                   {"speed_transit_mph", sc.behavior.v_p},
                   {"speed_walk_mph", sc.behavior.v_w},
                   {"classes", classes},
                   {"outside_cost", detail::write_cube(sc.behavior.outside_cost, M, K)}};
  j["potential_demand_per_hour"] = detail::write_cube(sc.potential_demand, M, K);
  j["c_av_per_hour"] = sc.c_av;
  j["transit_fare_max_per_mile"] = sc.rp_max;
  j["transit_wait_max_minutes"] = sc.wp_max * 60.0;
  j["transit_profit_floor_per_hour"] = sc.pi0;
  j["policy"] = {{"amod_wait_max_minutes", sc.policy.max_amod_wait ? json(*sc.policy.max_amod_wait * 60.0) : json()},
                 {"subsidy_per_leg", sc.policy.subsidy}};
  j["bounds"] = {{"base_fare_max", sc.bounds.base_fare_max},
                 {"rate_max_per_mile", sc.bounds.rate_max},
                 {"idle_min", sc.bounds.idle_min},
                 {"idle_max", sc.bounds.idle_max}};
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string(e.what()));
  }
  try {
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string(e.what()));
  }
}

inline std::string scenario_dump(const Scenario& sc) { return scenario_to_json(sc).dump(1) + "\n"; }

inline void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path);
  out << scenario_dump(sc);
  if (!out) throw Error(Errc::io, "write failed for " + path);
}

/// Knobs for the synthetic 18-zone San Francisco stand-in.
struct SfSynthConfig {
  double tnc_trips_per_hour = 7000.0;   // current ride-hailing volume; lambda0 = this / amod_share
  double amod_share = 0.15;
  double gravity_length_miles = 2.5;
  double core_density = 3.0;
  double remote_density = 1.0;
  double noise = 0.5;                   // multiplicative demand noise half-width
  double outside_cost_per_mile = 8.0;   // high-income, core origin ($/mile)
  double outside_cost_fixed = 0.0;      // added to every outside cost ($)
  double remote_outside_factor = 1.5;
  double transit_vehicle_cost_per_hour = 120.0;
  double c_av = 30.0;
};

namespace detail {

inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

struct SfZoneSeed {
  const char* name;
  double x, y, area;
  bool underserved;
};

// Approximate centroids (miles east/north of the south-west corner) and areas (sq mi).
inline constexpr SfZoneSeed kSfZones[] = {
    {"94102", 5.0, 4.6, 0.73, false},    {"94103", 5.6, 4.3, 1.4, false},
    {"94104-05-11", 6.1, 5.2, 0.8, false}, {"94107", 6.2, 3.6, 2.3, false},
    {"94108-33", 5.6, 5.7, 0.95, false}, {"94109", 4.9, 5.4, 1.2, false},
    {"94110", 5.2, 2.8, 2.4, false},     {"94112", 4.0, 0.6, 3.4, true},
    {"94114", 4.2, 3.3, 1.2, true},      {"94115-23", 4.1, 5.2, 2.2, false},
    {"94116", 1.6, 1.8, 2.5, true},      {"94117", 3.6, 4.1, 1.1, true},
    {"94118", 2.6, 4.9, 1.8, true},      {"94121", 1.0, 5.0, 2.1, true},
    {"94122", 1.6, 3.2, 2.6, true},      {"94124", 6.4, 1.5, 4.4, true},
    {"94131", 3.6, 2.2, 2.3, true},      {"94132", 1.4, 0.6, 2.6, true},
};

struct SfLineSeed {
  const char* name;
  std::vector<std::size_t> stops;  // 1-based zone numbers
};

inline std::vector<SfLineSeed> sf_lines() {
  return {{"F", {9, 1, 2, 3, 5}},          {"J", {17, 9, 7, 2, 1, 3}},
          {"KT", {18, 17, 9, 1, 3, 4, 16}}, {"M", {8, 18, 11, 9, 1, 3}},
          {"N", {15, 12, 9, 1, 2, 3, 4}},  {"5R", {14, 13, 12, 10, 1, 3}},
          {"9R", {16, 7, 2, 1, 3}},        {"38R", {14, 13, 10, 6, 1, 3}}};
}

}  // namespace detail

/// Seeded synthetic scenario: 18 zones, 8 lines, 3 income classes.
inline Scenario synthesize_sf_scenario(std::uint64_t seed, const SfSynthConfig& cfg = {}) {
  if (!(cfg.tnc_trips_per_hour > 0) || !(cfg.amod_share > 0 && cfg.amod_share < 1) ||
      !(cfg.gravity_length_miles > 0) || !(cfg.noise >= 0 && cfg.noise < 1) || !(cfg.outside_cost_per_mile >= 0) ||
      !(cfg.transit_vehicle_cost_per_hour > 0))
    throw Error(Errc::config, "invalid synthesis configuration");
  std::mt19937_64 rng(seed);
  constexpr std::size_t M = std::size(detail::kSfZones);
  constexpr std::size_t K = 3;
  const double va = 17.937, vp = 14.349, vw = 3.48;

  const auto seeds = detail::sf_lines();
  std::vector<int> lines_at(M, 0);
  for (const auto& l : seeds)
    for (std::size_t z : l.stops) lines_at[z - 1] += 1;

  std::vector<Zone> zones;
  for (std::size_t z = 0; z < M; ++z) {
    const auto& s = detail::kSfZones[z];
    Zone zn;
    zn.name = s.name;
    zn.area = s.area;
    zn.matching_scale = 7.894 * s.area / 60.0;
    zn.firstmile_scale = 1.609 * s.area;
    zn.station_count = 3.0 * lines_at[z] + 1.0;
    zn.underserved = s.underserved;
    zn.population_split = s.underserved ? std::vector<double>{0.4, 0.5, 0.1} : std::vector<double>{0.2, 0.5, 0.3};
    zones.push_back(std::move(zn));
  }
  auto euclid = [](std::size_t a, std::size_t b) {
    const auto& p = detail::kSfZones[a];
    const auto& q = detail::kSfZones[b];
    return std::hypot(p.x - q.x, p.y - q.y);
  };
  Matrix road(M, M), transit(M, M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      road(i, j) = i == j ? 0.6 * std::sqrt(detail::kSfZones[i].area) : 1.25 * euclid(i, j);
      transit(i, j) = i == j ? 0.0 : 1.35 * euclid(i, j);
    }
  std::vector<TransitLine> lines;
  for (const auto& s : seeds) {
    TransitLine ln;
    ln.name = s.name;
    double len = 0.0;
    for (std::size_t q = 0; q < s.stops.size(); ++q) {
      ln.stations.push_back(s.stops[q] - 1);
      if (q > 0) len += 1.35 * euclid(s.stops[q - 1] - 1, s.stops[q] - 1);
    }
    ln.op_cost = 2.0 * len / vp * cfg.transit_vehicle_cost_per_hour;
    ln.f_min = 0.1;
    ln.f_max = 60.0;
    lines.push_back(std::move(ln));
  }

  Scenario sc;
  sc.network = build_network(std::move(zones), std::move(lines), std::move(road), std::move(transit));
  auto& b = sc.behavior;
  b.epsilon = 0.10;
  b.v_a = va;
  b.v_p = vp;
  b.v_w = vw;
  const double alpha[K] = {0.5, 1.0, 2.0}, beta[K] = {0.15, 0.30, 0.65}, gamma[K] = {3.0, 1.5, 0.75},
               theta[K] = {0.5, 1.0, 2.0};
  for (std::size_t k = 0; k < K; ++k) b.classes.push_back({alpha[k] * 60.0, beta[k] * 60.0, gamma[k], theta[k] * 60.0});

  const double class_factor[K] = {1.5, 1.25, 1.0};
  b.outside_cost.assign(M * M * K, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    const double rho = sc.network.zones[i].underserved ? cfg.remote_outside_factor : 1.0;
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 0; k < K; ++k)
        b.outside_cost[(i * M + j) * K + k] =
            class_factor[k] * (rho * cfg.outside_cost_per_mile * sc.network.road_distance(i, j) + cfg.outside_cost_fixed);
  }

  std::vector<double> weight(M);
  for (std::size_t i = 0; i < M; ++i)
    weight[i] = (sc.network.zones[i].underserved ? cfg.remote_density : cfg.core_density) * sc.network.zones[i].area;
  std::vector<double> base(M * M);
  double total = 0.0;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      const double noise = 1.0 - cfg.noise + 2.0 * cfg.noise * detail::unit_uniform(rng);
      base[i * M + j] = weight[i] * weight[j] * std::exp(-sc.network.road_distance(i, j) / cfg.gravity_length_miles) * noise;
      total += base[i * M + j];
    }
  sc.potential_demand.assign(M * M * K, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      const double lam0 = base[i * M + j] / total * cfg.tnc_trips_per_hour / cfg.amod_share;
      for (std::size_t k = 0; k < K; ++k)
        sc.potential_demand[(i * M + j) * K + k] = lam0 * sc.network.zones[i].population_split[k];
    }
  sc.c_av = cfg.c_av;
  sc.rp_max = 3.0;
  sc.wp_max = 20.0 / 60.0;
  sc.pi0 = 1e4;
  validate_scenario(sc);
  return sc;
}

}  // namespace modalgame
