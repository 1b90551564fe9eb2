#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "choice.hpp"
#include "equilibrium.hpp"
#include "equity.hpp"
#include "error.hpp"
#include "scenario.hpp"

namespace modalgame {

inline constexpr int kResultsSchemaVersion = 1;

/// Swept parameter. amod_wait_max values are minutes; +inf disables the requirement.
enum class SweepAxis { c_av, amod_wait_max, subsidy };

inline const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::c_av: return "c_av";
    case SweepAxis::amod_wait_max: return "amod_wait_max";
    case SweepAxis::subsidy: return "subsidy";
  }
  return "?";
}

inline SweepAxis parse_axis(const std::string& s) {
  if (s == "c_av" || s == "C_av") return SweepAxis::c_av;
  if (s == "amod_wait_max" || s == "w_max") return SweepAxis::amod_wait_max;
  if (s == "subsidy" || s == "s") return SweepAxis::subsidy;
  throw Error(Errc::config, "unknown sweep axis '" + s + "'");
}

/// Apply one axis value to a copy of the scenario.
inline Scenario patch_scenario(Scenario sc, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::c_av:
      if (!(value > 0)) throw Error(Errc::validation, "C_av must be positive", "C_av");
      sc.c_av = value;
      break;
    case SweepAxis::amod_wait_max:
      if (!(value > 0)) throw Error(Errc::validation, "amod wait cap must be positive", "policy.amod_wait_max_minutes");
      if (std::isinf(value)) sc.policy.max_amod_wait.reset();
      else sc.policy.max_amod_wait = value / 60.0;
      break;
    case SweepAxis::subsidy:
      if (!(value >= 0)) throw Error(Errc::validation, "subsidy must be nonnegative", "policy.subsidy_per_leg");
      sc.policy.subsidy = value;
      break;
  }
  return sc;
}

/// Market outcomes for a strategy pair.
struct MarketSummary {
  double tnc_profit = 0.0;
  double tnc_revenue = 0.0;
  double fleet_cost = 0.0;
  double total_idle = 0.0;
  double avg_amod_fare = 0.0;  // demand-weighted b + r_i l^a over direct AMoD trips
  double transit_ridership = 0.0;
  double transit_revenue = 0.0;
  double transit_cost = 0.0;
  std::vector<std::vector<double>> shares;  // [class][mode]
  std::vector<double> total_shares;         // [mode]
  bool operator==(const MarketSummary&) const = default;
};

inline MarketSummary summarize_market(const Scenario& sc, const TncStrategy& tnc, const TransitStrategy& transit) {
  const std::size_t M = sc.zone_count(), K = sc.class_count();
  MarketSummary s;
  s.tnc_profit = tnc_profit(tnc, transit, sc);
  const auto d = compute_demand(sc, tnc, transit);
  s.total_idle = std::accumulate(tnc.idle.begin(), tnc.idle.end(), 0.0);
  s.fleet_cost = sc.c_av * fleet_hours(d, amod_waits(sc.network, tnc), sc.network, sc.behavior.v_a, tnc.idle);
  s.tnc_revenue = s.tnc_profit + s.fleet_cost;
  double fare = 0.0, trips = 0.0;
  s.shares.assign(K, std::vector<double>(kModeCount, 0.0));
  s.total_shares.assign(kModeCount, 0.0);
  double all = 0.0;
  std::vector<double> per_class(K, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t t = 0; t < kModeCount; ++t) {
          const double q = d.flow(i, j, k, static_cast<Mode>(t));
          s.shares[k][t] += q;
          s.total_shares[t] += q;
          per_class[k] += q;
          all += q;
        }
        const double qa = d.flow(i, j, k, Mode::amod);
        fare += qa * (tnc.base_fare + tnc.rate[i] * sc.network.road_distance(i, j));
        trips += qa;
      }
  for (std::size_t k = 0; k < K; ++k)
    for (auto& v : s.shares[k]) v = per_class[k] > 0 ? v / per_class[k] : 0.0;
  for (auto& v : s.total_shares) v = all > 0 ? v / all : 0.0;
  s.avg_amod_fare = trips > 0 ? fare / trips : 0.0;
  s.transit_ridership = transit_ridership(transit, tnc, sc);
  s.transit_revenue = transit_revenue(transit, tnc, sc);
  s.transit_cost = transit_operating_cost(transit, sc);
  return s;
}

struct SweepRecord {
  double value = 0.0;
  std::string error;  // empty when the point solved
  std::size_t iterations = 0;
  bool converged = false;
  TncStrategy tnc;
  TransitStrategy transit;
  MarketSummary market;
  bool has_expost = false;
  double tnc_upper = 0.0, tnc_lower = 0.0, epsilon_abs = 0.0, epsilon_rel = 0.0;
  std::vector<double> per_cell;
  bool transit_global = false;
  double certificate_margin = 0.0;
  TheilReport theil;
  bool ok() const { return error.empty(); }
  bool operator==(const SweepRecord& o) const {
    return value == o.value && error == o.error && iterations == o.iterations && converged == o.converged &&
           tnc == o.tnc && transit == o.transit && market == o.market && has_expost == o.has_expost &&
           tnc_upper == o.tnc_upper && tnc_lower == o.tnc_lower && epsilon_abs == o.epsilon_abs &&
           epsilon_rel == o.epsilon_rel && per_cell == o.per_cell && transit_global == o.transit_global &&
           certificate_margin == o.certificate_margin && theil.T == o.theil.T && theil.within == o.theil.within &&
           theil.between == o.theil.between && theil.shift == o.theil.shift;
  }
};

struct SweepResults {
  SweepAxis axis = SweepAxis::c_av;
  std::vector<SweepRecord> records;  // ascending by value
  bool operator==(const SweepResults&) const = default;
};

struct SweepConfig {
  EquilibriumConfig equilibrium{};
  PartitionStrategy partition = PartitionStrategy::pairwise;
  bool expost = true;
};

/// Solve the game at each axis value in the given order, warm-starting from the
/// previous point. Failures are recorded per point and the sweep continues.
inline SweepResults run_sweep(const Scenario& base, SweepAxis axis, const std::vector<double>& values,
                              const SweepConfig& cfg = {}) {
  if (values.empty()) throw Error(Errc::config, "sweep needs at least one value");
  SweepResults out;
  out.axis = axis;
  TncStrategy tnc = default_tnc(base);
  TransitStrategy transit = default_transit(base);
  const double shift = accessibility_shift(base);
  const Partition part = partition_zones(base.network, cfg.partition);
  for (double v : values) {
    SweepRecord rec;
    rec.value = v;
    try {
      const Scenario sc = patch_scenario(base, axis, v);
      const auto ce = best_response_iterate(clamp_to_box(tnc, sc), transit, sc, cfg.equilibrium);
      rec.iterations = ce.iterations;
      rec.converged = ce.converged;
      rec.tnc = ce.tnc;
      rec.transit = ce.transit;
      rec.market = summarize_market(sc, ce.tnc, ce.transit);
      const auto d = compute_demand(sc, ce.tnc, ce.transit);
      rec.theil = theil_decompose(aggregate_accessibility(d, accessibility_tensor(sc, ce.tnc, ce.transit), shift));
      rec.theil.shift = shift;
      if (cfg.expost) {
        const auto rep = expost_evaluate(ce, sc, part, cfg.equilibrium);
        rec.has_expost = true;
        rec.tnc_upper = rep.tnc_upper;
        rec.tnc_lower = rep.tnc_lower;
        rec.epsilon_abs = rep.epsilon_abs;
        rec.epsilon_rel = rep.epsilon_rel;
        rec.per_cell = rep.per_cell;
        rec.transit_global = rep.transit_global;
        rec.certificate_margin = rep.certificate.min_margin;
      }
      tnc = ce.tnc;
      transit = ce.transit;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    out.records.push_back(std::move(rec));
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const SweepRecord& a, const SweepRecord& b) { return a.value < b.value; });
  return out;
}

/// CSV columns, in order. Shares are over all classes.
inline std::vector<std::string> csv_columns() {
  std::vector<std::string> c = {"axis",           "value",          "status",         "iterations",
                                "converged",      "tnc_profit",     "tnc_upper",      "tnc_lower",
                                "epsilon_abs",    "epsilon_rel",    "transit_global", "certificate_margin",
                                "base_fare",      "mean_rate",      "total_idle",     "avg_amod_fare",
                                "tnc_revenue",    "fleet_cost",     "transit_fare",   "mean_frequency",
                                "transit_ridership", "transit_revenue", "transit_cost", "theil_T",
                                "theil_within",   "theil_between"};
  for (std::size_t t = 0; t < kModeCount; ++t) c.push_back(std::string("share_") + mode_name(static_cast<Mode>(t)));
  c.push_back("error");
  return c;
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char ch : s) {
    if (ch == '"') o += '"';
    o += ch;
  }
  return o + "\"";
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline nlohmann::json num_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }
inline double from_num_or_null(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace detail

inline std::string results_to_csv(const SweepResults& r) {
  std::ostringstream os;
  const auto cols = csv_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << "\n";
  for (const auto& x : r.records) {
    std::vector<std::string> row = {axis_name(r.axis), detail::fmt(x.value), x.ok() ? "ok" : "failed",
                                    std::to_string(x.iterations), x.converged ? "1" : "0"};
    const std::vector<double> nums = {x.market.tnc_profit,      x.tnc_upper,
                                      x.tnc_lower,              x.epsilon_abs,
                                      x.epsilon_rel};
    for (double v : nums) row.push_back(detail::fmt(v));
    row.push_back(x.transit_global ? "1" : "0");
    for (double v : {x.certificate_margin, x.tnc.base_fare, detail::mean_of(x.tnc.rate), x.market.total_idle,
                     x.market.avg_amod_fare, x.market.tnc_revenue, x.market.fleet_cost, x.transit.fare_per_mile,
                     detail::mean_of(x.transit.frequency), x.market.transit_ridership, x.market.transit_revenue,
                     x.market.transit_cost, x.theil.T, x.theil.within, x.theil.between})
      row.push_back(detail::fmt(v));
    for (std::size_t t = 0; t < kModeCount; ++t)
      row.push_back(detail::fmt(x.market.total_shares.empty() ? 0.0 : x.market.total_shares[t]));
    row.push_back(detail::csv_escape(x.error));
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << "\n";
  }
  return os.str();
}

inline nlohmann::json record_to_json(const SweepRecord& x) {
  using nlohmann::json;
  json m = {{"tnc_profit", x.market.tnc_profit},
            {"tnc_revenue", x.market.tnc_revenue},
            {"fleet_cost", x.market.fleet_cost},
            {"total_idle", x.market.total_idle},
            {"avg_amod_fare", x.market.avg_amod_fare},
            {"transit_ridership", x.market.transit_ridership},
            {"transit_revenue", x.market.transit_revenue},
            {"transit_cost", x.market.transit_cost},
            {"shares", x.market.shares},
            {"total_shares", x.market.total_shares}};
  return {{"value", detail::num_or_null(x.value)},
          {"error", x.error},
          {"iterations", x.iterations},
          {"converged", x.converged},
          {"tnc", {{"base_fare", x.tnc.base_fare}, {"rate", x.tnc.rate}, {"idle", x.tnc.idle}}},
          {"transit", {{"fare_per_mile", x.transit.fare_per_mile}, {"frequency", x.transit.frequency}}},
          {"market", m},
          {"has_expost", x.has_expost},
          {"tnc_upper", x.tnc_upper},
          {"tnc_lower", x.tnc_lower},
          {"epsilon_abs", x.epsilon_abs},
          {"epsilon_rel", x.epsilon_rel},
          {"per_cell", x.per_cell},
          {"transit_global", x.transit_global},
          {"certificate_margin", detail::num_or_null(x.certificate_margin)},
          {"theil", {{"T", x.theil.T}, {"within", x.theil.within}, {"between", x.theil.between},
                     {"shift", x.theil.shift}}}};
}

/// Throws nlohmann exceptions on malformed input; callers translate to ParseError.
inline SweepRecord record_from_json(const nlohmann::json& e) {
  SweepRecord x;
  x.value = detail::from_num_or_null(e.at("value"));
  x.error = e.at("error").get<std::string>();
  x.iterations = e.at("iterations").get<std::size_t>();
  x.converged = e.at("converged").get<bool>();
  x.tnc.base_fare = e.at("tnc").at("base_fare").get<double>();
  x.tnc.rate = e.at("tnc").at("rate").get<std::vector<double>>();
  x.tnc.idle = e.at("tnc").at("idle").get<std::vector<double>>();
  x.transit.fare_per_mile = e.at("transit").at("fare_per_mile").get<double>();
  x.transit.frequency = e.at("transit").at("frequency").get<std::vector<double>>();
  const auto& m = e.at("market");
  x.market.tnc_profit = m.at("tnc_profit").get<double>();
  x.market.tnc_revenue = m.at("tnc_revenue").get<double>();
  x.market.fleet_cost = m.at("fleet_cost").get<double>();
  x.market.total_idle = m.at("total_idle").get<double>();
  x.market.avg_amod_fare = m.at("avg_amod_fare").get<double>();
  x.market.transit_ridership = m.at("transit_ridership").get<double>();
  x.market.transit_revenue = m.at("transit_revenue").get<double>();
  x.market.transit_cost = m.at("transit_cost").get<double>();
  x.market.shares = m.at("shares").get<std::vector<std::vector<double>>>();
  x.market.total_shares = m.at("total_shares").get<std::vector<double>>();
  x.has_expost = e.at("has_expost").get<bool>();
  x.tnc_upper = e.at("tnc_upper").get<double>();
  x.tnc_lower = e.at("tnc_lower").get<double>();
  x.epsilon_abs = e.at("epsilon_abs").get<double>();
  x.epsilon_rel = e.at("epsilon_rel").get<double>();
  x.per_cell = e.at("per_cell").get<std::vector<double>>();
  x.transit_global = e.at("transit_global").get<bool>();
  x.certificate_margin = detail::from_num_or_null(e.at("certificate_margin"));
  const auto& t = e.at("theil");
  x.theil = {t.at("T").get<double>(), t.at("within").get<double>(), t.at("between").get<double>(),
             t.at("shift").get<double>()};
  return x;
}

inline nlohmann::json results_to_json(const SweepResults& r) {
  nlohmann::json j;
  j["schema_version"] = kResultsSchemaVersion;
  j["axis"] = axis_name(r.axis);
  j["records"] = nlohmann::json::array();
  for (const auto& x : r.records) j["records"].push_back(record_to_json(x));
  return j;
}

inline SweepResults results_from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kResultsSchemaVersion)
      throw Error(Errc::schema_version, "unsupported results schema", "schema_version");
    SweepResults r;
    r.axis = parse_axis(j.at("axis").get<std::string>());
    for (const auto& e : j.at("records")) r.records.push_back(record_from_json(e));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, e.what());
  }
}

enum class ExportFormat { csv, json };

inline ExportFormat parse_format(const std::string& s) {
  if (s == "csv") return ExportFormat::csv;
  if (s == "json") return ExportFormat::json;
  throw Error(Errc::config, "unknown format '" + s + "'");
}

inline std::string render_results(const SweepResults& r, ExportFormat f) {
  return f == ExportFormat::csv ? results_to_csv(r) : results_to_json(r).dump(1) + "\n";
}

inline void export_results(const SweepResults& r, const std::string& path, ExportFormat f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path);
  out << render_results(r, f);
  if (!out) throw Error(Errc::io, "write failed for " + path);
}

inline SweepResults load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, e.what());
  }
  return results_from_json(j);
}

}  // namespace modalgame
