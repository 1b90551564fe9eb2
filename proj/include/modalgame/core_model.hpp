#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace modalgame {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Zone {
  std::string name;
  double area = 1.0;              // sq miles
  double matching_scale = 1.0;    // A_i, hours * sqrt(vehicles)
  double firstmile_scale = 1.0;   // B_i, miles * sqrt(stations)
  double station_count = 1.0;     // N_i^T
  bool underserved = false;
  std::vector<double> population_split{1.0};

  friend bool operator==(const Zone&, const Zone&) = default;
};

struct TransitLine {
  std::string name;
  std::vector<std::size_t> stations;  // zone indices in visiting order
  double op_cost = 1.0;               // C_l, $ per vehicle-hour
  double f_min = 0.1;                 // per hour
  double f_max = 60.0;

  friend bool operator==(const TransitLine&, const TransitLine&) = default;
};

/// A transit route is a sorted set of line indices.
using Route = std::vector<std::size_t>;

struct RouteSet {
  std::size_t origin = 0;
  std::size_t destination = 0;
  std::vector<Route> routes;

  std::size_t count() const noexcept { return routes.size(); }
  friend bool operator==(const RouteSet&, const RouteSet&) = default;
};

/// Per-OD weights relating transit waits to inverse frequencies: w_ij = phi_ij . (1/f).
class PhiMatrix {
 public:
  PhiMatrix() = default;
  PhiMatrix(std::size_t zones, std::size_t lines)
      : zones_(zones), lines_(lines), data_(zones * zones * lines, 0.0) {}

  std::size_t zones() const noexcept { return zones_; }
  std::size_t lines() const noexcept { return lines_; }

  std::span<double> row(std::size_t i, std::size_t j) {
    return {data_.data() + (i * zones_ + j) * lines_, lines_};
  }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * zones_ + j) * lines_, lines_};
  }

  friend bool operator==(const PhiMatrix&, const PhiMatrix&) = default;

 private:
  std::size_t zones_ = 0;
  std::size_t lines_ = 0;
  std::vector<double> data_;
};

struct MultimodalNetwork {
  std::vector<Zone> zones;
  std::vector<TransitLine> lines;
  Matrix road_distance;     // l^a_ij, miles
  Matrix transit_distance;  // l^p_ij, miles
  std::vector<double> firstmile;  // d_i, miles
  std::vector<RouteSet> route_sets;  // row-major over (i, j)
  PhiMatrix phi;

  std::size_t zone_count() const noexcept { return zones.size(); }
  std::size_t line_count() const noexcept { return lines.size(); }
  const RouteSet& routes(std::size_t i, std::size_t j) const {
    return route_sets[i * zones.size() + j];
  }

  friend bool operator==(const MultimodalNetwork&, const MultimodalNetwork&) = default;
};

enum class PartitionStrategy { pairwise, singleton, whole };

struct Partition {
  std::vector<std::vector<std::size_t>> cells;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> lines_by_zone(
    std::size_t zone_count, const std::vector<TransitLine>& lines) {
  std::vector<std::vector<std::size_t>> out(zone_count);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    for (std::size_t z : lines[l].stations) {
      if (z < zone_count && (out[z].empty() || out[z].back() != l)) out[z].push_back(l);
    }
  }
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

inline bool line_serves(const TransitLine& line, std::size_t zone) {
  return std::find(line.stations.begin(), line.stations.end(), zone) != line.stations.end();
}

inline bool lines_adjacent(const TransitLine& a, const TransitLine& b) {
  for (std::size_t z : a.stations)
    if (line_serves(b, z)) return true;
  return false;
}

}  // namespace detail

/// Minimal line-count routes between zones i and j, at most three lines.
/// For i == j a single route on the cheapest line through the zone.
inline RouteSet enumerate_transit_routes(std::size_t zone_count,
                                         const std::vector<TransitLine>& lines,
                                         std::size_t i, std::size_t j) {
  if (i >= zone_count || j >= zone_count)
    throw Error(Errc::dimension_mismatch, "zone index out of range");
  const auto by_zone = detail::lines_by_zone(zone_count, lines);
  RouteSet rs{i, j, {}};
  const auto& from = by_zone[i];
  const auto& to = by_zone[j];
  auto unreachable = [&] {
    return Error(Errc::unreachable_od, "no transit route from zone " + std::to_string(i + 1) +
                                           " to zone " + std::to_string(j + 1));
  };
  if (from.empty() || to.empty()) throw unreachable();

  if (i == j) {
    std::size_t best = from.front();
    for (std::size_t l : from)
      if (lines[l].op_cost < lines[best].op_cost) best = l;
    rs.routes.push_back({best});
    return rs;
  }

  auto serves_to = [&](std::size_t l) { return std::binary_search(to.begin(), to.end(), l); };
  auto add = [&](Route r) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    if (std::find(rs.routes.begin(), rs.routes.end(), r) == rs.routes.end())
      rs.routes.push_back(std::move(r));
  };

  for (std::size_t l : from)
    if (serves_to(l)) add({l});
  if (!rs.routes.empty()) return rs;

  const std::size_t L = lines.size();
  std::vector<char> adj(L * L, 0);
  for (std::size_t a = 0; a < L; ++a)
    for (std::size_t b = a + 1; b < L; ++b)
      adj[a * L + b] = adj[b * L + a] = detail::lines_adjacent(lines[a], lines[b]) ? 1 : 0;

  for (std::size_t a : from)
    for (std::size_t b : to)
      if (adj[a * L + b]) add({a, b});
  if (!rs.routes.empty()) return rs;

  for (std::size_t a : from)
    for (std::size_t m = 0; m < L; ++m)
      if (adj[a * L + m])
        for (std::size_t b : to)
          if (adj[m * L + b] && m != a && m != b) add({a, m, b});
  if (rs.routes.empty()) throw unreachable();
  std::sort(rs.routes.begin(), rs.routes.end());
  return rs;
}

inline PhiMatrix build_phi(const std::vector<RouteSet>& route_sets, std::size_t zone_count,
                           std::size_t line_count) {
  if (route_sets.size() != zone_count * zone_count)
    throw Error(Errc::dimension_mismatch, "route set count must be M*M");
  PhiMatrix phi(zone_count, line_count);
  for (const auto& rs : route_sets) {
    if (rs.routes.empty())
      throw Error(Errc::unreachable_od, "empty route set for OD (" + std::to_string(rs.origin + 1) +
                                            "," + std::to_string(rs.destination + 1) + ")");
    auto row = phi.row(rs.origin, rs.destination);
    const double inv = 1.0 / static_cast<double>(rs.routes.size());
    for (const auto& r : rs.routes)
      for (std::size_t l : r) {
        if (l >= line_count) throw Error(Errc::dimension_mismatch, "route references unknown line");
        row[l] += inv;
      }
  }
  return phi;
}

namespace detail {

inline void validate_zones(const std::vector<Zone>& zones, std::vector<std::string>& errs,
                           std::string& first_field) {
  auto fail = [&](const std::string& field, const std::string& msg) {
    if (first_field.empty()) first_field = field;
    errs.push_back(field + ": " + msg);
  };
  for (std::size_t z = 0; z < zones.size(); ++z) {
    const auto& zn = zones[z];
    const std::string p = "zones[" + std::to_string(z) + "]";
    if (!(zn.area > 0)) fail(p + ".area", "must be > 0");
    if (!(zn.matching_scale > 0)) fail(p + ".matching_scale", "must be > 0");
    if (!(zn.firstmile_scale > 0)) fail(p + ".firstmile_scale", "must be > 0");
    if (!(zn.station_count >= 1)) fail(p + ".station_count", "must be >= 1");
    double sum = 0;
    bool neg = false;
    for (double s : zn.population_split) {
      sum += s;
      neg = neg || !(s >= 0);
    }
    if (neg || zn.population_split.empty() || std::abs(sum - 1.0) > 1e-9)
      fail(p + ".population_split", "entries must be >= 0 and sum to 1");
  }
}

inline void validate_lines(const std::vector<TransitLine>& lines, std::size_t zone_count,
                           std::vector<std::string>& errs, std::string& first_field) {
  auto fail = [&](const std::string& field, const std::string& msg) {
    if (first_field.empty()) first_field = field;
    errs.push_back(field + ": " + msg);
  };
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto& ln = lines[l];
    const std::string p = "lines[" + std::to_string(l) + "]";
    if (!(ln.op_cost > 0)) fail(p + ".op_cost", "must be > 0");
    if (!(ln.f_min > 0) || !(ln.f_max >= ln.f_min)) fail(p + ".frequency", "need 0 < f_min <= f_max");
    if (ln.stations.empty()) fail(p + ".stations", "must be non-empty");
    for (std::size_t z : ln.stations)
      if (z >= zone_count) fail(p + ".stations", "unknown zone index " + std::to_string(z));
  }
}

}  // namespace detail

inline MultimodalNetwork build_network(std::vector<Zone> zones, std::vector<TransitLine> lines,
                                       Matrix road_distance, Matrix transit_distance) {
  const std::size_t M = zones.size();
  if (M == 0) throw Error(Errc::dimension_mismatch, "network needs at least one zone", "zones");
  if (road_distance.rows() != M || road_distance.cols() != M)
    throw Error(Errc::dimension_mismatch, "road distance matrix must be MxM", "road_distance");
  if (transit_distance.rows() != M || transit_distance.cols() != M)
    throw Error(Errc::dimension_mismatch, "transit distance matrix must be MxM", "transit_distance");

  std::vector<std::string> errs;
  std::string first_field;
  detail::validate_zones(zones, errs, first_field);
  detail::validate_lines(lines, M, errs, first_field);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      if (!(road_distance(i, j) >= 0)) {
        if (first_field.empty()) first_field = "road_distance";
        errs.push_back("road_distance[" + std::to_string(i) + "][" + std::to_string(j) + "]: must be >= 0");
      }
      if (!(transit_distance(i, j) >= 0)) {
        if (first_field.empty()) first_field = "transit_distance";
        errs.push_back("transit_distance[" + std::to_string(i) + "][" + std::to_string(j) + "]: must be >= 0");
      }
    }
  if (!errs.empty()) {
    std::string msg;
    for (const auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(Errc::validation, msg, first_field);
  }

  MultimodalNetwork net;
  net.zones = std::move(zones);
  net.lines = std::move(lines);
  net.road_distance = std::move(road_distance);
  net.transit_distance = std::move(transit_distance);
  net.firstmile.resize(M);
  for (std::size_t i = 0; i < M; ++i)
    net.firstmile[i] = net.zones[i].firstmile_scale / std::sqrt(net.zones[i].station_count);
  net.route_sets.reserve(M * M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      net.route_sets.push_back(enumerate_transit_routes(M, net.lines, i, j));
  net.phi = build_phi(net.route_sets, M, net.lines.size());
  return net;
}

inline Partition partition_zones(std::size_t zone_count, PartitionStrategy strategy) {
  Partition p;
  switch (strategy) {
    case PartitionStrategy::singleton:
      for (std::size_t z = 0; z < zone_count; ++z) p.cells.push_back({z});
      break;
    case PartitionStrategy::whole: {
      std::vector<std::size_t> all(zone_count);
      std::iota(all.begin(), all.end(), std::size_t{0});
      if (!all.empty()) p.cells.push_back(std::move(all));
      break;
    }
    case PartitionStrategy::pairwise:
      for (std::size_t z = 0; z < zone_count; z += 2) {
        if (z + 1 < zone_count) p.cells.push_back({z, z + 1});
        else p.cells.push_back({z});
      }
      break;
  }
  return p;
}

inline Partition partition_zones(const MultimodalNetwork& net, PartitionStrategy strategy) {
  return partition_zones(net.zone_count(), strategy);
}

}  // namespace modalgame
