#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "core_model.hpp"
#include "error.hpp"
#include "strategy.hpp"

namespace modalgame {

/// Travel modes: direct AMoD, transit, AMoD first mile + transit, transit + AMoD
/// last mile, AMoD on both ends, outside option.
enum class Mode : std::size_t { amod = 0, transit = 1, first_mile = 2, last_mile = 3, both = 4, outside = 5 };
inline constexpr std::size_t kModeCount = 6;

inline constexpr std::size_t idx(Mode m) noexcept { return static_cast<std::size_t>(m); }

inline constexpr const char* mode_name(Mode m) noexcept {
  constexpr const char* names[] = {"a", "p", "b1", "b2", "b3", "o"};
  return names[idx(m)];
}

using CostVector = std::array<double, kModeCount>;

/// Per-class weights. alpha, beta, theta in $/hour; gamma dimensionless.
struct IncomeClassParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double theta = 1.0;

  friend bool operator==(const IncomeClassParams&, const IncomeClassParams&) = default;
};

struct BehaviorParams {
  double epsilon = 0.1;
  double v_a = 20.0;  // mph
  double v_p = 15.0;
  double v_w = 3.0;
  std::vector<IncomeClassParams> classes;
  std::vector<double> outside_cost;  // flat index (i*M + j)*K + k

  std::size_t class_count() const noexcept { return classes.size(); }

  friend bool operator==(const BehaviorParams&, const BehaviorParams&) = default;
};

inline double amod_wait_time(double matching_scale, double idle) {
  if (!(idle > 0))
    throw Error(Errc::nonpositive_idle_fleet, "idle fleet must be positive, got " + std::to_string(idle));
  return matching_scale / std::sqrt(idle);
}

inline double transit_wait_time(std::span<const double> phi, std::span<const double> frequency) {
  if (phi.size() != frequency.size())
    throw Error(Errc::dimension_mismatch, "phi and frequency lengths differ");
  double w = 0.0;
  for (std::size_t l = 0; l < phi.size(); ++l) {
    if (phi[l] == 0.0) continue;
    if (!(frequency[l] > 0))
      throw Error(Errc::zero_frequency_on_used_line, "line " + std::to_string(l + 1) + " has frequency <= 0");
    w += phi[l] / frequency[l];
  }
  return w;
}

/// Waiting times implied by a strategy pair (hours).
struct ServiceLevels {
  std::vector<double> amod_wait;     // per zone
  std::vector<double> transit_wait;  // per OD, row-major
};

inline std::vector<double> amod_waits(const MultimodalNetwork& net, const TncStrategy& tnc) {
  const std::size_t M = net.zone_count();
  if (tnc.idle.size() != M || tnc.rate.size() != M)
    throw Error(Errc::dimension_mismatch, "TNC strategy length must equal zone count");
  std::vector<double> w(M);
  for (std::size_t i = 0; i < M; ++i) w[i] = amod_wait_time(net.zones[i].matching_scale, tnc.idle[i]);
  return w;
}

inline std::vector<double> transit_waits(const MultimodalNetwork& net, std::span<const double> frequency) {
  const std::size_t M = net.zone_count();
  if (frequency.size() != net.line_count())
    throw Error(Errc::dimension_mismatch, "frequency length must equal line count");
  std::vector<double> w(M * M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) w[i * M + j] = transit_wait_time(net.phi.row(i, j), frequency);
  return w;
}

inline ServiceLevels service_levels(const MultimodalNetwork& net, const TncStrategy& tnc,
                                    const TransitStrategy& transit) {
  return {amod_waits(net, tnc), transit_waits(net, transit.frequency)};
}

/// Generalized costs for one OD/class given precomputed waits.
inline CostVector generalized_costs(std::size_t i, std::size_t j, std::size_t k, const TncStrategy& tnc,
                                    double transit_fare, const ServiceLevels& levels,
                                    const MultimodalNetwork& net, const BehaviorParams& beh,
                                    const PolicyConfig& policy) {
  const std::size_t M = net.zone_count();
  const auto& c = beh.classes[k];
  const double la = net.road_distance(i, j);
  const double lp = net.transit_distance(i, j);
  const double di = net.firstmile[i];
  const double dj = net.firstmile[j];
  const double wi = levels.amod_wait[i];
  const double wj = levels.amod_wait[j];
  const double wp = levels.transit_wait[i * M + j];
  const double b = tnc.base_fare;
  const double ri = tnc.rate[i];
  const double rj = tnc.rate[j];
  const double transit_money = transit_fare * lp;
  const double si = net.zones[i].underserved ? policy.subsidy : 0.0;
  const double sj = net.zones[j].underserved ? policy.subsidy : 0.0;

  CostVector out{};
  out[idx(Mode::amod)] = c.alpha * wi + c.beta * la / beh.v_a + c.gamma * (b + ri * la);
  out[idx(Mode::transit)] =
      c.alpha * wp + c.beta * lp / beh.v_p + c.gamma * transit_money + c.theta * (di + dj) / beh.v_w;
  out[idx(Mode::first_mile)] = c.alpha * (wi + wp) + c.beta * (di / beh.v_a + lp / beh.v_p) +
                               c.gamma * (b + ri * di - si + transit_money) + c.theta * dj / beh.v_w;
  out[idx(Mode::last_mile)] = c.alpha * (wp + wj) + c.beta * (lp / beh.v_p + dj / beh.v_a) +
                              c.gamma * (transit_money + b + rj * dj - sj) + c.theta * di / beh.v_w;
  out[idx(Mode::both)] = c.alpha * (wi + wp + wj) + c.beta * (di / beh.v_a + lp / beh.v_p + dj / beh.v_a) +
                         c.gamma * (2.0 * b + ri * di + rj * dj - si - sj + transit_money);
  out[idx(Mode::outside)] = beh.outside_cost[(i * M + j) * beh.class_count() + k];
  return out;
}

inline CostVector generalized_costs(std::size_t i, std::size_t j, std::size_t k, const TncStrategy& tnc,
                                    const TransitStrategy& transit, const MultimodalNetwork& net,
                                    const BehaviorParams& beh, const PolicyConfig& policy) {
  const std::size_t M = net.zone_count();
  ServiceLevels lv;
  lv.amod_wait.assign(M, 0.0);
  lv.transit_wait.assign(M * M, 0.0);
  lv.amod_wait[i] = amod_wait_time(net.zones[i].matching_scale, tnc.idle[i]);
  lv.amod_wait[j] = amod_wait_time(net.zones[j].matching_scale, tnc.idle[j]);
  lv.transit_wait[i * M + j] = transit_wait_time(net.phi.row(i, j), transit.frequency);
  return generalized_costs(i, j, k, tnc, transit.fare_per_mile, lv, net, beh, policy);
}

/// Multinomial logit split of lambda0 across modes.
inline std::array<double, kModeCount> logit_split(const CostVector& costs, double epsilon, double lambda0) {
  double top = -epsilon * costs[0];
  for (double c : costs) top = std::max(top, -epsilon * c);
  std::array<double, kModeCount> e{};
  double z = 0.0;
  for (std::size_t t = 0; t < kModeCount; ++t) {
    e[t] = std::exp(-epsilon * costs[t] - top);
    z += e[t];
  }
  for (double& v : e) v = lambda0 * v / z;
  return e;
}

/// Arrival rates per OD, class and mode (trips/hour).
class DemandTensor {
 public:
  DemandTensor() = default;
  DemandTensor(std::size_t zones, std::size_t classes)
      : zones_(zones), classes_(classes), potential_(zones * zones * classes, 0.0),
        flow_(zones * zones * classes * kModeCount, 0.0) {}

  std::size_t zones() const noexcept { return zones_; }
  std::size_t classes() const noexcept { return classes_; }

  std::size_t od_class(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return (i * zones_ + j) * classes_ + k;
  }
  double& potential(std::size_t i, std::size_t j, std::size_t k) { return potential_[od_class(i, j, k)]; }
  double potential(std::size_t i, std::size_t j, std::size_t k) const { return potential_[od_class(i, j, k)]; }
  double& flow(std::size_t i, std::size_t j, std::size_t k, Mode m) {
    return flow_[od_class(i, j, k) * kModeCount + idx(m)];
  }
  double flow(std::size_t i, std::size_t j, std::size_t k, Mode m) const {
    return flow_[od_class(i, j, k) * kModeCount + idx(m)];
  }
  double total(Mode m) const {
    double s = 0.0;
    for (std::size_t q = 0; q < potential_.size(); ++q) s += flow_[q * kModeCount + idx(m)];
    return s;
  }

 private:
  std::size_t zones_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> potential_;
  std::vector<double> flow_;
};

inline DemandTensor compute_demand(const MultimodalNetwork& net, const BehaviorParams& beh,
                                   const PolicyConfig& policy, std::span<const double> potential,
                                   const TncStrategy& tnc, const TransitStrategy& transit) {
  const std::size_t M = net.zone_count();
  const std::size_t K = beh.class_count();
  if (potential.size() != M * M * K)
    throw Error(Errc::dimension_mismatch, "potential demand must have M*M*K entries");
  const ServiceLevels lv = service_levels(net, tnc, transit);
  DemandTensor d(M, K);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 0; k < K; ++k) {
        const double l0 = potential[(i * M + j) * K + k];
        d.potential(i, j, k) = l0;
        const auto c = generalized_costs(i, j, k, tnc, transit.fare_per_mile, lv, net, beh, policy);
        const auto split = logit_split(c, beh.epsilon, l0);
        for (std::size_t t = 0; t < kModeCount; ++t) d.flow(i, j, k, static_cast<Mode>(t)) = split[t];
      }
  return d;
}

/// Fleet-hour conservation: idle + pickup + occupied vehicle-hours.
inline double fleet_hours(const DemandTensor& d, std::span<const double> amod_wait,
                          const MultimodalNetwork& net, double v_a, std::span<const double> idle) {
  const std::size_t M = net.zone_count();
  double n = 0.0;
  for (double x : idle) n += x;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      const double wi = amod_wait[i], wj = amod_wait[j];
      const double occ_a = net.road_distance(i, j) / v_a;
      const double occ_i = net.firstmile[i] / v_a;
      const double occ_j = net.firstmile[j] / v_a;
      for (std::size_t k = 0; k < d.classes(); ++k) {
        const double la = d.flow(i, j, k, Mode::amod);
        const double l1 = d.flow(i, j, k, Mode::first_mile);
        const double l2 = d.flow(i, j, k, Mode::last_mile);
        const double l3 = d.flow(i, j, k, Mode::both);
        n += la * wi + l1 * wi + l2 * wj + l3 * (wi + wj);
        n += la * occ_a + l1 * occ_i + l2 * occ_j + l3 * (occ_i + occ_j);
      }
    }
  return n;
}

}  // namespace modalgame
