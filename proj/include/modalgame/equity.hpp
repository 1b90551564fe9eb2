#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "choice.hpp"
#include "error.hpp"
#include "scenario.hpp"

namespace modalgame {

/// Logsum accessibility (1/eps) log sum_t exp(-eps c_t).
inline double accessibility(const CostVector& costs, double epsilon) {
  double top = -std::numeric_limits<double>::infinity();
  for (double c : costs) top = std::max(top, -epsilon * c);
  double s = 0.0;
  for (double c : costs) s += std::exp(-epsilon * c - top);
  return (top + std::log(s)) / epsilon;
}

/// Demand-weighted accessibility aggregates. A_ik is indexed i*K + k.
struct AccessibilityAggregates {
  std::size_t zones = 0, classes = 0;
  std::vector<double> lambda_ik, A_ik;
  std::vector<double> lambda_k, A_k;
  double lambda_bar = 0.0, A_bar = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> empty_strata;
};

/// `A` holds A_ijk at index (i*M + j)*K + k; `shift` is added to every entry.
inline AccessibilityAggregates aggregate_accessibility(const DemandTensor& d, const std::vector<double>& A,
                                                       double shift = 0.0) {
  const std::size_t M = d.zones(), K = d.classes();
  if (A.size() != M * M * K) throw Error(Errc::dimension_mismatch, "accessibility tensor must be M*M*K");
  AccessibilityAggregates ag;
  ag.zones = M;
  ag.classes = K;
  ag.lambda_ik.assign(M * K, 0.0);
  ag.A_ik.assign(M * K, 0.0);
  ag.lambda_k.assign(K, 0.0);
  ag.A_k.assign(K, 0.0);
  std::vector<double> sum_ik(M * K, 0.0), sum_k(K, 0.0);
  double sum_all = 0.0;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 0; k < K; ++k) {
        double lam = 0.0;
        for (std::size_t t = 0; t < kModeCount; ++t) lam += d.flow(i, j, k, static_cast<Mode>(t));
        const double a = A[(i * M + j) * K + k] + shift;
        ag.lambda_ik[i * K + k] += lam;
        sum_ik[i * K + k] += lam * a;
        ag.lambda_k[k] += lam;
        sum_k[k] += lam * a;
        ag.lambda_bar += lam;
        sum_all += lam * a;
      }
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      const double lam = ag.lambda_ik[i * K + k];
      if (lam > 0) ag.A_ik[i * K + k] = sum_ik[i * K + k] / lam;
      else ag.empty_strata.emplace_back(i, k);
    }
  for (std::size_t k = 0; k < K; ++k) ag.A_k[k] = ag.lambda_k[k] > 0 ? sum_k[k] / ag.lambda_k[k] : 0.0;
  ag.A_bar = ag.lambda_bar > 0 ? sum_all / ag.lambda_bar : 0.0;
  return ag;
}

struct TheilReport {
  double T = 0.0;
  double within = 0.0;
  double between = 0.0;
  double shift = 0.0;
};

/// Theil index of accessibility split into spatial (within class) and social (between class) parts.
inline TheilReport theil_decompose(const AccessibilityAggregates& ag) {
  const std::size_t M = ag.zones, K = ag.classes;
  if (!(ag.lambda_bar > 0)) throw Error(Errc::validation, "total demand must be positive");
  TheilReport r;
  for (std::size_t k = 0; k < K; ++k) {
    if (!(ag.lambda_k[k] > 0)) continue;
    if (!(ag.A_k[k] > 0)) throw Error(Errc::nonpositive_accessibility, "class accessibility must be positive");
    for (std::size_t i = 0; i < M; ++i) {
      const double lam = ag.lambda_ik[i * K + k];
      if (!(lam > 0)) continue;
      const double a = ag.A_ik[i * K + k];
      if (!(a > 0)) throw Error(Errc::nonpositive_accessibility, "stratum accessibility must be positive");
      const double ratio = a / ag.A_k[k];
      r.within += (lam / ag.lambda_bar) * ratio * std::log(ratio);
    }
  }
  if (!(ag.A_bar > 0)) throw Error(Errc::nonpositive_accessibility, "mean accessibility must be positive");
  for (std::size_t k = 0; k < K; ++k) {
    if (!(ag.lambda_k[k] > 0)) continue;
    const double ratio = ag.A_k[k] / ag.A_bar;
    r.between += (ag.lambda_k[k] / ag.lambda_bar) * ratio * std::log(ratio);
  }
  r.T = r.within + r.between;
  return r;
}

/// Scenario-wide shift making every accessibility at least 1. Logsum accessibility
/// is never below the outside-option utility -c^o, so max c^o + 1 suffices.
inline double accessibility_shift(const Scenario& sc) {
  double m = 0.0;
  for (double c : sc.behavior.outside_cost) m = std::max(m, c);
  return m + 1.0;
}

/// Unshifted A_ijk for a strategy pair, index (i*M + j)*K + k.
inline std::vector<double> accessibility_tensor(const Scenario& sc, const TncStrategy& tnc,
                                                const TransitStrategy& transit) {
  const std::size_t M = sc.zone_count(), K = sc.class_count();
  const auto lv = service_levels(sc.network, tnc, transit);
  std::vector<double> A(M * M * K);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 0; k < K; ++k)
        A[(i * M + j) * K + k] = accessibility(
            generalized_costs(i, j, k, tnc, transit.fare_per_mile, lv, sc.network, sc.behavior, sc.policy),
            sc.behavior.epsilon);
  return A;
}

inline TheilReport theil_report(const Scenario& sc, const TncStrategy& tnc, const TransitStrategy& transit) {
  const double shift = accessibility_shift(sc);
  const auto d = compute_demand(sc, tnc, transit);
  auto r = theil_decompose(aggregate_accessibility(d, accessibility_tensor(sc, tnc, transit), shift));
  r.shift = shift;
  return r;
}

}  // namespace modalgame
