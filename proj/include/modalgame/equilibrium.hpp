#pragma once

#include <cmath>
#include <cstddef>
#include <future>
#include <optional>
#include <vector>

#include "scenario.hpp"
#include "tnc_operator.hpp"
#include "transit_operator.hpp"

namespace modalgame {

struct IterationRecord {
  std::size_t iteration = 0;
  double tnc_delta = 0.0;
  double transit_delta = 0.0;
  double tnc_profit = 0.0;
  double transit_ridership = 0.0;
};

struct CandidateEquilibrium {
  TncStrategy tnc;
  TransitStrategy transit;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> trajectory;
};

struct EquilibriumConfig {
  double sigma = 1e-3;
  std::size_t max_iter = 50;
  double idle_scale = 0.01;  // N^I enters the stopping norm divided by 100
  TncSolveConfig tnc{};
  TransitSolveConfig transit{};
  std::size_t threads = 1;
};

/// Stopping-norm distance between TNC strategies, N^I rescaled by idle_scale.
inline double tnc_distance(const TncStrategy& a, const TncStrategy& b, double idle_scale = 0.01) {
  double s = (a.base_fare - b.base_fare) * (a.base_fare - b.base_fare);
  for (std::size_t i = 0; i < a.rate.size(); ++i) {
    s += (a.rate[i] - b.rate[i]) * (a.rate[i] - b.rate[i]);
    const double dn = idle_scale * (a.idle[i] - b.idle[i]);
    s += dn * dn;
  }
  return std::sqrt(s);
}

inline double transit_distance(const TransitStrategy& a, const TransitStrategy& b) {
  double s = (a.fare_per_mile - b.fare_per_mile) * (a.fare_per_mile - b.fare_per_mile);
  for (std::size_t l = 0; l < a.frequency.size(); ++l)
    s += (a.frequency[l] - b.frequency[l]) * (a.frequency[l] - b.frequency[l]);
  return std::sqrt(s);
}

/// Gauss-Seidel best-response iteration: TNC first, then transit, each warm-started.
inline CandidateEquilibrium best_response_iterate(const TncStrategy& initial_tnc,
                                                  const TransitStrategy& initial_transit, const Scenario& sc,
                                                  const EquilibriumConfig& cfg = {}) {
  CandidateEquilibrium ce{initial_tnc, initial_transit, 0, false, {}};
  TncSolveConfig tcfg = cfg.tnc;
  tcfg.threads = cfg.threads;
  TransitSolveConfig pcfg = cfg.transit;
  pcfg.threads = cfg.threads;
  pcfg.certify = false;
  for (std::size_t n = 1; n <= cfg.max_iter; ++n) {
    auto a = solve_tnc_best_response(ce.transit, sc, &ce.tnc, tcfg);
    auto p = solve_transit_best_response(a.strategy, sc, &ce.transit, pcfg);
    IterationRecord rec;
    rec.iteration = n;
    rec.tnc_delta = tnc_distance(a.strategy, ce.tnc, cfg.idle_scale);
    rec.transit_delta = transit_distance(p.strategy, ce.transit);
    ce.tnc = a.strategy;
    ce.transit = p.strategy;
    rec.tnc_profit = tnc_profit(ce.tnc, ce.transit, sc);
    rec.transit_ridership = transit_ridership(ce.transit, ce.tnc, sc);
    ce.trajectory.push_back(rec);
    ce.iterations = n;
    if (rec.tnc_delta <= cfg.sigma && rec.transit_delta <= cfg.sigma) {
      ce.converged = true;
      break;
    }
  }
  return ce;
}

struct EpsilonReport {
  double tnc_profit = 0.0;
  double tnc_upper = 0.0;
  double tnc_lower = 0.0;
  double epsilon_abs = 0.0;
  double epsilon_rel = 0.0;
  std::vector<double> per_cell;
  double transit_ridership = 0.0;
  double transit_resolve_ridership = 0.0;
  bool transit_global = false;
  ConcavityCertificate certificate;
};

/// Ex-post quality assessment of a candidate: TNC profit bounds over the partition,
/// transit concavity certificate and transit re-solve.
inline EpsilonReport expost_evaluate(const CandidateEquilibrium& cand, const Scenario& sc, const Partition& partition,
                                     const EquilibriumConfig& cfg = {}) {
  TncSolveConfig tcfg = cfg.tnc;
  tcfg.threads = cfg.threads;
  TransitSolveConfig pcfg = cfg.transit;
  pcfg.threads = cfg.threads;
  pcfg.certify = true;
  // the two branches are independent; run the transit side alongside when threads allow
  auto transit_side = [&] { return solve_transit_best_response(cand.tnc, sc, &cand.transit, pcfg); };
  std::future<TransitBestResponse> pending;
  if (cfg.threads > 1) pending = std::async(std::launch::async, transit_side);
  const auto bounds = tnc_profit_bounds(cand.tnc, cand.transit, sc, partition, tcfg);
  const auto resolve = pending.valid() ? pending.get() : transit_side();
  EpsilonReport r;
  r.tnc_profit = bounds.candidate;
  r.tnc_upper = bounds.upper;
  r.tnc_lower = bounds.lower;
  r.epsilon_abs = bounds.epsilon_abs;
  r.epsilon_rel = bounds.epsilon_rel;
  r.per_cell = bounds.per_cell;
  r.transit_ridership = transit_ridership(cand.transit, cand.tnc, sc);
  r.transit_resolve_ridership = resolve.ridership;
  r.certificate = *resolve.certificate;
  r.transit_global = resolve.global;
  return r;
}

}  // namespace modalgame
