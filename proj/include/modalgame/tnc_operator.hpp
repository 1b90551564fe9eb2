#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "choice.hpp"
#include "error.hpp"
#include "optim.hpp"
#include "parallel.hpp"
#include "scenario.hpp"
#include "strategy.hpp"

namespace modalgame {

/// Profit as fare revenue minus C_av times fleet-hours, demand from the choice model.
inline double tnc_profit(const TncStrategy& tnc, const TransitStrategy& transit, const Scenario& sc) {
  const auto d = compute_demand(sc, tnc, transit);
  const auto w = amod_waits(sc.network, tnc);
  const auto& net = sc.network;
  const std::size_t M = sc.zone_count();
  double revenue = 0.0;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      const double fa = tnc.base_fare + tnc.rate[i] * net.road_distance(i, j);
      const double f1 = tnc.base_fare + tnc.rate[i] * net.firstmile[i];
      const double f2 = tnc.base_fare + tnc.rate[j] * net.firstmile[j];
      const double f3 = 2.0 * tnc.base_fare + tnc.rate[i] * net.firstmile[i] + tnc.rate[j] * net.firstmile[j];
      for (std::size_t k = 0; k < sc.class_count(); ++k)
        revenue += d.flow(i, j, k, Mode::amod) * fa + d.flow(i, j, k, Mode::first_mile) * f1 +
                   d.flow(i, j, k, Mode::last_mile) * f2 + d.flow(i, j, k, Mode::both) * f3;
    }
  return revenue - sc.c_av * fleet_hours(d, w, net, sc.behavior.v_a, tnc.idle);
}

/// Per-trip margin form of TNC profit with transit held fixed. Costs are split
/// into a part fixed by the transit strategy and a part driven by (b, r, w).
class TncProfitModel {
 public:
  struct Entry {
    std::size_t i, j, k;
    double lambda0, alpha, gamma;
    double la, di, dj;
    double ka, kp, kb1, kb2, kb3, ko;
  };

  /// Locals in order: b, r_i, r_j, w_i, w_j.
  using Local = std::array<double, 5>;

  TncProfitModel(const Scenario& sc, const TransitStrategy& transit) : sc_(sc) {
    const auto& net = sc.network;
    const auto& beh = sc.behavior;
    const std::size_t M = sc.zone_count(), K = sc.class_count();
    const auto wp = transit_waits(net, transit.frequency);
    eps_ = beh.epsilon;
    c_ = sc.c_av;
    va_ = beh.v_a;
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j) {
        const double lp = net.transit_distance(i, j);
        const double la = net.road_distance(i, j);
        const double di = net.firstmile[i], dj = net.firstmile[j];
        const double w = wp[i * M + j];
        const double si = net.zones[i].underserved ? sc.policy.subsidy : 0.0;
        const double sj = net.zones[j].underserved ? sc.policy.subsidy : 0.0;
        const double money = transit.fare_per_mile * lp;
        for (std::size_t k = 0; k < K; ++k) {
          const double l0 = sc.potential(i, j, k);
          if (l0 <= 0) continue;
          const auto& c = beh.classes[k];
          Entry e{i, j, k, l0, c.alpha, c.gamma, la, di, dj, 0, 0, 0, 0, 0, 0};
          e.ka = c.beta * la / beh.v_a;
          e.kp = c.alpha * w + c.beta * lp / beh.v_p + c.gamma * money + c.theta * (di + dj) / beh.v_w;
          e.kb1 = c.alpha * w + c.beta * (di / beh.v_a + lp / beh.v_p) + c.gamma * (money - si) +
                  c.theta * dj / beh.v_w;
          e.kb2 = c.alpha * w + c.beta * (lp / beh.v_p + dj / beh.v_a) + c.gamma * (money - sj) +
                  c.theta * di / beh.v_w;
          e.kb3 = c.alpha * w + c.beta * (di / beh.v_a + lp / beh.v_p + dj / beh.v_a) +
                  c.gamma * (money - si - sj);
          e.ko = beh.outside_cost[(i * M + j) * K + k];
          entries_.push_back(e);
        }
      }
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Scenario& scenario() const noexcept { return sc_; }
  double epsilon() const noexcept { return eps_; }
  double c_av() const noexcept { return c_; }
  double v_a() const noexcept { return va_; }

  /// lambda0 * expected margin for one OD/class; optional gradient w.r.t. the locals.
  double od_value(const Entry& e, const Local& x, Local* grad = nullptr) const {
    const double b = x[0], ri = x[1], rj = x[2], wi = x[3], wj = x[4];
    const double cv = c_ / va_;
    std::array<double, kModeCount> cost{
        e.ka + e.alpha * wi + e.gamma * (b + ri * e.la),
        e.kp,
        e.kb1 + e.alpha * wi + e.gamma * (b + ri * e.di),
        e.kb2 + e.alpha * wj + e.gamma * (b + rj * e.dj),
        e.kb3 + e.alpha * (wi + wj) + e.gamma * (2.0 * b + ri * e.di + rj * e.dj),
        e.ko};
    const std::array<double, kModeCount> margin{
        b + (ri - cv) * e.la - c_ * wi,
        0.0,
        b + (ri - cv) * e.di - c_ * wi,
        b + (rj - cv) * e.dj - c_ * wj,
        2.0 * b + (ri - cv) * e.di + (rj - cv) * e.dj - c_ * (wi + wj),
        0.0};
    double cmin = cost[0];
    for (double v : cost) cmin = std::min(cmin, v);
    std::array<double, kModeCount> s{};
    double z = 0.0;
    for (std::size_t t = 0; t < kModeCount; ++t) {
      s[t] = std::exp(-eps_ * (cost[t] - cmin));
      z += s[t];
    }
    double mbar = 0.0;
    for (std::size_t t = 0; t < kModeCount; ++t) {
      s[t] /= z;
      mbar += s[t] * margin[t];
    }
    if (grad) {
      // d cost / d local and d margin / d local, rows a, p, b1, b2, b3, o.
      const double g = e.gamma, a = e.alpha;
      const double dc[kModeCount][5] = {{g, g * e.la, 0, a, 0},
                                        {0, 0, 0, 0, 0},
                                        {g, g * e.di, 0, a, 0},
                                        {g, 0, g * e.dj, 0, a},
                                        {2 * g, g * e.di, g * e.dj, a, a},
                                        {0, 0, 0, 0, 0}};
      const double dm[kModeCount][5] = {{1, e.la, 0, -c_, 0},
                                        {0, 0, 0, 0, 0},
                                        {1, e.di, 0, -c_, 0},
                                        {1, 0, e.dj, 0, -c_},
                                        {2, e.di, e.dj, -c_, -c_},
                                        {0, 0, 0, 0, 0}};
      for (std::size_t q = 0; q < 5; ++q) {
        double cbar = 0.0, smc = 0.0, sdm = 0.0;
        for (std::size_t t = 0; t < kModeCount; ++t) {
          cbar += s[t] * dc[t][q];
          smc += s[t] * margin[t] * dc[t][q];
          sdm += s[t] * dm[t][q];
        }
        (*grad)[q] = e.lambda0 * (-eps_ * (smc - mbar * cbar) + sdm);
      }
    }
    return e.lambda0 * mbar;
  }

  /// Margin-form profit of a uniform strategy.
  double profit(const TncStrategy& tnc) const {
    const auto w = amod_waits(sc_.network, tnc);
    double total = 0.0;
    for (const auto& e : entries_)
      total += od_value(e, {tnc.base_fare, tnc.rate[e.i], tnc.rate[e.j], w[e.i], w[e.j]});
    const double M = static_cast<double>(sc_.zone_count());
    // idle cost written as (C/M) * sum_i sum_j N_i
    for (std::size_t i = 0; i < sc_.zone_count(); ++i)
      for (std::size_t j = 0; j < sc_.zone_count(); ++j) total -= c_ / M * tnc.idle[i];
    return total;
  }

  /// Profit and gradient in z = (b, r_1..r_M, s_1..s_M) with N_i = s_i^2.
  double value_and_gradient(std::span<const double> z, std::span<double> grad) const {
    const std::size_t M = sc_.zone_count();
    std::fill(grad.begin(), grad.end(), 0.0);
    thread_local std::vector<double> w, gw;
    w.assign(M, 0.0);
    gw.assign(M, 0.0);
    const double b = z[0];
    for (std::size_t i = 0; i < M; ++i) w[i] = sc_.network.zones[i].matching_scale / z[1 + M + i];
    double total = 0.0;
    Local g{};
    for (const auto& e : entries_) {
      total += od_value(e, {b, z[1 + e.i], z[1 + e.j], w[e.i], w[e.j]}, &g);
      grad[0] += g[0];
      grad[1 + e.i] += g[1];
      grad[1 + e.j] += g[2];
      gw[e.i] += g[3];
      gw[e.j] += g[4];
    }
    for (std::size_t i = 0; i < M; ++i) {
      const double s = z[1 + M + i];
      total -= c_ * s * s;
      grad[1 + M + i] += gw[i] * (-w[i] / s) - 2.0 * c_ * s;
    }
    return total;
  }

 private:
  const Scenario& sc_;
  std::vector<Entry> entries_;
  double eps_ = 0, c_ = 0, va_ = 1;
};

struct TncSolveConfig {
  SolveConfig solver{};
  std::size_t grid_points = 40;
  std::size_t master_passes = 3;
  std::size_t threads = 1;
};

struct TncBestResponse {
  TncStrategy strategy;
  double profit = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

inline TncStrategy clamp_to_box(TncStrategy t, const Scenario& sc) {
  t.base_fare = std::clamp(t.base_fare, 0.0, sc.bounds.base_fare_max);
  for (auto& r : t.rate) r = std::clamp(r, 0.0, sc.bounds.rate_max);
  for (std::size_t i = 0; i < t.idle.size(); ++i)
    t.idle[i] = std::clamp(t.idle[i], idle_floor(sc, i), sc.bounds.idle_max);
  return t;
}

namespace detail {

inline std::vector<double> tnc_pack(const TncStrategy& t) {
  std::vector<double> z{t.base_fare};
  z.insert(z.end(), t.rate.begin(), t.rate.end());
  for (double n : t.idle) z.push_back(std::sqrt(n));
  return z;
}

inline TncStrategy tnc_unpack(std::span<const double> z, std::size_t M) {
  TncStrategy t;
  t.base_fare = z[0];
  t.rate.assign(z.begin() + 1, z.begin() + 1 + static_cast<std::ptrdiff_t>(M));
  t.idle.resize(M);
  for (std::size_t i = 0; i < M; ++i) t.idle[i] = z[1 + M + i] * z[1 + M + i];
  return t;
}

}  // namespace detail

/// Multi-start best response over (b, r, N). The min-service level is a box floor on N.
inline TncBestResponse solve_tnc_best_response(const TransitStrategy& transit, const Scenario& sc,
                                               const TncStrategy* warm = nullptr,
                                               const TncSolveConfig& cfg = {}) {
  const std::size_t M = sc.zone_count();
  TncProfitModel model(sc, transit);
  SmoothProblem p;
  p.dim = 1 + 2 * M;
  p.lower.assign(p.dim, 0.0);
  p.upper.assign(p.dim, 0.0);
  p.upper[0] = sc.bounds.base_fare_max;
  for (std::size_t i = 0; i < M; ++i) {
    p.upper[1 + i] = sc.bounds.rate_max;
    p.lower[1 + M + i] = std::sqrt(idle_floor(sc, i));
    p.upper[1 + M + i] = std::sqrt(sc.bounds.idle_max);
  }
  p.objective = [&model, M](std::span<const double> z) {
    std::vector<double> g(1 + 2 * M);
    return model.value_and_gradient(z, g);
  };
  p.objective_gradient = [&model](std::span<const double> z, std::span<double> g) {
    return model.value_and_gradient(z, g);
  };

  std::vector<std::vector<double>> starts;
  for (double frac : {0.2, 0.35, 0.5, 0.65, 0.8}) {
    TncStrategy s;
    s.base_fare = frac * sc.bounds.base_fare_max;
    s.rate.assign(M, frac * sc.bounds.rate_max);
    s.idle.resize(M);
    for (std::size_t i = 0; i < M; ++i) {
      const double lo = std::max(idle_floor(sc, i), 1.0);
      const double hi = sc.bounds.idle_max;
      s.idle[i] = lo < hi ? std::exp(std::log(lo) + frac * (std::log(hi) - std::log(lo))) : hi;
    }
    starts.push_back(detail::tnc_pack(clamp_to_box(s, sc)));
  }
  if (warm) starts.insert(starts.begin(), detail::tnc_pack(clamp_to_box(*warm, sc)));

  std::vector<SolveReport> reps(starts.size());
  parallel_for(starts.size(), cfg.threads,
               [&](std::size_t s) { reps[s] = solve_smooth(p, std::span<const double>(starts[s]), cfg.solver); });
  std::size_t best = 0;
  for (std::size_t s = 1; s < reps.size(); ++s)
    if (reps[s].value > reps[best].value) best = s;
  TncBestResponse out;
  out.strategy = clamp_to_box(detail::tnc_unpack(reps[best].x, M), sc);
  out.profit = tnc_profit(out.strategy, transit, sc);
  out.converged = reps[best].converged;
  for (const auto& r : reps) out.iterations += r.iterations;
  return out;
}

/// Strategy the platform would use for trips ending in one destination zone.
struct DestinationStrategy {
  std::size_t destination = 0;
  double base_fare = 0.0;
  std::vector<double> rate;  // per origin
  std::vector<double> idle;  // per origin
};

struct CellSolution {
  std::vector<std::size_t> cell;
  TncStrategy strategy;  // shared by every destination in the cell
  std::vector<DestinationStrategy> per_destination;
  double value = 0.0;
};

namespace detail {

/// Destination-restricted profit for one cell. Evaluates sum over j in the cell,
/// all origins, with idle cost |V| * C/M per origin vehicle.
class CellModel {
 public:
  CellModel(const TncProfitModel& model, std::vector<std::size_t> cell) : m_(model), cell_(std::move(cell)) {
    const auto& sc = m_.scenario();
    const std::size_t M = sc.zone_count();
    in_cell_.assign(M, 0);
    for (std::size_t j : cell_) in_cell_[j] = 1;
    by_origin_.resize(M);
    for (const auto& e : m_.entries())
      if (in_cell_[e.j]) by_origin_[e.i].push_back(&e);
    idle_weight_ = static_cast<double>(cell_.size()) * m_.c_av() / static_cast<double>(M);
  }

  const std::vector<std::size_t>& cell() const { return cell_; }
  bool in_cell(std::size_t i) const { return in_cell_[i] != 0; }
  const std::vector<const TncProfitModel::Entry*>& origin_entries(std::size_t i) const { return by_origin_[i]; }
  double idle_weight() const { return idle_weight_; }

  /// Contribution of origin i with its own (r, N); destinations use the strategy's (r_j, N_j).
  double origin_value(std::size_t i, double r, double n, const TncStrategy& t) const {
    const auto& zones = m_.scenario().network.zones;
    const double wi = zones[i].matching_scale / std::sqrt(n);
    double v = -idle_weight_ * n;
    for (const auto* e : by_origin_[i]) {
      const std::size_t j = e->j;
      const double rj = (j == i) ? r : t.rate[j];
      const double wj = (j == i) ? wi : zones[j].matching_scale / std::sqrt(t.idle[j]);
      v += m_.od_value(*e, {t.base_fare, r, rj, wi, wj});
    }
    return v;
  }

  double value(const TncStrategy& t) const {
    double v = 0.0;
    for (std::size_t i = 0; i < in_cell_.size(); ++i) v += origin_value(i, t.rate[i], t.idle[i], t);
    return v;
  }

 private:
  const TncProfitModel& m_;
  std::vector<std::size_t> cell_;
  std::vector<char> in_cell_;
  std::vector<std::vector<const TncProfitModel::Entry*>> by_origin_;
  double idle_weight_ = 0.0;
};

/// Grid-based inner solver for one outside origin. Uses separable exponential tables.
class InnerGrid {
 public:
  InnerGrid(const CellModel& cm, const TncProfitModel& m, std::size_t origin, std::vector<double> rgrid,
            std::vector<double> ngrid)
      : cm_(cm), m_(m), i_(origin), r_(std::move(rgrid)), n_(std::move(ngrid)) {
    const auto& sc = m_.scenario();
    const double eps = m_.epsilon();
    const double A = sc.network.zones[i_].matching_scale;
    const auto& ents = cm_.origin_entries(i_);
    const std::size_t E = ents.size(), G = n_.size(), H = r_.size();
    w_.resize(G);
    for (std::size_t g = 0; g < G; ++g) w_[g] = A / std::sqrt(n_[g]);
    W_.resize(E * G);
    Ra_.resize(E * H);
    Rd_.resize(E * H);
    for (std::size_t q = 0; q < E; ++q) {
      const auto& e = *ents[q];
      for (std::size_t g = 0; g < G; ++g) W_[q * G + g] = std::exp(-eps * e.alpha * w_[g]);
      for (std::size_t h = 0; h < H; ++h) {
        Ra_[q * H + h] = std::exp(-eps * e.gamma * r_[h] * e.la);
        Rd_[q * H + h] = std::exp(-eps * e.gamma * r_[h] * e.di);
      }
    }
  }

  /// Best grid (r, N) for this origin given the master strategy; returns value.
  double best(const TncStrategy& t, double& r_out, double& n_out) const {
    const auto& sc = m_.scenario();
    const double eps = m_.epsilon(), c = m_.c_av(), cv = c / m_.v_a();
    const auto& ents = cm_.origin_entries(i_);
    const std::size_t E = ents.size(), G = n_.size(), H = r_.size();
    const double b = t.base_fare;
    thread_local std::vector<double> ea, ep, eb1, eb2, eb3, mb2c, wjv, rjv;
    ea.resize(E);
    ep.resize(E);
    eb1.resize(E);
    eb2.resize(E);
    eb3.resize(E);
    mb2c.resize(E);
    wjv.resize(E);
    rjv.resize(E);
    for (std::size_t q = 0; q < E; ++q) {
      const auto& e = *ents[q];
      const std::size_t j = e.j;
      const double wj = sc.network.zones[j].matching_scale / std::sqrt(t.idle[j]);
      const double rj = t.rate[j];
      wjv[q] = wj;
      rjv[q] = rj;
      ea[q] = std::exp(-eps * (e.ka + e.gamma * b - e.ko));
      ep[q] = std::exp(-eps * (e.kp - e.ko));
      eb1[q] = std::exp(-eps * (e.kb1 + e.gamma * b - e.ko));
      eb2[q] = std::exp(-eps * (e.kb2 + e.alpha * wj + e.gamma * (b + rj * e.dj) - e.ko));
      eb3[q] = std::exp(-eps * (e.kb3 + e.alpha * wj + e.gamma * (2.0 * b + rj * e.dj) - e.ko));
      mb2c[q] = b + (rj - cv) * e.dj - c * wj;
    }
    double best_v = -std::numeric_limits<double>::infinity();
    std::size_t bg = 0, bh = 0;
    for (std::size_t g = 0; g < G; ++g) {
      const double wi = w_[g];
      for (std::size_t h = 0; h < H; ++h) {
        const double r = r_[h];
        double v = -cm_.idle_weight() * n_[g];
        for (std::size_t q = 0; q < E; ++q) {
          const auto& e = *ents[q];
          const double Wg = W_[q * G + g];
          const double xa = ea[q] * Wg * Ra_[q * H + h];
          const double x1 = eb1[q] * Wg * Rd_[q * H + h];
          const double x3 = eb3[q] * Wg * Rd_[q * H + h];
          const double x2 = eb2[q];
          const double ma = b + (r - cv) * e.la - c * wi;
          const double m1 = b + (r - cv) * e.di - c * wi;
          const double m3 = 2.0 * b + (r - cv) * e.di + (rjv[q] - cv) * e.dj - c * (wi + wjv[q]);
          const double z = xa + ep[q] + x1 + x2 + x3 + 1.0;
          v += e.lambda0 * (xa * ma + x1 * m1 + x2 * mb2c[q] + x3 * m3) / z;
        }
        if (v > best_v) {
          best_v = v;
          bg = g;
          bh = h;
        }
      }
    }
    r_out = r_[bh];
    n_out = n_[bg];
    return best_v;
  }

 private:
  const CellModel& cm_;
  const TncProfitModel& m_;
  std::size_t i_;
  std::vector<double> r_, n_, w_;
  std::vector<double> W_, Ra_, Rd_;
};

}  // namespace detail

/// Solves the destination-relaxed problem on one cell by primal decomposition:
/// master coordinate grid search over (b, r_j, N_j), j in the cell, with each
/// outside origin's (r_i, N_i) chosen by grid search. `hint` (usually the
/// candidate equilibrium) is always evaluated so the cell value never falls below it.
inline CellSolution solve_relaxed_cell(const std::vector<std::size_t>& cell, const TransitStrategy& transit,
                                       const Scenario& sc, const TncStrategy* hint = nullptr,
                                       const TncSolveConfig& cfg = {}) {
  if (cell.empty()) throw Error(Errc::empty_cell, "partition cell is empty");
  const std::size_t M = sc.zone_count();
  for (std::size_t j : cell)
    if (j >= M) throw Error(Errc::dimension_mismatch, "cell references unknown zone");
  TncProfitModel model(sc, transit);
  detail::CellModel cm(model, cell);
  const std::size_t G = std::max<std::size_t>(cfg.grid_points, 2);
  const auto& bd = sc.bounds;

  auto ngrid_for = [&](std::size_t i) {
    const double lo = std::max(idle_floor(sc, i), std::min(0.1, bd.idle_max / 2));
    return geomspace(lo, bd.idle_max, G);
  };
  const auto rgrid = linspace(0.0, bd.rate_max, G);
  const auto bgrid = linspace(0.0, bd.base_fare_max, G);

  std::vector<std::size_t> outside;
  for (std::size_t i = 0; i < M; ++i)
    if (!cm.in_cell(i) && !cm.origin_entries(i).empty()) outside.push_back(i);
  std::vector<detail::InnerGrid> inner;
  inner.reserve(outside.size());
  for (std::size_t i : outside) inner.emplace_back(cm, model, i, rgrid, ngrid_for(i));

  TncStrategy hint_s = hint ? clamp_to_box(*hint, sc) : clamp_to_box(default_tnc(sc), sc);

  // Fills outside-origin decisions for the master in t and returns the cell value.
  auto evaluate = [&](TncStrategy& t) {
    double v = 0.0;
    for (std::size_t i = 0; i < M; ++i)
      if (cm.in_cell(i)) v += cm.origin_value(i, t.rate[i], t.idle[i], t);
    for (std::size_t q = 0; q < outside.size(); ++q) {
      const std::size_t i = outside[q];
      double r, n;
      double vi = inner[q].best(t, r, n);
      const double vh = cm.origin_value(i, hint_s.rate[i], hint_s.idle[i], t);
      if (vh >= vi) {
        vi = vh;
        r = hint_s.rate[i];
        n = hint_s.idle[i];
      }
      t.rate[i] = r;
      t.idle[i] = n;
      v += vi;
    }
    // origins without demand into the cell: idle fleet to its floor, no revenue
    for (std::size_t i = 0; i < M; ++i)
      if (!cm.in_cell(i) && cm.origin_entries(i).empty()) {
        t.idle[i] = std::max(idle_floor(sc, i), bd.idle_min);
        v -= cm.idle_weight() * t.idle[i];
      }
    return v;
  };

  std::vector<TncStrategy> starts{hint_s};
  {
    TncStrategy c = hint_s;
    c.base_fare = 0.5 * bd.base_fare_max;
    for (std::size_t j : cell) {
      c.rate[j] = 0.5 * bd.rate_max;
      const auto ng = ngrid_for(j);
      c.idle[j] = ng[G / 2];
    }
    starts.push_back(c);
  }

  TncStrategy best_t;
  double best_v = -std::numeric_limits<double>::infinity();
  for (auto s : starts) {
    double cur = evaluate(s);
    for (std::size_t pass = 0; pass < cfg.master_passes; ++pass) {
      const double before = cur;
      // coordinate 0: b; then (r_j, N_j) for each j in the cell
      const std::size_t ncoord = 1 + 2 * cell.size();
      for (std::size_t c = 0; c < ncoord; ++c) {
        const bool is_b = c == 0;
        const bool is_r = !is_b && (c - 1) % 2 == 0;
        const std::size_t j = is_b ? 0 : cell[(c - 1) / 2];
        std::vector<double> axis = is_b ? bgrid : is_r ? rgrid : ngrid_for(j);
        auto set = [&](TncStrategy& t, double v) {
          if (is_b) t.base_fare = v;
          else if (is_r) t.rate[j] = v;
          else t.idle[j] = v;
        };
        auto trial = [&](double v, TncStrategy& t) {
          t = s;
          set(t, v);
          return evaluate(t);
        };
        std::size_t bi = axis.size();
        double bv = cur;
        TncStrategy tmp;
        for (std::size_t a = 0; a < axis.size(); ++a) {
          const double val = trial(axis[a], tmp);
          if (val > bv) {
            bv = val;
            bi = a;
          }
        }
        if (bi == axis.size()) continue;
        const double lo = axis[bi > 0 ? bi - 1 : 0];
        const double hi = axis[std::min(bi + 1, axis.size() - 1)];
        double xbest = axis[bi];
        if (hi > lo) {
          const bool logscale = !is_b && !is_r;
          auto fun = [&](double u) {
            const double v = logscale ? std::exp(u) : u;
            return trial(v, tmp);
          };
          auto [u, fu] = logscale ? golden_section_max(fun, std::log(lo), std::log(hi), 1e-4, 30)
                                  : golden_section_max(fun, lo, hi, 1e-4 * (hi - lo + 1e-12), 30);
          if (fu > bv) {
            bv = fu;
            xbest = logscale ? std::exp(u) : u;
          }
        }
        set(s, xbest);
        cur = evaluate(s);
      }
      if (cur <= before + 1e-9 * std::max(1.0, std::abs(before))) break;
    }
    if (cur > best_v) {
      best_v = cur;
      best_t = s;
    }
  }

  // Joint smooth polish of the master (b, r_j, sqrt N_j) with outside decisions held,
  // alternated with fresh inner solves. Coordinate passes stall on the b/r coupling.
  for (int round = 0; round < 2; ++round) {
    SmoothProblem p;
    p.dim = 1 + 2 * cell.size();
    p.lower.assign(p.dim, 0.0);
    p.upper.assign(p.dim, 0.0);
    p.upper[0] = bd.base_fare_max;
    for (std::size_t c = 0; c < cell.size(); ++c) {
      p.upper[1 + 2 * c] = bd.rate_max;
      p.lower[2 + 2 * c] = std::sqrt(ngrid_for(cell[c]).front());
      p.upper[2 + 2 * c] = std::sqrt(bd.idle_max);
    }
    auto unpack = [&](std::span<const double> z) {
      TncStrategy t = best_t;
      t.base_fare = z[0];
      for (std::size_t c = 0; c < cell.size(); ++c) {
        t.rate[cell[c]] = z[1 + 2 * c];
        t.idle[cell[c]] = z[2 + 2 * c] * z[2 + 2 * c];
      }
      return t;
    };
    p.objective = [&](std::span<const double> z) { return cm.value(unpack(z)); };
    std::vector<double> z0(p.dim);
    z0[0] = best_t.base_fare;
    for (std::size_t c = 0; c < cell.size(); ++c) {
      z0[1 + 2 * c] = best_t.rate[cell[c]];
      z0[2 + 2 * c] = std::clamp(std::sqrt(best_t.idle[cell[c]]), p.lower[2 + 2 * c], p.upper[2 + 2 * c]);
    }
    const auto rep = solve_smooth(p, std::span<const double>(z0), cfg.solver);
    TncStrategy t = unpack(rep.x);
    double v = cm.value(t);
    TncStrategy fresh = t;
    if (const double vf = evaluate(fresh); vf > v) {
      v = vf;
      t = fresh;
    }
    if (!(v > best_v + 1e-12 * std::max(1.0, std::abs(best_v)))) break;
    best_v = v;
    best_t = t;
  }

  // Final local refinement of outside-origin decisions at the chosen master.
  for (std::size_t i : outside) {
    const double r0 = best_t.rate[i], n0 = best_t.idle[i];
    double cur = cm.origin_value(i, r0, n0, best_t);
    const double rstep = bd.rate_max / static_cast<double>(G - 1);
    const auto ng = ngrid_for(i);
    const double nratio = ng[1] / ng[0];
    for (int rep = 0; rep < 2; ++rep) {
      auto [r, fr] = golden_section_max(
          [&](double r) { return cm.origin_value(i, r, best_t.idle[i], best_t); },
          std::max(0.0, best_t.rate[i] - rstep), std::min(bd.rate_max, best_t.rate[i] + rstep), 1e-6, 40);
      if (fr > cur) {
        cur = fr;
        best_t.rate[i] = r;
      }
      const double nlo = std::max(ng.front(), best_t.idle[i] / nratio);
      const double nhi = std::min(ng.back(), best_t.idle[i] * nratio);
      auto [u, fn] = golden_section_max(
          [&](double u) { return cm.origin_value(i, best_t.rate[i], std::exp(u), best_t); }, std::log(nlo),
          std::log(nhi), 1e-7, 40);
      if (fn > cur) {
        cur = fn;
        best_t.idle[i] = std::exp(u);
      }
    }
  }

  CellSolution out;
  out.cell = cell;
  out.strategy = best_t;
  out.value = cm.value(best_t);
  for (std::size_t j : cell) out.per_destination.push_back({j, best_t.base_fare, best_t.rate, best_t.idle});
  return out;
}

struct ProfitBounds {
  double upper = 0.0;
  double lower = 0.0;
  double candidate = 0.0;
  double epsilon_abs = 0.0;
  double epsilon_rel = 0.0;
  std::vector<double> per_cell;
  TncStrategy blend;
};

/// Upper bound from the relaxed cells, lower bound at the profit-weighted blend of cell strategies.
inline ProfitBounds tnc_profit_bounds(const TncStrategy& candidate, const TransitStrategy& transit,
                                      const Scenario& sc, const Partition& partition,
                                      const TncSolveConfig& cfg = {}) {
  const std::size_t X = partition.cells.size();
  std::vector<CellSolution> sols(X);
  TncSolveConfig inner_cfg = cfg;
  inner_cfg.threads = 1;
  parallel_for(X, cfg.threads,
               [&](std::size_t x) { sols[x] = solve_relaxed_cell(partition.cells[x], transit, sc, &candidate, inner_cfg); });
  ProfitBounds pb;
  double wsum = 0.0;
  for (const auto& s : sols) {
    pb.per_cell.push_back(s.value);
    pb.upper += s.value;
    wsum += std::max(s.value, 0.0);
  }
  const std::size_t M = sc.zone_count();
  TncStrategy blend{0.0, std::vector<double>(M, 0.0), std::vector<double>(M, 0.0)};
  for (std::size_t x = 0; x < X; ++x) {
    const double w = wsum > 0 ? std::max(sols[x].value, 0.0) / wsum : 1.0 / static_cast<double>(X);
    blend.base_fare += w * sols[x].strategy.base_fare;
    for (std::size_t i = 0; i < M; ++i) {
      blend.rate[i] += w * sols[x].strategy.rate[i];
      blend.idle[i] += w * sols[x].strategy.idle[i];
    }
  }
  pb.blend = clamp_to_box(blend, sc);
  pb.lower = tnc_profit(pb.blend, transit, sc);
  pb.candidate = tnc_profit(candidate, transit, sc);
  pb.epsilon_abs = pb.upper - pb.candidate;
  pb.epsilon_rel = pb.upper != 0.0 ? pb.epsilon_abs / std::abs(pb.upper) : 0.0;
  return pb;
}

}  // namespace modalgame
