#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "choice.hpp"
#include "error.hpp"
#include "optim.hpp"
#include "parallel.hpp"
#include "scenario.hpp"
#include "strategy.hpp"

namespace modalgame {

/// Trips using transit (p, b1, b2, b3), from the full choice model.
inline double transit_ridership(const TransitStrategy& transit, const TncStrategy& tnc, const Scenario& sc) {
  const auto d = compute_demand(sc, tnc, transit);
  return d.total(Mode::transit) + d.total(Mode::first_mile) + d.total(Mode::last_mile) + d.total(Mode::both);
}

inline double transit_operating_cost(const TransitStrategy& transit, const Scenario& sc) {
  double c = 0.0;
  for (std::size_t l = 0; l < sc.line_count(); ++l) c += transit.frequency[l] * sc.network.lines[l].op_cost;
  return c;
}

inline double transit_revenue(const TransitStrategy& transit, const TncStrategy& tnc, const Scenario& sc) {
  const auto d = compute_demand(sc, tnc, transit);
  const std::size_t M = sc.zone_count();
  double rev = 0.0;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 0; k < sc.class_count(); ++k)
        rev += transit.fare_per_mile * sc.network.transit_distance(i, j) *
               (d.flow(i, j, k, Mode::transit) + d.flow(i, j, k, Mode::first_mile) +
                d.flow(i, j, k, Mode::last_mile) + d.flow(i, j, k, Mode::both));
  return rev;
}

/// Fare revenue minus line operating cost ($/hour).
inline double transit_profit(const TransitStrategy& transit, const TncStrategy& tnc, const Scenario& sc) {
  return transit_revenue(transit, tnc, sc) - transit_operating_cost(transit, sc);
}

/// Transit side with the TNC strategy fixed. The transit share of an OD/class is
/// P = sigmoid(L - eps*(gamma*l^p*r^p + alpha*w^p)), where L collects the fixed costs.
class TransitRidershipModel {
 public:
  struct Entry {
    std::size_t k;
    double lambda0, alpha, gamma, lp, offset;
  };

  TransitRidershipModel(const Scenario& sc, const TncStrategy& tnc) : sc_(sc) {
    const auto& net = sc.network;
    const std::size_t M = sc.zone_count(), K = sc.class_count();
    eps_ = sc.behavior.epsilon;
    ServiceLevels lv{amod_waits(net, tnc), std::vector<double>(M * M, 0.0)};
    by_od_.resize(M * M);
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t j = 0; j < M; ++j)
        for (std::size_t k = 0; k < K; ++k) {
          const double l0 = sc.potential(i, j, k);
          if (l0 <= 0) continue;
          const auto c = generalized_costs(i, j, k, tnc, 0.0, lv, net, sc.behavior, sc.policy);
          const double e = eps_;
          auto lse = [e](std::initializer_list<double> costs) {
            double top = -std::numeric_limits<double>::infinity();
            for (double v : costs) top = std::max(top, -e * v);
            double s = 0.0;
            for (double v : costs) s += std::exp(-e * v - top);
            return top + std::log(s);
          };
          const double L = lse({c[idx(Mode::transit)], c[idx(Mode::first_mile)], c[idx(Mode::last_mile)],
                                c[idx(Mode::both)]}) -
                           lse({c[idx(Mode::amod)], c[idx(Mode::outside)]});
          const auto& cls = sc.behavior.classes[k];
          by_od_[i * M + j].push_back({k, l0, cls.alpha, cls.gamma, net.transit_distance(i, j), L});
        }
  }

  const Scenario& scenario() const noexcept { return sc_; }
  double epsilon() const noexcept { return eps_; }
  const std::vector<Entry>& od_entries(std::size_t od) const { return by_od_[od]; }
  std::size_t od_count() const noexcept { return by_od_.size(); }

  double share(const Entry& e, double rp, double wp) const {
    const double x = e.offset - eps_ * (e.gamma * e.lp * rp + e.alpha * wp);
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }

  /// Scaled g-functions for one entry: g1 sums transit-mode weights, g0 all modes
  /// (both divided by the non-transit weight, which the ratios do not depend on).
  double g1(const Entry& e, double rp, double np) const {
    return std::exp(e.offset - eps_ * (e.gamma * e.lp * rp + e.alpha / np));
  }

  /// Ridership and fare revenue of one OD at transit wait wp; optional derivatives in wp.
  void od_eval(std::size_t od, double rp, double wp, double& rider, double& revenue, double* d_rider = nullptr,
               double* d_revenue = nullptr) const {
    rider = revenue = 0.0;
    double dr = 0.0, dv = 0.0;
    for (const auto& e : by_od_[od]) {
      const double P = share(e, rp, wp);
      rider += e.lambda0 * P;
      revenue += rp * e.lp * e.lambda0 * P;
      const double dP = -eps_ * e.alpha * P * (1.0 - P);
      dr += e.lambda0 * dP;
      dv += rp * e.lp * e.lambda0 * dP;
    }
    if (d_rider) *d_rider = dr;
    if (d_revenue) *d_revenue = dv;
  }

  double ridership(double rp, std::span<const double> wp) const {
    double r = 0.0, rev, x;
    for (std::size_t od = 0; od < by_od_.size(); ++od) {
      od_eval(od, rp, wp[od], x, rev);
      r += x;
    }
    return r;
  }

  double revenue(double rp, std::span<const double> wp) const {
    double v = 0.0, x, rev;
    for (std::size_t od = 0; od < by_od_.size(); ++od) {
      od_eval(od, rp, wp[od], x, rev);
      v += rev;
    }
    return v;
  }

  /// Ridership written in the reformulated variables N^p = 1 / w^p.
  double ridership_np(double rp, std::span<const double> np) const {
    double r = 0.0;
    for (std::size_t od = 0; od < by_od_.size(); ++od)
      for (const auto& e : by_od_[od]) {
        const double g1v = g1(e, rp, np[od]);
        r += e.lambda0 * g1v / (1.0 + g1v);
      }
    return r;
  }

  /// dR/dN^p for one OD: sum_k lambda0 (g0 - g1)/g0^2 * dg1/dN.
  double dR_dN(std::size_t od, double rp, double np) const {
    double s = 0.0;
    for (const auto& e : by_od_[od]) {
      const double g1v = g1(e, rp, np), g0 = 1.0 + g1v;
      const double dg1 = eps_ * e.alpha / (np * np) * g1v;
      s += e.lambda0 * (g0 - g1v) / (g0 * g0) * dg1;
    }
    return s;
  }

  /// d2R/dN^p2 for one OD: sum_k lambda0 (g0 - g1)/g0^3 (g1'' g0 - 2 g1'^2).
  double d2R_dN2(std::size_t od, double rp, double np) const {
    double s = 0.0;
    for (const auto& e : by_od_[od]) {
      const double g1v = g1(e, rp, np), g0 = 1.0 + g1v;
      const double ea = eps_ * e.alpha;
      const double dg1 = ea / (np * np) * g1v;
      const double d2g1 = ea / (np * np * np) * g1v * (ea / np - 2.0);
      s += e.lambda0 * (g0 - g1v) / (g0 * g0 * g0) * (d2g1 * g0 - 2.0 * dg1 * dg1);
    }
    return s;
  }

  /// Right-hand side of the per-OD concavity condition N^p >= RHS(r^p, N^p).
  double concavity_rhs(std::size_t od, double rp, double np) const {
    double num = 0.0, den = 0.0;
    for (const auto& e : by_od_[od]) {
      const double P = share(e, rp, 1.0 / np);
      const double q = e.lambda0 * P * (1.0 - P);
      num += e.alpha * e.alpha * q * (1.0 - 2.0 * P);
      den += e.alpha * q;
    }
    if (!(den > 0)) {
      // all shares saturated: use the small-N limit, which is the supremum of the ratio
      double a2 = 0.0, a1 = 0.0;
      for (const auto& e : by_od_[od]) {
        a2 += e.alpha * e.alpha * e.lambda0;
        a1 += e.alpha * e.lambda0;
      }
      if (!(a1 > 0)) return 0.0;
      const double P = by_od_[od].empty() ? 0.0 : share(by_od_[od][0], rp, 1.0 / np);
      return P < 0.5 ? 0.5 * eps_ * a2 / a1 : -0.5 * eps_ * a2 / a1;
    }
    return 0.5 * eps_ * num / den;
  }

 private:
  const Scenario& sc_;
  std::vector<std::vector<Entry>> by_od_;
  double eps_ = 0.0;
};

/// Largest root of N = rhs(N) on (0, n_cap], by a geometric scan from n_cap
/// downward then bisection. Returns n_cap if rhs(n_cap) >= n_cap and 0 when
/// rhs(N) < N on the whole scan.
template <class Rhs>
double largest_fixed_point(Rhs&& rhs, double n_cap, std::size_t scan_points = 400, double span_decades = 9.0) {
  auto h = [&](double n) { return rhs(n) - n; };
  if (h(n_cap) >= 0.0) return n_cap;
  const double ratio = std::pow(10.0, -span_decades / static_cast<double>(scan_points));
  double hi = n_cap;
  for (std::size_t s = 1; s <= scan_points; ++s) {
    const double lo = n_cap * std::pow(ratio, static_cast<double>(s));
    if (h(lo) >= 0.0) {
      double a = lo, b = hi;  // h(a) >= 0 > h(b)
      for (int it = 0; it < 200 && (b - a) > 1e-14 * b; ++it) {
        const double m = 0.5 * (a + b);
        if (h(m) >= 0.0) a = m;
        else b = m;
      }
      return 0.5 * (a + b);
    }
    hi = lo;
  }
  return 0.0;
}

inline double solve_Nhat(const TransitRidershipModel& model, std::size_t od, double rp, double n_cap) {
  return largest_fixed_point([&](double n) { return model.concavity_rhs(od, rp, n); }, n_cap);
}

struct ConcavityCertificate {
  std::vector<double> nbar;     // per OD, max over the fare grid of Nhat (1/hour)
  std::vector<double> margins;  // threshold - nbar
  double threshold = 0.0;       // 1 / w^p_max
  bool holds = false;
  double min_margin = 0.0;
};

inline std::vector<double> default_fare_grid(const Scenario& sc, std::size_t n = 61) {
  return linspace(0.0, sc.rp_max, n);
}

inline ConcavityCertificate certify_concavity(const Scenario& sc, const TncStrategy& tnc,
                                              const std::vector<double>& rp_grid, std::size_t threads = 1) {
  TransitRidershipModel model(sc, tnc);
  const double threshold = 1.0 / sc.wp_max;
  const double cap = 10.0 * threshold;
  ConcavityCertificate cert;
  cert.threshold = threshold;
  cert.nbar.assign(model.od_count(), 0.0);
  parallel_for(model.od_count(), threads, [&](std::size_t od) {
    double m = 0.0;
    for (double rp : rp_grid) m = std::max(m, solve_Nhat(model, od, rp, cap));
    cert.nbar[od] = m;
  });
  cert.holds = true;
  cert.min_margin = std::numeric_limits<double>::infinity();
  for (double nb : cert.nbar) {
    cert.margins.push_back(threshold - nb);
    cert.holds = cert.holds && nb <= threshold;
    cert.min_margin = std::min(cert.min_margin, threshold - nb);
  }
  return cert;
}

struct TransitSolveConfig {
  SolveConfig solver{};
  std::size_t fare_grid = 61;
  std::size_t refine_iterations = 20;
  bool certify = true;
  std::size_t threads = 1;
};

struct TransitInnerResult {
  bool feasible = false;
  std::vector<double> frequency;
  double ridership = -std::numeric_limits<double>::infinity();
  double profit = 0.0;
  bool converged = false;
};

struct TransitBestResponse {
  TransitStrategy strategy;
  double ridership = 0.0;
  double profit = 0.0;
  bool converged = false;
  bool global = false;
  std::optional<ConcavityCertificate> certificate;
};

namespace detail {

/// Distinct phi rows; wait caps only need one constraint per distinct row.
inline std::vector<std::vector<double>> distinct_phi_rows(const MultimodalNetwork& net) {
  std::vector<std::vector<double>> rows;
  const std::size_t M = net.zone_count();
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) {
      auto r = net.phi.row(i, j);
      std::vector<double> v(r.begin(), r.end());
      if (std::find(rows.begin(), rows.end(), v) == rows.end()) rows.push_back(std::move(v));
    }
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace detail

/// Ridership-maximizing frequencies at a fixed fare, subject to the wait caps and
/// the profit floor. Transit waits are the harmonic-mean bound of the frequencies.
inline TransitInnerResult solve_transit_inner(const TransitRidershipModel& model, double rp,
                                              std::span<const double> f0, const SolveConfig& scfg = {}) {
  const auto& sc = model.scenario();
  const auto& net = sc.network;
  const std::size_t L = net.line_count(), M = sc.zone_count();
  const auto rows = detail::distinct_phi_rows(net);
  double cost_scale = 1.0;
  for (const auto& l : net.lines) cost_scale += l.op_cost * l.f_max;

  auto waits = [&](std::span<const double> f) {
    std::vector<double> wp(M * M);
    for (std::size_t od = 0; od < M * M; ++od) {
      auto ph = net.phi.row(od / M, od % M);
      double w = 0.0;
      for (std::size_t l = 0; l < L; ++l) w += ph[l] / f[l];
      wp[od] = w;
    }
    return wp;
  };

  SmoothProblem p;
  p.dim = L;
  for (const auto& l : net.lines) {
    p.lower.push_back(l.f_min);
    p.upper.push_back(l.f_max);
  }
  p.objective = [&](std::span<const double> f) { return model.ridership(rp, waits(f)); };
  p.objective_gradient = [&](std::span<const double> f, std::span<double> g) {
    const auto wp = waits(f);
    std::fill(g.begin(), g.end(), 0.0);
    double total = 0.0;
    for (std::size_t od = 0; od < M * M; ++od) {
      double r, v, dr;
      model.od_eval(od, rp, wp[od], r, v, &dr);
      total += r;
      auto ph = net.phi.row(od / M, od % M);
      for (std::size_t l = 0; l < L; ++l)
        if (ph[l] != 0.0) g[l] += dr * (-ph[l] / (f[l] * f[l]));
    }
    return total;
  };
  p.constraint_count = rows.size() + 1;
  p.constraint_jacobian = true;
  p.constraints = [&, rows, cost_scale](std::span<const double> f, std::span<double> g, std::span<double> jac) {
    for (std::size_t c = 0; c < rows.size(); ++c) {
      double w = 0.0;
      for (std::size_t l = 0; l < L; ++l) w += rows[c][l] / f[l];
      g[c] = (sc.wp_max - w) / sc.wp_max;
      if (!jac.empty())
        for (std::size_t l = 0; l < L; ++l) jac[c * L + l] = rows[c][l] / (f[l] * f[l] * sc.wp_max);
    }
    const auto wp = waits(f);
    double rev = 0.0, cost = 0.0;
    const std::size_t last = rows.size();
    if (!jac.empty())
      for (std::size_t l = 0; l < L; ++l) jac[last * L + l] = -net.lines[l].op_cost / cost_scale;
    for (std::size_t od = 0; od < M * M; ++od) {
      double r, v, dr, dv;
      model.od_eval(od, rp, wp[od], r, v, &dr, &dv);
      rev += v;
      if (!jac.empty()) {
        auto ph = net.phi.row(od / M, od % M);
        for (std::size_t l = 0; l < L; ++l)
          if (ph[l] != 0.0) jac[last * L + l] += dv * (-ph[l] / (f[l] * f[l])) / cost_scale;
      }
    }
    for (std::size_t l = 0; l < L; ++l) cost += net.lines[l].op_cost * f[l];
    g[last] = (rev - cost - sc.pi0) / cost_scale;
  };

  TransitInnerResult out;
  auto start = find_strictly_feasible(p, f0, scfg);
  if (!start) return out;
  auto rep = solve_smooth(p, std::span<const double>(*start), scfg);
  out.feasible = true;
  out.frequency = rep.x;
  out.ridership = rep.value;
  const auto wp = waits(rep.x);
  double cost = 0.0;
  for (std::size_t l = 0; l < L; ++l) cost += net.lines[l].op_cost * rep.x[l];
  out.profit = model.revenue(rp, wp) - cost;
  out.converged = rep.converged;
  return out;
}

/// Hierarchical best response: fare grid with golden refinement around the best
/// point, frequencies solved at each fare.
inline TransitBestResponse solve_transit_best_response(const TncStrategy& tnc, const Scenario& sc,
                                                       const TransitStrategy* warm = nullptr,
                                                       const TransitSolveConfig& cfg = {}) {
  TransitRidershipModel model(sc, tnc);
  const TransitStrategy w0 = warm ? *warm : default_transit(sc);
  std::vector<double> f0 = w0.frequency;
  for (std::size_t l = 0; l < sc.line_count(); ++l)
    f0[l] = std::clamp(f0[l], sc.network.lines[l].f_min, sc.network.lines[l].f_max);

  const auto grid = linspace(0.0, sc.rp_max, std::max<std::size_t>(cfg.fare_grid, 2));
  std::vector<TransitInnerResult> res(grid.size());
  parallel_for(grid.size(), cfg.threads,
               [&](std::size_t g) { res[g] = solve_transit_inner(model, grid[g], f0, cfg.solver); });
  std::size_t best = grid.size();
  for (std::size_t g = 0; g < grid.size(); ++g)
    if (res[g].feasible && (best == grid.size() || res[g].ridership > res[best].ridership)) best = g;
  if (best == grid.size())
    throw Error(Errc::infeasible, "no transit fare meets the profit floor and wait caps");

  double best_rp = grid[best];
  TransitInnerResult best_res = res[best];
  const double lo = grid[best > 0 ? best - 1 : 0];
  const double hi = grid[std::min(best + 1, grid.size() - 1)];
  if (cfg.refine_iterations > 0 && hi > lo) {
    const std::vector<double> fb = best_res.frequency;
    auto [rp, val] = golden_section_max(
        [&](double rp) {
          auto r = solve_transit_inner(model, rp, fb, cfg.solver);
          if (r.feasible && r.ridership > best_res.ridership) {
            best_res = r;
            best_rp = rp;
          }
          return r.feasible ? r.ridership : -std::numeric_limits<double>::infinity();
        },
        lo, hi, 1e-6 * sc.rp_max, cfg.refine_iterations);
    (void)rp;
    (void)val;
  }

  TransitBestResponse out;
  out.strategy = {best_rp, best_res.frequency};
  out.ridership = best_res.ridership;
  out.profit = best_res.profit;
  out.converged = best_res.converged;
  if (cfg.certify) {
    out.certificate = certify_concavity(sc, tnc, default_fare_grid(sc, cfg.fare_grid), cfg.threads);
    out.global = out.certificate->holds;
  }
  return out;
}

}  // namespace modalgame
