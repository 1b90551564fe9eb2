// Acceptance harness: one PASS/FAIL line per criterion. Exits nonzero when a
// criterion fails, except for parts named with --allow-fail (e.g. 7a).

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"

using namespace modalgame;

namespace {

// Tolerances, pinned.
constexpr double kLowerSlack = 1e-6;       // relative, lower side of the bound sandwich
constexpr double kUpperRounding = 1e-9;    // relative, upper vs candidate (summation order only)
constexpr double kEpsRelMax = 0.10;
constexpr double kDeviationSlack = 1e-6;   // absolute, $/hr
constexpr double kInnerMatch = 1e-3;       // relative ridership
constexpr double kFdStep = 1e-5;
constexpr double kFdAbs = 1e-5;
constexpr double kCrossStep = 1e-2;        // mixed differences need a larger step against roundoff
constexpr double kCrossMax = 1e-6;
constexpr double kOracleGap = 1e-3;        // relative
constexpr double kTheilAbs = 1e-12;
constexpr double kTrendRel = 1e-4;         // relative slack on monotone trends
constexpr double kSigma = 1e-3;
constexpr double kSandwichSeconds = 300.0;
constexpr double kOracleSeconds = 120.0;
constexpr double kSweepSeconds = 1800.0;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Result {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failed_parts;  // sub-criterion tags; empty means the whole criterion
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

SweepConfig sweep_cfg(bool expost, PartitionStrategy p = PartitionStrategy::pairwise) {
  SweepConfig c;
  c.equilibrium.threads = default_thread_count();
  c.partition = p;
  c.expost = expost;
  return c;
}

// SF synthetic scenario and its C_av = 30 solve, shared by several criteria.
struct Shared {
  Scenario sf = synthesize_sf_scenario(1);
  SweepResults solve;
  double solve_seconds = 0.0;
  const SweepRecord& base() const { return solve.records.front(); }
};

// ---------------------------------------------------------------------------

Result bound_sandwich(const Shared& s) {
  Result r;
  const auto t0 = Clock::now();
  EquilibriumConfig cfg;
  cfg.threads = default_thread_count();
  std::size_t checked = 0;
  for (std::uint64_t n = 0; n < 20; ++n) {
    const std::size_t M = 2 + n % 3, K = 1 + n % 2;
    const auto sc = oracle::random_scenario(100 + n, M, K);
    const auto ce = best_response_iterate(default_tnc(sc), default_transit(sc), sc, cfg);
    const auto rep = expost_evaluate(ce, sc, partition_zones(sc.network, PartitionStrategy::pairwise), cfg);
    r.require(rep.tnc_upper >= rep.tnc_profit - kUpperRounding * std::abs(rep.tnc_upper),
              fmt("scenario %d: upper %.6f < candidate %.6f", int(n), rep.tnc_upper, rep.tnc_profit));
    r.require(rep.tnc_profit >= rep.tnc_lower - kLowerSlack * std::abs(rep.tnc_lower),
              fmt("scenario %d: candidate %.6f < lower %.6f", int(n), rep.tnc_profit, rep.tnc_lower));
    ++checked;
  }
  const auto& b = s.base();
  r.require(b.ok() && b.has_expost, "SF solve failed: " + b.error);
  const double cand = b.market.tnc_profit;
  r.require(b.tnc_upper >= cand - kUpperRounding * std::abs(b.tnc_upper), "SF upper < candidate");
  r.require(cand >= b.tnc_lower - kLowerSlack * std::abs(b.tnc_lower), "SF candidate < lower");
  const double secs = seconds_since(t0) + s.solve_seconds;
  r.require(secs <= kSandwichSeconds, fmt("runtime %.0f s", secs));
  r.note(fmt("%d random + SF, SF upper %.0f >= %.0f >= lower %.0f, %.0f s", int(checked), b.tnc_upper, cand,
             b.tnc_lower, secs));
  return r;
}

Result epsilon_quality(const Shared& s) {
  Result r;
  const auto& b = s.base();
  r.require(b.epsilon_rel <= kEpsRelMax, fmt("eps_rel %.4f", b.epsilon_rel));
  const auto& sc = s.sf;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < 100; ++n) {
    TncStrategy dev;
    if (n % 2 == 0) {
      dev = oracle::random_tnc(rng, sc);
    } else {  // local perturbation of the candidate, up to 10% per coordinate
      dev = b.tnc;
      dev.base_fare *= 1.0 + 0.1 * U(rng);
      for (auto& v : dev.rate) v *= 1.0 + 0.1 * U(rng);
      for (auto& v : dev.idle) v *= 1.0 + 0.1 * U(rng);
    }
    dev = clamp_to_box(dev, sc);
    const double gain = tnc_profit(dev, b.transit, sc) - b.market.tnc_profit;
    worst = std::max(worst, gain);
  }
  r.require(worst <= b.epsilon_abs + kDeviationSlack, fmt("deviation gains %.4f > eps_abs %.4f", worst, b.epsilon_abs));
  r.note(fmt("eps_rel %.4f (eps_abs %.1f $/hr), best deviation gain %.2f", b.epsilon_rel, b.epsilon_abs, worst));
  return r;
}

std::vector<double> geometric(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  return v;
}

// Dense grid search followed by repeated regridding between the best point's
// neighbours; optima on a curved constraint boundary fall between coarse grid lines.
double zoom_max(std::vector<std::vector<double>> axes, const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> arg;
  double best = oracle::dense_max(axes, f, &arg);
  for (int level = 0; level < 4 && best >= 0.0; ++level) {
    for (std::size_t d = 0; d < axes.size(); ++d) {
      const auto& a = axes[d];
      const auto it = std::find(a.begin(), a.end(), arg[d]);
      const std::size_t k = static_cast<std::size_t>(it - a.begin());
      axes[d] = geometric(a[k > 0 ? k - 1 : 0], a[std::min(k + 1, a.size() - 1)], 101);
    }
    best = std::max(best, oracle::dense_max(axes, f, &arg));
  }
  return best;
}

// Expensive, sparse AMoD service keeps the two-zone transit problem feasible.
TncStrategy pricey_tnc() { return {20.0, {6.0, 6.0}, {10.0, 10.0}}; }

Result transit_global(const Shared& s) {
  Result r;
  const auto& b = s.base();
  r.require(std::abs(s.sf.wp_max - 20.0 / 60.0) < 1e-15, "SF transit wait cap is not 20 min");
  r.require(b.certificate_margin >= 0.0 && b.transit_global, fmt("certificate margin %.4g", b.certificate_margin));

  const auto tz = oracle::two_zone();
  const auto tnc = pricey_tnc();
  TransitRidershipModel model(tz, tnc);
  const auto f1 = geometric(tz.network.lines[0].f_min, tz.network.lines[0].f_max, 400);
  const auto f2 = geometric(tz.network.lines[1].f_min, tz.network.lines[1].f_max, 400);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, tz.rp_max);
  double worst = 0.0;
  int feasible = 0;
  for (int n = 0; n < 10; ++n) {
    const double rp = U(rng);
    const std::vector<double> f0{6.0, 6.0};
    const auto res = solve_transit_inner(model, rp, f0);
    const double grid = zoom_max({f1, f2}, [&](const std::vector<double>& f) {
      const TransitStrategy t{rp, f};
      for (double w : transit_waits(tz.network, t.frequency))
        if (w > tz.wp_max) return -1.0;
      if (oracle::transit_profit(tz, tnc, t) < tz.pi0) return -1.0;
      return oracle::ridership(tz, tnc, t);
    });
    if (grid < 0.0) {
      r.require(!res.feasible, fmt("r^p %.3f: grid infeasible, solver feasible", rp));
      continue;
    }
    ++feasible;
    r.require(res.feasible, fmt("r^p %.3f: solver infeasible", rp));
    if (!res.feasible) continue;
    const double gap = std::abs(res.ridership - grid) / grid;
    worst = std::max(worst, gap);
    r.require(gap <= kInnerMatch, fmt("r^p %.3f: ridership %.4f vs grid %.4f", rp, res.ridership, grid));
  }
  r.note(fmt("SF certificate margin %.4f /hr; %d/10 fares feasible, worst gap %.2e", b.certificate_margin, feasible,
             worst));
  return r;
}

Result hessian_structure(const Shared& s) {
  Result r;
  const auto& sc = s.sf;
  TransitRidershipModel m(sc, s.base().tnc);
  const std::size_t D = m.od_count();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double nmin = 1.0 / sc.wp_max;
  double e1 = 0.0, e2 = 0.0, ec = 0.0;
  for (int n = 0; n < 50; ++n) {
    const double rp = sc.rp_max * U(rng);
    std::vector<double> np(D);
    for (auto& v : np) v = nmin * (1.0 + 9.0 * U(rng));
    const std::size_t od = std::uniform_int_distribution<std::size_t>(0, D - 1)(rng);
    std::size_t other = std::uniform_int_distribution<std::size_t>(0, D - 2)(rng);
    if (other >= od) ++other;
    auto at = [&](double da, double db) {
      auto x = np;
      x[od] += da;
      x[other] += db;
      return m.ridership_np(rp, x);
    };
    const double h = kFdStep;
    e1 = std::max(e1, std::abs(m.dR_dN(od, rp, np[od]) - (at(h, 0) - at(-h, 0)) / (2 * h)));
    const double d2 = (m.dR_dN(od, rp, np[od] + h) - m.dR_dN(od, rp, np[od] - h)) / (2 * h);
    e2 = std::max(e2, std::abs(m.d2R_dN2(od, rp, np[od]) - d2));
    const double H = kCrossStep;
    ec = std::max(ec, std::abs((at(H, H) - at(H, -H) - at(-H, H) + at(-H, -H)) / (4 * H * H)));
  }
  r.require(e1 <= kFdAbs, fmt("dR/dN error %.2e", e1));
  r.require(e2 <= kFdAbs, fmt("d2R/dN2 error %.2e", e2));
  r.require(ec <= kCrossMax, fmt("cross derivative %.2e", ec));
  r.note(fmt("50 points: |dR/dN err| %.1e, |d2R/dN2 err| %.1e, |cross| %.1e", e1, e2, ec));
  return r;
}

Result oracle_equivalence() {
  Result r;
  const auto t0 = Clock::now();
  const auto tz = oracle::two_zone();
  {
    const auto tr = default_transit(tz);
    const auto br = solve_tnc_best_response(tr, tz);
    std::vector<std::vector<double>> axes{oracle::span(0.0, 0.5 * tz.bounds.base_fare_max, 9)};
    for (int i = 0; i < 2; ++i) axes.push_back(oracle::span(0.0, 0.6 * tz.bounds.rate_max, 9));
    for (int i = 0; i < 2; ++i) axes.push_back(oracle::span(1.0, 30.0, 9));  // sqrt of idle fleet
    const double grid = oracle::dense_max(axes, [&](const std::vector<double>& x) {
      return oracle::tnc_profit(tz, TncStrategy{x[0], {x[1], x[2]}, {x[3] * x[3], x[4] * x[4]}}, tr);
    });
    r.require(br.profit >= grid - kOracleGap * std::abs(grid), fmt("TNC %.3f vs grid %.3f", br.profit, grid));
    r.note(fmt("TNC %.2f vs grid %.2f", br.profit, grid));
  }
  {
    const auto tnc = pricey_tnc();
    const auto br = solve_transit_best_response(tnc, tz);
    const auto f1 = oracle::span(tz.network.lines[0].f_min, tz.network.lines[0].f_max, 100);
    const auto f2 = oracle::span(tz.network.lines[1].f_min, tz.network.lines[1].f_max, 100);
    const double grid = oracle::dense_max({oracle::span(0.0, tz.rp_max, 61), f1, f2}, [&](const std::vector<double>& x) {
      const TransitStrategy t{x[0], {x[1], x[2]}};
      for (double w : transit_waits(tz.network, t.frequency))
        if (w > tz.wp_max) return -1.0;
      if (oracle::transit_profit(tz, tnc, t) < tz.pi0) return -1.0;
      return oracle::ridership(tz, tnc, t);
    });
    r.require(grid > 0.0, "transit grid found no feasible point");
    r.require(br.ridership >= grid * (1.0 - kOracleGap), fmt("transit %.3f vs grid %.3f", br.ridership, grid));
    r.note(fmt("transit %.2f vs grid %.2f", br.ridership, grid));
  }
  const double secs = seconds_since(t0);
  r.require(secs <= kOracleSeconds, fmt("runtime %.0f s", secs));
  r.note(fmt("%.1f s", secs));
  return r;
}

DemandTensor strata_demand(const std::vector<std::vector<double>>& lam) {
  const std::size_t M = lam.size(), K = lam[0].size();
  DemandTensor d(M, K);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t k = 0; k < K; ++k) d.flow(i, i, k, Mode::outside) = lam[i][k];
  return d;
}

TheilReport strata_theil(const std::vector<std::vector<double>>& lam, const std::vector<std::vector<double>>& acc) {
  const std::size_t M = acc.size(), K = acc[0].size();
  std::vector<double> A(M * M * K, 0.0);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j)
      for (std::size_t k = 0; k < K; ++k) A[(i * M + j) * K + k] = acc[i][k];
  return theil_decompose(aggregate_accessibility(strata_demand(lam), A));
}

Result theil_identities() {
  Result r;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0.1, 10.0);
  double worst_sum = 0.0, worst_scale = 0.0;
  for (int n = 0; n < 200; ++n) {
    const std::size_t M = 2 + n % 6, K = 1 + n % 3;
    std::vector<std::vector<double>> lam(M, std::vector<double>(K)), acc = lam, scaled = lam;
    for (std::size_t i = 0; i < M; ++i)
      for (std::size_t k = 0; k < K; ++k) {
        lam[i][k] = U(rng);
        acc[i][k] = U(rng);
        scaled[i][k] = 4.3 * acc[i][k];
      }
    const auto t = strata_theil(lam, acc);
    const auto s = strata_theil(lam, scaled);
    worst_sum = std::max(worst_sum, std::abs(t.T - (t.within + t.between)));
    worst_scale = std::max({worst_scale, std::abs(s.T - t.T), std::abs(s.within - t.within),
                            std::abs(s.between - t.between)});
  }
  r.require(worst_sum <= kTheilAbs, fmt("T - within - between %.2e", worst_sum));
  r.require(worst_scale <= kTheilAbs, fmt("scale change %.2e", worst_scale));
  const auto uni = strata_theil({{1, 2}, {3, 4}, {5, 6}}, {{7, 7}, {7, 7}, {7, 7}});
  r.require(std::abs(uni.T) <= kTheilAbs, fmt("uniform T %.2e", uni.T));
  const auto skew = strata_theil({{1, 2}, {3, 1}}, {{2, 5}, {2, 5}});
  r.require(std::abs(skew.within) <= kTheilAbs && skew.between > 0.0,
            fmt("class-skewed within %.2e between %.2e", skew.within, skew.between));
  r.note(fmt("200 random strata, max |T - W - B| %.1e, max scale drift %.1e", worst_sum, worst_scale));
  return r;
}

// True when v[n+1] >= v[n] - slack along the given order (direction +1) or <= (direction -1).
bool monotone(const std::vector<double>& v, int direction, std::string& where) {
  bool ok = true;
  for (std::size_t n = 0; n + 1 < v.size(); ++n) {
    const double slack = kTrendRel * std::max(std::abs(v[n]), std::abs(v[n + 1]));
    const double step = direction * (v[n + 1] - v[n]);
    if (step < -slack) {
      ok = false;
      where += fmt(" [%d->%d: %.6g -> %.6g]", int(n), int(n + 1), v[n], v[n + 1]);
    }
  }
  return ok;
}

// Records in the order the sweep was requested.
std::vector<const SweepRecord*> in_order(const SweepResults& res, const std::vector<double>& values) {
  std::vector<const SweepRecord*> out;
  for (double v : values)
    for (const auto& x : res.records)
      if (x.value == v) out.push_back(&x);
  return out;
}

void check_trend(Result& r, const std::vector<const SweepRecord*>& recs, const char* label, int direction,
                 const std::function<double(const SweepRecord&)>& get) {
  std::vector<double> v;
  for (const auto* x : recs) v.push_back(get(*x));
  std::string where;
  std::ostringstream vals;
  for (double x : v) vals << (vals.tellp() > 0 ? "," : "") << fmt("%.6g", x);
  r.require(monotone(v, direction, where), std::string(label) + (direction > 0 ? " not nondecreasing" : " not nonincreasing") + where);
  r.note(std::string(label) + " " + vals.str());
}

Result trends(const Shared& s, double& sweep_seconds) {
  Result r;
  const auto t0 = Clock::now();
  bool whole = false;  // failures not attributable to a single sweep
  auto run = [&](const Scenario& base, SweepAxis axis, const std::vector<double>& values) {
    const auto res = run_sweep(base, axis, values, sweep_cfg(false));
    for (const auto& x : res.records)
      if (!x.ok() || !x.converged) {
        whole = true;
        r.require(false, fmt("%s=%g failed: %s", axis_name(axis), x.value, x.error.c_str()));
      }
    return res;
  };
  auto profit = [](const SweepRecord& x) { return x.market.tnc_profit; };
  auto within = [](const SweepRecord& x) { return x.theil.within; };
  auto between = [](const SweepRecord& x) { return x.theil.between; };

  Result a;
  const std::vector<double> cav{36, 33, 30, 27, 24, 20};
  const auto ra = run(s.sf, SweepAxis::c_av, cav);
  const auto oa = in_order(ra, cav);
  check_trend(a, oa, "fleet", +1, [](const SweepRecord& x) { return x.market.fleet_cost / x.value; });
  check_trend(a, oa, "avg fare", -1, [](const SweepRecord& x) { return x.market.avg_amod_fare; });
  check_trend(a, oa, "profit", +1, profit);
  check_trend(a, oa, "T", +1, [](const SweepRecord& x) { return x.theil.T; });
  std::ostringstream wb;
  for (const auto* x : oa) wb << (wb.tellp() > 0 ? "," : "") << fmt("%.6g/%.6g", x->theil.within, x->theil.between);
  a.note("within/between " + wb.str());

  // policy studies at C_av = 20
  const Scenario sf20 = patch_scenario(s.sf, SweepAxis::c_av, 20.0);
  Result b;
  const double inf = std::numeric_limits<double>::infinity();
  const std::vector<double> wmax{inf, 3.0, 2.5, 2.0, 1.5};
  const auto ob = in_order(run(sf20, SweepAxis::amod_wait_max, wmax), wmax);
  check_trend(b, ob, "within", -1, within);
  check_trend(b, ob, "between", +1, between);
  check_trend(b, ob, "profit", -1, profit);

  Result c;
  const std::vector<double> sub{0, 1, 2, 3, 4};
  const auto oc = in_order(run(sf20, SweepAxis::subsidy, sub), sub);
  check_trend(c, oc, "ridership", +1, [](const SweepRecord& x) { return x.market.transit_ridership; });
  check_trend(c, oc, "profit", +1, profit);
  check_trend(c, oc, "within", -1, within);
  check_trend(c, oc, "between", -1, between);

  sweep_seconds = seconds_since(t0);
  const std::tuple<const Result*, const char*, const char*> parts[] = {
      {&a, "7a", "C_av 36->20"}, {&b, "7b", "w^a_max inf->1.5 min"}, {&c, "7c", "s 0->4"}};
  for (const auto& [sub_r, tag, name] : parts) {
    std::printf("  %s %s %s: %s\n", sub_r->pass ? "PASS" : "FAIL", tag, name, sub_r->detail.c_str());
    r.require(sub_r->pass, std::string(tag) + " failed");
    if (!sub_r->pass) r.failed_parts.push_back(tag);
  }

  whole = whole || sweep_seconds > kSweepSeconds;
  r.require(sweep_seconds <= kSweepSeconds, fmt("runtime %.0f s", sweep_seconds));
  if (whole) r.failed_parts.clear();
  r.note(fmt("16 points, %.0f s", sweep_seconds));
  return r;
}

Result robustness(const Shared& s) {
  Result r;
  const auto& sc = s.sf;
  const auto& b = s.base();
  EquilibriumConfig cfg;
  cfg.threads = default_thread_count();
  cfg.sigma = kSigma;
  std::vector<CandidateEquilibrium> sols;
  sols.push_back({b.tnc, b.transit, b.iterations, b.converged, {}});
  for (double frac : {0.15, 0.85}) {
    TncStrategy t = default_tnc(sc);
    t.base_fare = frac * sc.bounds.base_fare_max;
    for (auto& v : t.rate) v = frac * sc.bounds.rate_max;
    for (auto& v : t.idle) v = frac < 0.5 ? 2.0 : 400.0;
    TransitStrategy p = default_transit(sc);
    p.fare_per_mile = frac * sc.rp_max;
    for (std::size_t l = 0; l < p.frequency.size(); ++l) p.frequency[l] = frac < 0.5 ? 4.0 : 40.0;
    sols.push_back(best_response_iterate(clamp_to_box(t, sc), p, sc, cfg));
  }
  for (std::size_t a = 0; a < sols.size(); ++a) {
    r.require(sols[a].converged, fmt("guess %d did not converge", int(a)));
    for (std::size_t c = a + 1; c < sols.size(); ++c) {
      const double dt = tnc_distance(sols[a].tnc, sols[c].tnc, cfg.idle_scale);
      const double dp = transit_distance(sols[a].transit, sols[c].transit);
      r.require(dt <= kSigma && dp <= kSigma, fmt("guesses %d/%d differ: tnc %.2e transit %.2e", int(a), int(c), dt, dp));
      r.note(fmt("%d/%d: %.1e, %.1e", int(a), int(c), dt, dp));
    }
  }
  r.note(fmt("iterations %d/%d/%d", int(sols[0].iterations), int(sols[1].iterations), int(sols[2].iterations)));
  return r;
}

Result determinism(const Shared& s) {
  Result r;
  const auto again = run_sweep(s.sf, SweepAxis::c_av, {30.0}, sweep_cfg(true));
  r.require(again == s.solve, "solve records differ");
  r.require(render_results(again, ExportFormat::json) == render_results(s.solve, ExportFormat::json),
            "solve JSON differs");
  const std::vector<double> values{30.0, 26.0};
  const auto w1 = run_sweep(s.sf, SweepAxis::c_av, values, sweep_cfg(false));
  const auto w2 = run_sweep(s.sf, SweepAxis::c_av, values, sweep_cfg(false));
  r.require(w1 == w2, "sweep records differ");
  r.require(render_results(w1, ExportFormat::csv) == render_results(w2, ExportFormat::csv), "sweep CSV differs");
  r.note(fmt("solve and 2-point sweep repeated with %d thread(s)", int(default_thread_count())));
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> allowed;
  for (int a = 1; a < argc; ++a) {
    if (std::strcmp(argv[a], "--allow-fail") == 0 && a + 1 < argc) {
      allowed.insert(argv[++a]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--allow-fail TAG]...\n");
      return 2;
    }
  }

  Shared s;
  {
    const auto t0 = Clock::now();
    s.solve = run_sweep(s.sf, SweepAxis::c_av, {30.0}, sweep_cfg(true));
    s.solve_seconds = seconds_since(t0);
  }

  int failed = 0, blocking = 0;
  auto print = [&](int id, const char* name, const Result& r) {
    std::printf("CRITERION %d %s %s: %s\n", id, r.pass ? "PASS" : "FAIL", name, r.detail.c_str());
    std::fflush(stdout);
    if (r.pass) return;
    ++failed;
    std::vector<std::string> tags = r.failed_parts;
    if (tags.empty()) tags.push_back(std::to_string(id));
    for (const auto& t : tags)
      if (!allowed.count(t)) {
        ++blocking;
        break;
      }
  };
  auto guarded = [&](int id, const char* name, const std::function<Result()>& f) {
    try {
      print(id, name, f());
    } catch (const std::exception& e) {
      print(id, name, Result{false, std::string("exception: ") + e.what(), {}});
    }
  };

  double sweep_seconds = 0.0;
  guarded(1, "bound sandwich", [&] { return bound_sandwich(s); });
  guarded(2, "epsilon quality", [&] { return epsilon_quality(s); });
  guarded(3, "transit global optimality", [&] { return transit_global(s); });
  guarded(4, "ridership derivatives", [&] { return hessian_structure(s); });
  guarded(5, "oracle equivalence", [] { return oracle_equivalence(); });
  guarded(6, "Theil identities", [] { return theil_identities(); });
  guarded(7, "qualitative trends", [&] { return trends(s, sweep_seconds); });
  guarded(8, "best-response robustness", [&] { return robustness(s); });
  guarded(9, "determinism", [&] { return determinism(s); });

  std::printf("%d of 9 criteria passed", 9 - failed);
  if (!allowed.empty()) {
    std::printf(" (failures allowed for:");
    for (const auto& t : allowed) std::printf(" %s", t.c_str());
    std::printf(")");
  }
  std::printf("\n");
  return blocking > 0 ? 1 : 0;
}
