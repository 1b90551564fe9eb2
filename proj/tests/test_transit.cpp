#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace modalgame;

namespace {

double share_oracle(const Scenario& sc, std::size_t i, std::size_t j, std::size_t k, const TncStrategy& tnc,
                    const TransitStrategy& tr) {
  const auto p = oracle::shares(oracle::costs(sc, i, j, k, tnc, tr), sc.behavior.epsilon);
  return p[1] + p[2] + p[3] + p[4];
}

}  // namespace

TEST(TransitRidership, UniformLogitCountsFourModes) {
  auto sc = oracle::random_scenario(2, 3, 2);
  sc.behavior.epsilon = 0.0;
  double total = 0.0;
  for (double v : sc.potential_demand) total += v;
  for (double& v : sc.potential_demand) v *= 600.0 / total;
  std::mt19937_64 rng(1);
  EXPECT_NEAR(transit_ridership(oracle::random_transit(rng, sc), oracle::random_tnc(rng, sc), sc), 400.0, 1e-9);
}

TEST(TransitRidership, DecreasesInFare) {
  const auto sc = oracle::random_scenario(3, 4, 2);
  std::mt19937_64 rng(2);
  const auto tnc = oracle::random_tnc(rng, sc);
  auto tr = oracle::random_transit(rng, sc);
  double prev = std::numeric_limits<double>::infinity();
  for (double rp : oracle::span(0.0, 3.0, 7)) {
    tr.fare_per_mile = rp;
    const double r = transit_ridership(tr, tnc, sc);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(TransitRidership, MatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto sc = oracle::random_scenario(seed, 2 + seed % 4, 1 + seed % 3, 3);
    std::mt19937_64 rng(seed);
    const auto tnc = oracle::random_tnc(rng, sc);
    const auto tr = oracle::random_transit(rng, sc);
    const double o = oracle::ridership(sc, tnc, tr);
    EXPECT_NEAR(transit_ridership(tr, tnc, sc), o, 1e-10 * o);
    const double po = oracle::transit_profit(sc, tnc, tr);
    EXPECT_NEAR(transit_profit(tr, tnc, sc), po, 1e-10 * std::max(1.0, std::abs(po)));
  }
}

TEST(TransitProfit, FreeLinesEarnFareRevenue) {
  auto sc = oracle::random_scenario(5, 3, 1);
  for (auto& l : sc.network.lines) l.op_cost = 0.0;
  std::mt19937_64 rng(5);
  const auto tnc = oracle::random_tnc(rng, sc);
  const auto tr = oracle::random_transit(rng, sc);
  EXPECT_DOUBLE_EQ(transit_profit(tr, tnc, sc), transit_revenue(tr, tnc, sc));
}

TEST(TransitProfit, NoDemandPaysOperatingCost) {
  auto sc = oracle::random_scenario(5, 3, 1, 2);
  for (auto& v : sc.potential_demand) v = 0.0;
  for (auto& l : sc.network.lines) l.op_cost = 100.0;
  const TransitStrategy tr{1.0, {10.0, 10.0}};
  std::mt19937_64 rng(5);
  EXPECT_DOUBLE_EQ(transit_profit(tr, oracle::random_tnc(rng, sc), sc), -2000.0);
}

TEST(RidershipModel, ChangeOfVariablesIsIdentity) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sc = oracle::random_scenario(seed, 4, 3, 3);
    std::mt19937_64 rng(seed);
    const auto tnc = oracle::random_tnc(rng, sc);
    TransitRidershipModel m(sc, tnc);
    std::uniform_real_distribution<double> U(0.02, 1.0);
    for (int n = 0; n < 10; ++n) {
      std::vector<double> wp(16), np(16);
      for (std::size_t q = 0; q < 16; ++q) np[q] = 1.0 / (wp[q] = U(rng));
      const double rp = 3.0 * U(rng);
      const double a = m.ridership(rp, wp), b = m.ridership_np(rp, np);
      EXPECT_NEAR(a, b, 1e-12 * a);
    }
  }
}

TEST(RidershipModel, MatchesFullChoiceModel) {
  const auto sc = oracle::random_scenario(8, 3, 2, 2);
  std::mt19937_64 rng(8);
  const auto tnc = oracle::random_tnc(rng, sc);
  const auto tr = oracle::random_transit(rng, sc);
  TransitRidershipModel m(sc, tnc);
  const auto wp = transit_waits(sc.network, tr.frequency);
  const double o = oracle::ridership(sc, tnc, tr);
  EXPECT_NEAR(m.ridership(tr.fare_per_mile, wp), o, 1e-10 * o);
}

TEST(RidershipModel, DerivativesMatchFiniteDifferences) {
  const auto sc = oracle::random_scenario(9, 3, 3);
  std::mt19937_64 rng(9);
  const auto tnc = oracle::random_tnc(rng, sc);
  TransitRidershipModel m(sc, tnc);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double h = 1e-5;
  for (int n = 0; n < 20; ++n) {
    std::vector<double> np(9);
    for (auto& v : np) v = 2.0 + 20.0 * U(rng);
    const double rp = 3.0 * U(rng);
    const std::size_t od = static_cast<std::size_t>(n) % 9, other = (od + 4) % 9;
    auto R = [&](std::span<const double> x) { return m.ridership_np(rp, x); };
    auto at = [&](std::size_t a, double da, std::size_t b, double db) {
      auto x = np;
      x[a] += da;
      x[b] += db;
      return R(x);
    };
    const double fd1 = (at(od, h, od, 0) - at(od, -h, od, 0)) / (2 * h);
    EXPECT_NEAR(m.dR_dN(od, rp, np[od]), fd1, 1e-5 * std::max(1.0, std::abs(fd1)));
    const double H = 1e-3;
    const double fd2 = (at(od, H, od, 0) - 2 * R(np) + at(od, -H, od, 0)) / (H * H);
    EXPECT_NEAR(m.d2R_dN2(od, rp, np[od]), fd2, 1e-4 * std::max(1.0, std::abs(fd2)));
    const double cross = (at(od, h, other, h) - at(od, h, other, -h) - at(od, -h, other, h) + at(od, -h, other, -h)) /
                         (4 * h * h);
    EXPECT_LE(std::abs(cross), 1e-6 * std::max(1.0, R(np)));
    for (const auto& e : m.od_entries(od)) {
      const double g = (m.g1(e, rp, np[od] + h) - m.g1(e, rp, np[od] - h)) / (2 * h);
      const double closed = m.epsilon() * e.alpha / (np[od] * np[od]) * m.g1(e, rp, np[od]);
      EXPECT_NEAR(closed, g, 1e-6 * std::max(1e-8, std::abs(g)));
    }
  }
}

TEST(ConcavityRhs, MatchesRawLogitShares) {
  for (std::size_t K : {1u, 3u}) {
    const auto sc = oracle::random_scenario(11 + K, 3, K, 1);
    std::mt19937_64 rng(K);
    const auto tnc = oracle::random_tnc(rng, sc);
    TransitRidershipModel m(sc, tnc);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int n = 0; n < 20; ++n) {
      const double rp = 3.0 * U(rng), np = 0.5 + 30.0 * U(rng);
      const std::size_t i = n % 3, j = (n / 3) % 3;
      const TransitStrategy tr{rp, {np}};  // one line through every zone: w^p = 1/f
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double P = share_oracle(sc, i, j, k, tnc, tr);
        const double a = sc.behavior.classes[k].alpha, l0 = sc.potential(i, j, k);
        num += a * a * l0 * P * (1 - P) * (1 - 2 * P);
        den += a * l0 * P * (1 - P);
        if (K == 1) {
          const double direct = 0.5 * sc.behavior.epsilon * a * (1 - 2 * P);
          EXPECT_NEAR(m.concavity_rhs(i * 3 + j, rp, np), direct, 1e-9 * std::max(1.0, std::abs(direct)));
        }
      }
      const double expect = 0.5 * sc.behavior.epsilon * num / den;
      EXPECT_NEAR(m.concavity_rhs(i * 3 + j, rp, np), expect, 1e-9 * std::max(1.0, std::abs(expect)));
    }
  }
}

TEST(ConcavityRhs, SmallFleetLimit) {
  const auto sc = oracle::random_scenario(21, 3, 3);
  std::mt19937_64 rng(21);
  TransitRidershipModel m(sc, oracle::random_tnc(rng, sc));
  for (std::size_t od = 0; od < 9; ++od) {
    double a2 = 0.0, a1 = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double a = sc.behavior.classes[k].alpha, l0 = sc.potential(od / 3, od % 3, k);
      a2 += a * a * l0;
      a1 += a * l0;
    }
    EXPECT_NEAR(m.concavity_rhs(od, 1.0, 1e-6), 0.5 * sc.behavior.epsilon * a2 / a1, 1e-9);
  }
}

TEST(FixedPoint, Synthetic) {
  EXPECT_EQ(largest_fixed_point([](double) { return -1.0; }, 30.0), 0.0);
  EXPECT_NEAR(largest_fixed_point([](double) { return 2.5; }, 30.0), 2.5, 1e-12);
  EXPECT_EQ(largest_fixed_point([](double) { return 50.0; }, 30.0), 30.0);
}

TEST(FixedPoint, MatchesDenseScanOnSfOds) {
  const auto sc = synthesize_sf_scenario(7);
  TransitRidershipModel m(sc, default_tnc(sc));
  const double step = 1e-4;
  for (std::size_t od : {0u, 19u, 100u, 323u})
    for (double rp : {0.0, 1.5, 3.0}) {
      double dense = 0.0;
      for (double n = 100.0; n >= 1e-6; n -= step)
        if (m.concavity_rhs(od, rp, n) >= n) {
          dense = n;
          break;
        }
      EXPECT_NEAR(solve_Nhat(m, od, rp, 100.0), dense, step + 1e-9) << "od " << od << " rp " << rp;
    }
}

TEST(Certificate, ThresholdLogic) {
  auto sc = oracle::random_scenario(4, 3, 2);
  std::mt19937_64 rng(4);
  const auto tnc = oracle::random_tnc(rng, sc);
  sc.wp_max = 1e9;
  EXPECT_FALSE(certify_concavity(sc, tnc, default_fare_grid(sc, 7)).holds);
  sc.wp_max = 1.0 / 3.0;
  sc.behavior.epsilon = 0.0;
  const auto c = certify_concavity(sc, tnc, default_fare_grid(sc, 7));
  EXPECT_TRUE(c.holds);
  for (double nb : c.nbar) EXPECT_EQ(nb, 0.0);
}

TEST(Certificate, HoldsOnSfAndImpliesConcavity) {
  const auto sc = synthesize_sf_scenario(7);
  const auto tnc = default_tnc(sc);
  const auto c = certify_concavity(sc, tnc, default_fare_grid(sc), default_thread_count());
  EXPECT_TRUE(c.holds);
  EXPECT_GT(c.min_margin, 0.0);
  for (std::size_t od = 0; od < c.nbar.size(); ++od) EXPECT_NEAR(c.margins[od], c.threshold - c.nbar[od], 1e-12);

  TransitRidershipModel m(sc, tnc);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const std::size_t n = m.od_count();
  for (int t = 0; t < 50; ++t) {
    const double rp = sc.rp_max * U(rng);
    std::vector<double> a(n), b(n), mid(n);
    for (std::size_t q = 0; q < n; ++q) {
      a[q] = c.threshold * (1 + 9 * U(rng));
      b[q] = c.threshold * (1 + 9 * U(rng));
      mid[q] = 0.5 * (a[q] + b[q]);
    }
    const double ra = m.ridership_np(rp, a), rb = m.ridership_np(rp, b), rm = m.ridership_np(rp, mid);
    EXPECT_GE(rm, 0.5 * (ra + rb) - 1e-9 * rm);
  }
}

TEST(TransitBestResponse, FreeUnconstrainedLinesRunAtCeiling) {
  auto sc = oracle::random_scenario(6, 3, 1, 2);
  for (auto& l : sc.network.lines) l.op_cost = 0.0;
  std::mt19937_64 rng(6);
  TransitSolveConfig cfg;
  cfg.fare_grid = 7;
  cfg.certify = false;
  const auto br = solve_transit_best_response(oracle::random_tnc(rng, sc), sc, nullptr, cfg);
  for (std::size_t l = 0; l < sc.line_count(); ++l)
    EXPECT_GE(br.strategy.frequency[l], sc.network.lines[l].f_max * (1 - 1e-3));
}

TEST(TransitBestResponse, InfeasibleProfitFloor) {
  auto sc = oracle::two_zone();
  sc.pi0 = 1e9;
  TransitSolveConfig cfg;
  cfg.fare_grid = 5;
  cfg.certify = false;
  try {
    solve_transit_best_response(default_tnc(sc), sc, nullptr, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::infeasible);
  }
}

TEST(TransitBestResponse, TwoZoneMatchesDenseGrid) {
  const auto sc = oracle::two_zone();
  // expensive, sparse AMoD service leaves transit enough riders to cover its costs
  const TncStrategy tnc{20.0, {6.0, 6.0}, {10.0, 10.0}};
  const auto br = solve_transit_best_response(tnc, sc);
  // feasibility of the returned point, checked with the oracle
  EXPECT_GE(oracle::transit_profit(sc, tnc, br.strategy), sc.pi0 - 1e-6);
  const auto wp = transit_waits(sc.network, br.strategy.frequency);
  for (double w : wp) EXPECT_LE(w, sc.wp_max * (1 + 1e-9));
  EXPECT_NEAR(br.ridership, oracle::ridership(sc, tnc, br.strategy), 1e-9 * br.ridership);

  const auto f1 = oracle::span(sc.network.lines[0].f_min, sc.network.lines[0].f_max, 100);
  const auto f2 = oracle::span(sc.network.lines[1].f_min, sc.network.lines[1].f_max, 100);
  const double grid = oracle::dense_max({oracle::span(0.0, sc.rp_max, 61), f1, f2}, [&](const std::vector<double>& x) {
    const TransitStrategy t{x[0], {x[1], x[2]}};
    for (double w : transit_waits(sc.network, t.frequency))
      if (w > sc.wp_max) return -1.0;
    if (oracle::transit_profit(sc, tnc, t) < sc.pi0) return -1.0;
    return oracle::ridership(sc, tnc, t);
  });
  ASSERT_GT(grid, 0.0);
  EXPECT_GE(br.ridership, grid * (1 - 1e-3));
  EXPECT_TRUE(br.global);
}
