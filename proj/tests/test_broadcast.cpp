#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vending/broadcast.hpp"
#include "vending/oracle.hpp"

using namespace vending;

namespace {

Eigen::ArrayXd random_kernel(std::mt19937_64& rng, int cells, int outs) {
  std::exponential_distribution<double> e(1.0);
  Eigen::ArrayXd v(cells * outs);
  for (int c = 0; c < cells; ++c) {
    for (int o = 0; o < outs; ++o) v[c * outs + o] = e(rng);
    v.segment(c * outs, outs) /= v.segment(c * outs, outs).sum();
  }
  return v;
}

BroadcastDecision random_decision(std::mt19937_64& rng, const BroadcastCRModel& m) {
  return BroadcastDecision::from_values(m, random_kernel(rng, m.x.size(), m.a.size()),
                                        random_kernel(rng, m.x.size(), m.x1.size() * m.x2.size()));
}

double entropy_bits(std::initializer_list<double> p) {
  double h = 0;
  for (double v : p)
    if (v > 0) h -= v * std::log2(v);
  return h;
}

// Y = X, one action.
BroadcastCRModel revealing_model(double p0) {
  BroadcastCRModel m;
  m.x = FiniteAlphabet("X", 2);
  m.y = FiniteAlphabet("Y", 2);
  m.a = FiniteAlphabet("A", 1);
  m.x1 = FiniteAlphabet("X1", 2);
  m.x2 = FiniteAlphabet("X2", 2);
  Eigen::ArrayXd px(2), ch(4);
  px << p0, 1 - p0;
  ch << 1, 0, 0, 1;
  m.source = JointPmf({m.x}, px);
  m.vm_channel = CondKernel({m.a, m.x}, {m.y}, ch);
  m.d1 = DistortionTable::hamming(m.x, m.x1);
  m.d2 = DistortionTable::hamming(m.x, m.x2);
  m.cost = CostTable::zero(m.a);
  return m;
}

// Min over R >= 0 of w . R inside the region, scanning Rb on a fine grid. For
// fixed Rb the (R1, R2) part is solved in closed form.
double scan_lp(const RateBounds& b, const Weights3& w) {
  double best = HUGE_VAL;
  const int n = 200000;
  const double top = std::max({b.lb, b.l1b, b.l2b, b.l12b});
  for (int i = 0; i <= n; ++i) {
    const double t = b.lb + (top - b.lb) * i / n;
    const double a = std::max(0.0, b.l1b - t), c = std::max(0.0, b.l2b - t), s = std::max(0.0, b.l12b - t);
    double v = w.w1 * a + w.w2 * c + w.wb * t;
    if (a + c < s) v += std::min(w.w1, w.w2) * (s - a - c);
    best = std::min(best, v);
  }
  return best;
}

}  // namespace

TEST(Broadcast, RevealingSideInformationCorners) {
  const auto m = revealing_model(0.3);
  Eigen::ArrayXd act = Eigen::ArrayXd::Ones(2);
  Eigen::ArrayXd rec = Eigen::ArrayXd::Zero(8);
  for (int x = 0; x < 2; ++x) rec[x * 4 + x * 2 + x] = 1.0;  // X1 = X2 = X
  const RatePoint3 p = corner(m, BroadcastDecision::from_values(m, act, rec));
  const double hx = entropy_bits({0.3, 0.7});
  EXPECT_NEAR(p.bounds.lb, 0.0, 1e-12);
  EXPECT_NEAR(p.bounds.l1b, 0.0, 1e-12);
  EXPECT_NEAR(p.bounds.l2b, hx, 1e-12);
  EXPECT_NEAR(p.bounds.l12b, hx, 1e-12);
  EXPECT_NEAR(p.d1, 0.0, 1e-15);
  EXPECT_NEAR(p.d2, 0.0, 1e-15);
}

TEST(Broadcast, AssemblyFactorsThroughSource) {
  std::mt19937_64 rng(3);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto m = random_binary_broadcast(s).model;
    const JointPmf j = assemble_joint(m, random_decision(rng, m));
    EXPECT_LE(mutual_information(j, {"X1", "X2"}, {"A", "Y"}, {"X"}), 1e-10);
    EXPECT_LE(mutual_information(j, {"Y"}, {"X1", "X2"}, {"A", "X"}), 1e-10);
  }
}

TEST(Broadcast, BoundsAreOrderedAndChainRuleHolds) {
  std::mt19937_64 rng(17);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto m = random_binary_broadcast(s).model;
    for (int t = 0; t < 40; ++t) {
      const RatePoint3 p = corner(m, random_decision(rng, m));
      const auto& b = p.bounds;
      EXPECT_LE(b.lb, b.l1b + 1e-12);
      EXPECT_LE(b.lb, b.l2b + 1e-12);
      EXPECT_LE(b.l2b, b.l12b + 1e-12);
      EXPECT_NEAR(p.terms.i_x_x1x2_given_ay, p.terms.i_x_x2_given_ay + p.terms.i_x_x1_given_ayx2, 1e-12);
    }
  }
}

TEST(Broadcast, EvaluatorMatchesGenericRoute) {
  std::mt19937_64 rng(5);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto m = random_binary_broadcast(s).model;
    const BroadcastEvaluator ev(m);
    for (int t = 0; t < 30; ++t) {
      const Eigen::ArrayXd act = random_kernel(rng, 2, 2), rec = random_kernel(rng, 2, 4);
      std::vector<double> flat(act.begin(), act.end());
      flat.insert(flat.end(), rec.begin(), rec.end());
      const auto fast = ev(flat);
      const auto slow = corner(m, BroadcastDecision::from_values(m, act, rec));
      EXPECT_NEAR(fast.bounds.lb, slow.bounds.lb, 1e-9);
      EXPECT_NEAR(fast.bounds.l1b, slow.bounds.l1b, 1e-9);
      EXPECT_NEAR(fast.bounds.l2b, slow.bounds.l2b, 1e-9);
      EXPECT_NEAR(fast.bounds.l12b, slow.bounds.l12b, 1e-9);
      EXPECT_NEAR(fast.d1, slow.d1, 1e-12);
      EXPECT_NEAR(fast.d2, slow.d2, 1e-12);
      EXPECT_NEAR(fast.gamma, slow.gamma, 1e-12);
    }
  }
}

TEST(Broadcast, RateTripleLpMatchesScan) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> wd(0.05, 3.0);
  const auto m = random_binary_broadcast(2).model;
  for (int t = 0; t < 25; ++t) {
    const RateBounds b = corner(m, random_decision(rng, m)).bounds;
    const Weights3 w{wd(rng), wd(rng), wd(rng)};
    const RateTriple r = optimal_rate_triple(b, w);
    EXPECT_GE(min_slack(b, r), -1e-12);
    EXPECT_GE(std::min({r.r1, r.r2, r.rb}), -1e-12);
    EXPECT_NEAR(weighted(w, r), scan_lp(b, w), 1e-4);
    EXPECT_LE(weighted(w, r), scan_lp(b, w) + 1e-12);
  }
}

TEST(Broadcast, RateTripleOnHandBounds) {
  // Expensive common rate: push everything into R1 and R2.
  const RateBounds b{0.2, 0.5, 0.7, 0.9};
  const RateTriple r = optimal_rate_triple(b, {1, 1, 10});
  EXPECT_NEAR(r.rb, 0.2, 1e-15);
  EXPECT_NEAR(r.r1 + r.r2, 0.8, 1e-15);
  // Cheap common rate: Rb carries the largest bound.
  const RateTriple c = optimal_rate_triple(b, {1, 1, 0.5});
  EXPECT_NEAR(c.rb, 0.9, 1e-15);
  EXPECT_NEAR(c.r1 + c.r2, 0.0, 1e-15);
}

TEST(Broadcast, LooseBudgetGivesZeroRates) {
  const auto inst = random_binary_broadcast(4);
  SearchConfig cfg;
  cfg.restarts = 2;
  const auto r = min_weighted_rate3(inst.model, {1, 1, 1}, {1, 1, 1}, cfg);
  ASSERT_TRUE(r.point);
  EXPECT_NEAR(r.objective, 0.0, 1e-9);
}

TEST(Broadcast, SurfaceEnvelopeIsParetoSet) {
  const auto inst = random_binary_broadcast(1);
  SearchConfig cfg;
  cfg.restarts = 2;
  cfg.lattice_resolution = 4;
  const std::vector<Weights3> grid{{1, 1, 1}, {2, 1, 1}, {1, 2, 1}, {1, 1, 2}, {3, 1, 1}};
  const Surface s = trace_surface3(inst.model, inst.budget, grid, cfg);
  ASSERT_TRUE(s.failures.empty());
  ASSERT_FALSE(s.envelope.empty());
  for (std::size_t i : s.envelope)
    for (const auto& row : s.rows) {
      const auto& a = s.rows[i].result.point->rates;
      const auto& b = row.result.point->rates;
      const bool dominates = b.r1 <= a.r1 && b.r2 <= a.r2 && b.rb <= a.rb && (b.r1 < a.r1 || b.r2 < a.r2 || b.rb < a.rb);
      EXPECT_FALSE(dominates);
    }
}

TEST(Broadcast, MembershipOfLosslessCorner) {
  const auto m = revealing_model(0.5);
  SearchConfig cfg;
  cfg.restarts = 4;
  const auto yes = membership3(m, {0.0, 1.0, 0.0}, {0, 0, 0}, cfg);
  EXPECT_EQ(yes.verdict, Verdict::achievable);
  const auto no = membership3(m, {0.0, 0.5, 0.0}, {0, 0, 0}, cfg);
  EXPECT_EQ(no.verdict, Verdict::not_found_at_resolution);
}
