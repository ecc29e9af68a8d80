#include <gtest/gtest.h>

#include <set>

#include "vending/oracle.hpp"

using namespace vending;

TEST(Lattice, CompositionCounts) {
  EXPECT_EQ(simplex_lattice_count(2, 2), 3u);
  EXPECT_EQ(simplex_lattice_count(4, 8), 330u);
  const std::vector<SimplexBlock> cascade{{4, 8}};
  EXPECT_EQ(lattice_count(cascade, 4), 330ull * 330 * 330 * 330);
  const std::vector<SimplexBlock> tiny{{2, 2}};
  EXPECT_EQ(lattice_count(tiny, 2), 9u);
  const std::vector<SimplexBlock> huge{{64, 64}};
  EXPECT_EQ(lattice_count(huge, 16), UINT64_MAX);
}

TEST(Lattice, CompositionsAreLexicographic) {
  const auto c = compositions(2, 2);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0], (std::vector<int>{0, 2}));
  EXPECT_EQ(c[1], (std::vector<int>{1, 1}));
  EXPECT_EQ(c[2], (std::vector<int>{2, 0}));
  EXPECT_EQ(compositions(4, 3).size(), simplex_lattice_count(4, 3));
}

TEST(Lattice, EnumeratorVisitsEveryPointOnce) {
  LatticeEnumerator e({{2, 2}, {1, 3}}, 2, 1000);
  EXPECT_EQ(e.count(), 9u * 6u);
  std::set<std::vector<int>> seen;
  std::vector<int> first;
  while (e.next()) {
    const std::vector<int> u(e.units().begin(), e.units().end());
    if (first.empty()) first = u;
    EXPECT_TRUE(seen.insert(u).second);
    double s0 = e.point()[0] + e.point()[1];
    EXPECT_DOUBLE_EQ(s0, 1.0);
  }
  EXPECT_EQ(seen.size(), 54u);
  EXPECT_EQ(first, (std::vector<int>{0, 2, 0, 2, 0, 0, 2}));
}

TEST(Lattice, GuardRejectsLargeGrids) {
  EXPECT_THROW(LatticeEnumerator({{4, 8}}, 4, 1000), GuardExceeded);
  try {
    LatticeEnumerator({{2, 2}}, 2, 5);
    FAIL();
  } catch (const GuardExceeded& g) {
    EXPECT_EQ(g.count(), 9u);
  }
}

TEST(Oracle, LooseBudgetMinimumIsZero) {
  const auto inst = random_binary_broadcast(2);
  const auto r = brute_force_min(inst.model, {1, 1, 1}, {1, 1, 1}, GridSpec{});
  ASSERT_TRUE(r.point);
  EXPECT_NEAR(r.objective, 0.0, 1e-12);
}

TEST(Oracle, BroadcastMatchesRepeatedEvaluation) {
  // Every lattice point evaluated independently through the generic route.
  const auto inst = random_binary_broadcast(3);
  GridSpec g;
  g.resolution = 2;
  const Weights3 w{1, 0.5, 2};
  const auto r = brute_force_min(inst.model, inst.budget, w, g);
  double best = HUGE_VAL;
  LatticeEnumerator e({{2, 2}, {2, 4}}, 2, 1000000);
  while (e.next()) {
    const auto p = corner(inst.model, BroadcastDecision::from_params(inst.model, e.point()));
    if (p.d1 > inst.budget.d1 + 1e-12 || p.d2 > inst.budget.d2 + 1e-12 || p.gamma > inst.budget.gamma + 1e-12)
      continue;
    best = std::min(best, weighted(w, optimal_rate_triple(p.bounds, w)));
  }
  ASSERT_TRUE(r.point);
  EXPECT_NEAR(r.objective, best, 1e-12);
}

TEST(Oracle, DecomposedMatchesFullEnumeration) {
  // |U| = 1 and K = 2 keep full enumeration small.
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const auto inst = random_binary_cascade(s);
    GridSpec g;
    g.resolution = 2;
    g.u_size = 1;
    for (Weights2 w : {Weights2{1, 1}, Weights2{1, 0.25}, Weights2{0.25, 1}}) {
      g.method = OracleMethod::full;
      const auto full = brute_force_min(inst.model, inst.budget, w, g);
      g.method = OracleMethod::decomposed;
      const auto dec = brute_force_min(inst.model, inst.budget, w, g);
      ASSERT_EQ(full.point.has_value(), dec.point.has_value());
      if (full.point) {
        EXPECT_NEAR(full.objective, dec.objective, 1e-12);
      }
    }
  }
}

TEST(Oracle, DecomposedMatchesFullWithAuxiliary) {
  const auto inst = random_binary_cascade(4);
  GridSpec g;
  g.resolution = 2;
  g.u_size = 2;
  for (Weights2 w : {Weights2{1, 1}}) {
    g.method = OracleMethod::full;
    const auto full = brute_force_min(inst.model, {0.5, 0.5, 1}, w, g);
    g.method = OracleMethod::decomposed;
    const auto dec = brute_force_min(inst.model, {0.5, 0.5, 1}, w, g);
    ASSERT_TRUE(full.point && dec.point);
    EXPECT_NEAR(full.objective, dec.objective, 1e-12);
  }
}

TEST(Oracle, FullMethodRespectsGuard) {
  const auto inst = random_binary_cascade(1);
  GridSpec g;
  g.method = OracleMethod::full;
  g.guard = 1000;
  EXPECT_THROW(brute_force_min(inst.model, inst.budget, {1, 1}, g), GuardExceeded);
}

TEST(Oracle, RestrictActionsKeepsOneAction) {
  const auto inst = random_binary_cascade(2);
  const auto m = restrict_actions(inst.model, 1);
  EXPECT_EQ(m.a.size(), 1);
  EXPECT_DOUBLE_EQ(m.cost.values[0], inst.model.cost.values[1]);
}

TEST(Oracle, BudgetLadderIsNonincreasing) {
  const auto inst = random_binary_broadcast(5);
  GridSpec g;
  g.resolution = 3;
  for (int coord = 0; coord < 3; ++coord) {
    const auto v = budget_ladder(inst.model, inst.budget, {1, 1, 1}, coord, 5, g);
    ASSERT_EQ(v.size(), 5u);
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LE(v[i], v[i - 1] + 1e-12);
  }
}

TEST(Suite, BroadcastInvariantsPass) {
  const auto r = invariant_suite(ModelFamily::broadcast, 3, 200);
  EXPECT_TRUE(r.ok()) << r.to_string();
}

TEST(Suite, CascadeInvariantsPass) {
  const auto r = invariant_suite(ModelFamily::cascade, 3, 200);
  EXPECT_TRUE(r.ok()) << r.to_string();
}
