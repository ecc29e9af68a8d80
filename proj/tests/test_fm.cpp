#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "vending/fm.hpp"

using namespace vending;
using namespace vending::fm;

namespace {

JointPmf random_binary_joint(std::mt19937_64& rng, const EntropyBasis& basis) {
  std::vector<FiniteAlphabet> axes;
  for (const auto& v : basis.variables()) axes.emplace_back(v, 2);
  std::gamma_distribution<double> g(0.5, 1.0);
  Eigen::ArrayXd p(1 << basis.variables().size());
  for (auto& v : p) v = g(rng) + 1e-300;
  return JointPmf(axes, p / p.sum());
}

}  // namespace

TEST(Canonicalize, CoprimeIntegersKeepSign) {
  const auto basis = EntropyBasis::broadcast();
  IneqSystem sys;
  sys.rate_vars = {"R1", "R2"};
  LinIneq q{RationalVector(2), basis.zero()};
  q.rate << Rational(2, 3), Rational(-4, 3);
  q.entropy[0] = Rational(1, 6);
  const LinIneq c = canonicalize(q);
  EXPECT_EQ(c.rate[0], Rational(4));
  EXPECT_EQ(c.rate[1], Rational(-8));
  EXPECT_EQ(c.entropy[0], Rational(1));
}

TEST(EntropyBasis, ChainRuleIsVectorIdentity) {
  const auto b = EntropyBasis::broadcast();
  EXPECT_EQ(b.dimension(), 31);
  EXPECT_EQ(b.mutual_information({"X"}, {"X1", "X2"}, {"A", "Y"}),
            b.mutual_information({"X"}, {"X2"}, {"A", "Y"}) + b.mutual_information({"X"}, {"X1"}, {"A", "Y", "X2"}));
  EXPECT_EQ(b.mutual_information({"X"}, {"A"}), b.mutual_information({"A"}, {"X"}));
  EXPECT_EQ(b.entropy({"X", "Y"}), b.entropy({"Y"}) + b.entropy({"X"}, {"Y"}));
  EXPECT_THROW(b.mask_of({"W"}), std::invalid_argument);
}

TEST(EntropyBasis, EvaluateAgreesWithShannonFunctionals) {
  std::mt19937_64 rng(2);
  const auto b = EntropyBasis::broadcast();
  auto dot = [](const RationalVector& v, const Eigen::VectorXd& h) {
    double s = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += static_cast<double>(v[i]) * h[i];
    return s;
  };
  for (int t = 0; t < 20; ++t) {
    const JointPmf j = random_binary_joint(rng, b);
    const Eigen::VectorXd h = b.evaluate(j);
    EXPECT_NEAR(dot(b.mutual_information({"X"}, {"X1"}, {"A", "Y", "X2"}), h),
                mutual_information(j, {"X"}, {"X1"}, {"A", "Y", "X2"}), 1e-12);
    EXPECT_NEAR(dot(b.entropy({"X", "A"}, {"Y"}), h), entropy(j, {"X", "A"}, {"Y"}), 1e-12);
  }
}

TEST(InfoTerm, ParseRoundTrip) {
  const auto t = InfoTerm::parse("I(X;X2|A,Y)");
  EXPECT_EQ(t.kind, InfoTerm::Kind::mutual_information);
  EXPECT_EQ(t.to_string(), "I(X;X2|A,Y)");
  EXPECT_EQ(InfoTerm::parse("H(X,Y|A)").to_string(), "H(X,Y|A)");
  EXPECT_EQ(expand_atom(EntropyBasis::broadcast(), InfoTerm::parse("I(X;A)")),
            EntropyBasis::broadcast().mutual_information({"X"}, {"A"}));
  EXPECT_THROW(InfoTerm::parse("I(X|A)"), std::invalid_argument);
  EXPECT_THROW(InfoTerm::parse("I(X;Y;Z)"), std::invalid_argument);
}

TEST(Eliminate, SmallHandSystem) {
  // a - b >= 0, H(X) - a >= 0  =>  H(X) - b >= 0
  IneqSystem sys;
  sys.rate_vars = {"a", "b"};
  const RationalVector hx = sys.basis.entropy({"X"});
  sys.ineqs = {sys.make({{"a", 1}, {"b", -1}}, sys.basis.zero()), sys.make({{"a", -1}}, hx)};
  const IneqSystem out = normalized(eliminate(sys, "a"));
  ASSERT_EQ(out.rate_vars, std::vector<std::string>{"b"});
  ASSERT_EQ(out.ineqs.size(), 1u);
  EXPECT_EQ(out.ineqs[0].rate[0], Rational(-1));
  EXPECT_EQ(out.ineqs[0].entropy, hx);
}

TEST(Eliminate, UnboundedVariableDropsRows) {
  // a >= b only: a eliminated leaves no constraint on b.
  IneqSystem sys;
  sys.rate_vars = {"a", "b"};
  sys.ineqs = {sys.make({{"a", 1}, {"b", -1}}, sys.basis.zero())};
  EXPECT_TRUE(normalized(eliminate(sys, "a")).ineqs.empty());
}

TEST(Projection, DefaultOrderGivesTargetRegion) {
  const ProjectionTrace t = project_broadcast();
  EXPECT_EQ(t.raw.rate_vars, (std::vector<std::string>{"R1", "R2", "Rb"}));
  EXPECT_EQ(t.pruned.ineqs.size(), 4u);
  EXPECT_GE(t.raw.ineqs.size(), t.pruned.ineqs.size());
  EXPECT_TRUE(same_system(t.pruned, golden_broadcast_region()));
  const std::string text = format_system(t.pruned);
  EXPECT_NE(text.find("R1 + R2 + Rb >= I(X;A) + I(X;X2|A) + I(X;X1|A,Y,X2)"), std::string::npos);
  EXPECT_NE(text.find("Rb >= I(X;A)\n"), std::string::npos);
}

TEST(Projection, EveryOrderGivesSameRegion) {
  std::vector<std::string> order = kSplitRates;
  std::mt19937_64 rng(4);
  for (int t = 0; t < 12; ++t) {
    std::shuffle(order.begin(), order.end(), rng);
    ProjectionOptions o;
    o.order = order;
    EXPECT_TRUE(same_system(project_broadcast(o).pruned, golden_broadcast_region()));
  }
  EXPECT_THROW(project_broadcast({{"r0b", "r0d"}, {}}), std::invalid_argument);
}

TEST(Projection, DroppingNonnegativityChangesRegion) {
  ProjectionOptions o;
  o.drop_nonneg = {"r2d"};
  const auto t = project_broadcast(o);
  EXPECT_FALSE(same_system(t.pruned, golden_broadcast_region()));
  EXPECT_GT(sample_equivalence(t.pruned, golden_broadcast_region(), 2000, 3).disagreements, 0u);
}

TEST(Projection, PruningKeepsTheRegion) {
  const auto t = project_broadcast();
  const auto r = sample_equivalence(t.raw, t.pruned, 2000, 8);
  EXPECT_EQ(r.disagreements, 0u);
  EXPECT_EQ(r.triples, 20000u);
}

TEST(Projection, EquivalenceDetectsMissingRow) {
  IneqSystem weaker = golden_broadcast_region();
  weaker.ineqs.pop_back();
  const auto r = sample_equivalence(weaker, golden_broadcast_region(), 5000, 1);
  EXPECT_GT(r.disagreements, 0u);
  ASSERT_FALSE(r.examples.empty());
  EXPECT_TRUE(r.examples.front().in_a);
  EXPECT_FALSE(r.examples.front().in_b);
}

TEST(Projection, BackSubstitutionRecoversSplitRates) {
  // Completeness: every point of the projected region lifts to a point of the
  // full rate-split system.
  const auto t = project_broadcast();
  const auto& b = t.pruned.basis;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> slack(0.0, 0.3);
  int lifted = 0;
  for (int k = 0; k < 200; ++k) {
    const JointPmf j = random_binary_joint(rng, b);
    const RationalVector h = to_rational(b.evaluate(j));
    auto val = [&](const RationalVector& v) {
      Rational s = 0;
      for (Eigen::Index i = 0; i < v.size(); ++i) s += v[i] * h[i];
      return s;
    };
    const Rational lb = val(b.mutual_information({"X"}, {"A"}));
    const Rational x2a = val(b.mutual_information({"X"}, {"X2"}, {"A"}));
    const Rational x12 = val(b.mutual_information({"X"}, {"X1", "X2"}, {"A", "Y"}));
    const Rational x1 = val(b.mutual_information({"X"}, {"X1"}, {"A", "Y", "X2"}));
    // a point of the region with some slack in every coordinate
    const Rational rb = lb + Rational(slack(rng));
    const Rational r2 = std::max<Rational>(0, x2a + lb - rb) + Rational(slack(rng));
    Rational r1 = std::max<Rational>(0, x12 + lb - rb);
    r1 = std::max<Rational>(r1, lb + x2a + x1 - r2 - rb) + Rational(slack(rng));
    const std::map<std::string, Rational> rates{{"R1", r1}, {"R2", r2}, {"Rb", rb}};
    for (const auto& q : t.pruned.ineqs) ASSERT_GE(evaluate_exact(t.pruned, q, rates, h), 0);
    const auto full = back_substitute(t, rates, h);
    ASSERT_TRUE(full.has_value());
    for (const auto& q : t.stages.front().ineqs) EXPECT_GE(evaluate_exact(t.stages.front(), q, *full, h), 0);
    for (const auto& v : kSplitRates) EXPECT_GE(full->at(v), 0);
    ++lifted;
  }
  EXPECT_EQ(lifted, 200);
}

TEST(Projection, BackSubstitutionRejectsOutsidePoint) {
  const auto t = project_broadcast();
  const auto& b = t.pruned.basis;
  std::mt19937_64 rng(6);
  const JointPmf j = random_binary_joint(rng, b);
  const RationalVector h = to_rational(b.evaluate(j));
  const std::map<std::string, Rational> rates{{"R1", 0}, {"R2", 0}, {"Rb", 0}};
  bool inside = true;
  for (const auto& q : t.pruned.ineqs) inside = inside && evaluate_exact(t.pruned, q, rates, h) >= 0;
  ASSERT_FALSE(inside);
  EXPECT_FALSE(back_substitute(t, rates, h).has_value());
}

TEST(Pruning, NeverRemovesIndependentRow) {
  const IneqSystem g = normalized(golden_broadcast_region());
  EXPECT_TRUE(same_system(prune_redundant(g), g));
  // a row implied by two others plus atom nonnegativity is dropped
  IneqSystem extra = g;
  const auto& basis = g.basis;
  extra.ineqs.push_back(extra.make({{"R1", 1}, {"R2", 2}, {"Rb", 2}}, -(basis.mutual_information({"X"}, {"A"}) * 2)));
  EXPECT_TRUE(same_system(prune_redundant(normalized(extra)), g));
}
