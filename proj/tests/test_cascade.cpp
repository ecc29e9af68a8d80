#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "vending/cascade.hpp"
#include "vending/oracle.hpp"

using namespace vending;

namespace {

Eigen::ArrayXd random_kernel(std::mt19937_64& rng, int cells, int outs, bool sparse = false) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution drop(0.4);
  Eigen::ArrayXd v(cells * outs);
  for (int c = 0; c < cells; ++c) {
    double s = 0;
    for (int o = 0; o < outs; ++o) {
      v[c * outs + o] = sparse && o > 0 && drop(rng) ? 0.0 : e(rng);
      s += v[c * outs + o];
    }
    v.segment(c * outs, outs) /= s;
  }
  return v;
}

// X uniform binary, Y independent, Z pure noise, one action.
CascadeVendingModel lossless_model() {
  CascadeVendingModel m;
  m.x = FiniteAlphabet("X", 2);
  m.y = FiniteAlphabet("Y", 2);
  m.z = FiniteAlphabet("Z", 2);
  m.a = FiniteAlphabet("A", 1);
  m.x1 = FiniteAlphabet("X1", 2);
  m.x2 = FiniteAlphabet("X2", 2);
  m.source = JointPmf({m.x, m.y}, Eigen::ArrayXd::Constant(4, 0.25));
  m.vm_channel = CondKernel({m.a, m.y}, {m.z}, Eigen::ArrayXd::Constant(4, 0.5));
  m.d1 = DistortionTable::hamming(m.x, m.x1);
  m.d2 = DistortionTable::hamming(m.x, m.x2);
  m.cost = CostTable::zero(m.a);
  return m;
}

// X1 = X, U = X, A = 0.
CascadeDecision copy_decision(const CascadeVendingModel& m) {
  const int outs = m.x1.size() * m.a.size() * 2;
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(4 * outs);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) v[(x * 2 + y) * outs + (x * m.a.size()) * 2 + x] = 1.0;
  return CascadeDecision::from_values(m, 2, v);
}

double h2(double p) { return p <= 0 || p >= 1 ? 0.0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

}  // namespace

TEST(Cascade, ConstantDecisionHasZeroRates) {
  const auto inst = random_binary_cascade(4);
  const RatePoint2 p = rate_corner(inst.model, CascadeDecision::constant(inst.model, 3));
  EXPECT_NEAR(p.r1, 0.0, 1e-15);
  EXPECT_NEAR(p.r2, 0.0, 1e-15);
  EXPECT_NEAR(p.gamma, 0.0, 1e-15);  // action 0 is free
}

TEST(Cascade, LosslessCopyCorner) {
  const auto m = lossless_model();
  const RatePoint2 p = rate_corner(m, copy_decision(m));
  EXPECT_NEAR(p.r1, 1.0, 1e-12);
  EXPECT_NEAR(p.r2, 1.0, 1e-12);
  EXPECT_NEAR(p.d1, 0.0, 1e-15);
  EXPECT_NEAR(p.d2, 0.0, 1e-15);
}

TEST(Cascade, NoisyDescriptionHasClosedFormRate) {
  // X1 = X through BSC(q) independent of Y, U constant: R1 = 1 - h2(q), R2 = 0.
  const auto m = lossless_model();
  const double q = 0.2;
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(4 * 2);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      v[(x * 2 + y) * 2 + x] = 1 - q;
      v[(x * 2 + y) * 2 + (1 - x)] = q;
    }
  const RatePoint2 p = rate_corner(m, CascadeDecision::from_values(m, 1, v));
  EXPECT_NEAR(p.r1, 1 - h2(q), 1e-12);
  EXPECT_NEAR(p.r2, 0.0, 1e-15);
  EXPECT_NEAR(p.d1, q, 1e-15);
  EXPECT_NEAR(p.d2, 0.5, 1e-15);
}

TEST(Cascade, AssemblyIsMarkovThroughVendingMachine) {
  std::mt19937_64 rng(21);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto m = random_binary_cascade(s).model;
    const int outs = 2 * 2 * 3;
    const auto d = CascadeDecision::from_values(m, 3, random_kernel(rng, 4, outs));
    const JointPmf j = assemble_joint(m, d);
    EXPECT_LE(mutual_information(j, {"X", "X1", "U"}, {"Z"}, {"A", "Y"}), 1e-10);
  }
}

TEST(Cascade, EvaluatorMatchesGenericRoute) {
  std::mt19937_64 rng(7);
  for (std::uint64_t s = 1; s <= 6; ++s) {
    const auto m = random_binary_cascade(s).model;
    for (int u = 1; u <= 3; ++u) {
      const CascadeEvaluator ev(m, u);
      for (int t = 0; t < 20; ++t) {
        const Eigen::ArrayXd k = random_kernel(rng, 4, 2 * 2 * u, t % 2 == 1);
        const auto fast = ev(std::span<const double>(k.data(), k.size()));
        const auto slow = rate_corner(m, CascadeDecision::from_values(m, u, k));
        EXPECT_NEAR(fast.r1, slow.r1, 1e-9);
        EXPECT_NEAR(fast.r2, slow.r2, 1e-9);
        EXPECT_NEAR(fast.d1, slow.d1, 1e-12);
        EXPECT_NEAR(fast.d2, slow.d2, 1e-12);
        EXPECT_NEAR(fast.gamma, slow.gamma, 1e-12);
      }
    }
  }
}

TEST(Cascade, BayesDecoderBeatsEveryTable) {
  std::mt19937_64 rng(13);
  const auto m = random_binary_cascade(2).model;
  for (int t = 0; t < 30; ++t) {
    const auto d = CascadeDecision::from_values(m, 2, random_kernel(rng, 4, 8, true));
    const JointPmf j = assemble_joint(m, d);
    const SymbolDecoder f = bayes_decoder(j, m.d2);
    const double best = decoder_distortion(j, m.d2, f);
    // all 2^(2*2) tables
    double brute = HUGE_VAL;
    for (int code = 0; code < 16; ++code) {
      SymbolDecoder g{2, 2, {code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1}};
      brute = std::min(brute, decoder_distortion(j, m.d2, g));
    }
    EXPECT_NEAR(best, brute, 1e-12);
  }
}

TEST(Cascade, LowerConvexEnvelope) {
  const std::vector<std::array<double, 2>> pts{{0, 3}, {1, 1}, {2, 0.9}, {3, 0}, {1.5, 2}, {1, 1}};
  const auto env = lower_convex_envelope(pts);
  ASSERT_EQ(env.size(), 3u);
  EXPECT_EQ(env[0], 0u);
  EXPECT_EQ(env[1], 1u);
  EXPECT_EQ(env[2], 3u);
}

TEST(Cascade, LosslessFrontierPoint) {
  const auto m = lossless_model();
  SearchConfig cfg;
  cfg.restarts = 8;
  cfg.u_size = 2;
  const auto r = min_weighted_rate(m, {0, 0, 0}, {1, 1}, cfg);
  ASSERT_TRUE(r.point);
  EXPECT_NEAR(r.point->r1, 1.0, 1e-6);
  EXPECT_NEAR(r.point->r2, 1.0, 1e-6);
}

TEST(Cascade, LooseBudgetGivesZeroRates) {
  const auto inst = random_binary_cascade(3);
  SearchConfig cfg;
  cfg.restarts = 2;
  cfg.u_size = 2;
  const auto r = min_weighted_rate(inst.model, {1, 1, 1}, {1, 1}, cfg);
  ASSERT_TRUE(r.point);
  EXPECT_NEAR(r.objective, 0.0, 1e-9);
}

TEST(Cascade, FrontierIsMonotoneStaircase) {
  const auto inst = random_binary_cascade(5);
  SearchConfig cfg;
  cfg.restarts = 2;
  cfg.u_size = 2;
  cfg.lattice_resolution = 4;
  std::vector<Weights2> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back({i / 10.0, 1 - i / 10.0});
  const Frontier f = trace_frontier(inst.model, inst.budget, grid, cfg);
  ASSERT_TRUE(f.failures.empty());
  for (std::size_t k = 1; k < f.by_r1.size(); ++k) {
    const auto& a = *f.rows[f.by_r1[k - 1]].result.point;
    const auto& b = *f.rows[f.by_r1[k]].result.point;
    EXPECT_LE(b.r2, a.r2 + 1e-12);
  }
  // each row is the best of all witnesses for its own weight
  for (const auto& row : f.rows)
    for (const auto& other : f.rows)
      EXPECT_LE(row.result.objective,
                row.weights.w1 * other.result.point->r1 + row.weights.w2 * other.result.point->r2 + 1e-12);
}

TEST(Cascade, MembershipFindsWitnessOrReportsNotFound) {
  const auto m = lossless_model();
  SearchConfig cfg;
  cfg.restarts = 4;
  cfg.u_size = 2;
  const auto yes = membership(m, 1.0, 1.0, {0, 0, 0}, cfg);
  EXPECT_EQ(yes.verdict, Verdict::achievable);
  ASSERT_TRUE(yes.witness);
  EXPECT_LE(yes.witness->r1, 1.0 + kMembershipTol);
  const auto no = membership(m, 0.5, 0.5, {0, 0, 0}, cfg);
  EXPECT_EQ(no.verdict, Verdict::not_found_at_resolution);
  EXPECT_FALSE(no.witness);
}

TEST(Cascade, RejectsInvalidBudget) {
  const auto inst = random_binary_cascade(1);
  EXPECT_THROW(min_weighted_rate(inst.model, {-1, 0, 0}, {1, 1}, SearchConfig{}), std::invalid_argument);
}
