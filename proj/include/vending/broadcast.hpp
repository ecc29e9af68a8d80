#pragma once

// Rate region of the cascade-broadcast model under common reconstruction:
//   Rb           >= I(X;A)
//   R1 + Rb      >= I(X;A) + I(X; X1, X2 | A, Y)
//   R2 + Rb      >= I(X;A) + I(X; X2 | A)
//   R1 + R2 + Rb >= I(X;A) + I(X; X2 | A) + I(X; X1 | A, Y, X2)
// over p(x) p(a | x) p(y | x, a) p(x1, x2 | x).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vending/cascade.hpp"
#include "vending/models.hpp"
#include "vending/prob.hpp"
#include "vending/search.hpp"

namespace vending {

struct BroadcastDecision {
  CondKernel action;  // X -> A
  CondKernel recon;   // X -> (X1, X2)

  static BroadcastDecision from_values(const BroadcastCRModel& m, Eigen::ArrayXd action, Eigen::ArrayXd recon);
  static BroadcastDecision constant(const BroadcastCRModel& m);
  // Flat layout used by the optimizers: [p(a|x) | p(x1,x2|x)].
  static BroadcastDecision from_params(const BroadcastCRModel& m, std::span<const double> params);
};

struct BroadcastTerms {
  double i_x_a = 0.0;               // I(X; A)
  double i_x_x1x2_given_ay = 0.0;   // I(X; X1, X2 | A, Y)
  double i_x_x2_given_a = 0.0;      // I(X; X2 | A)
  double i_x_x2_given_ay = 0.0;     // I(X; X2 | A, Y)
  double i_x_x1_given_ayx2 = 0.0;   // I(X; X1 | A, Y, X2)
};

// Right-hand sides of the four region inequalities.
struct RateBounds {
  double lb = 0.0;    // Rb
  double l1b = 0.0;   // R1 + Rb
  double l2b = 0.0;   // R2 + Rb
  double l12b = 0.0;  // R1 + R2 + Rb
};

struct RateTriple {
  double r1 = 0.0;
  double r2 = 0.0;
  double rb = 0.0;
};

struct Weights3 {
  double w1 = 1.0;
  double w2 = 1.0;
  double wb = 1.0;

  auto operator<=>(const Weights3&) const = default;
};

double weighted(const Weights3& w, const RateTriple& r);

struct RatePoint3 {
  RateBounds bounds;
  RateTriple rates;  // a weight-optimal triple; set by the optimizers
  double d1 = 0.0;
  double d2 = 0.0;
  double gamma = 0.0;
  BroadcastTerms terms;
  BroadcastDecision decision;
};

JointPmf assemble_joint(const BroadcastCRModel& m, const BroadcastDecision& d);

RatePoint3 corner(const BroadcastCRModel& m, const BroadcastDecision& d);

// Smallest slack of the four inequalities at `r` (negative when violated).
double min_slack(const RateBounds& b, const RateTriple& r);

// Exact minimizer of w . (R1, R2, Rb) over the region polyhedron intersected
// with R >= 0, by enumerating its vertices.
RateTriple optimal_rate_triple(const RateBounds& b, const Weights3& w);

struct BroadcastMetrics {
  RateBounds bounds;
  double d1 = 0.0;
  double d2 = 0.0;
  double gamma = 0.0;
};

// Fast evaluation from flat kernels [p(a|x) | p(x1,x2|x)]. One per thread.
class BroadcastEvaluator {
 public:
  explicit BroadcastEvaluator(const BroadcastCRModel& m);

  BroadcastMetrics operator()(std::span<const double> params) const;

  std::array<SimplexBlock, 2> blocks() const { return {SimplexBlock{nx_, na_}, SimplexBlock{nx_, n1_ * n2_}}; }

 private:
  int nx_, na_, ny_, n1_, n2_;
  std::vector<double> px_;
  std::vector<double> py_;  // [x][a][y]
  std::vector<double> d1_, d2_, cost_;
  std::vector<std::vector<int>> maps_;
  mutable std::vector<double> full_;
  mutable std::vector<std::vector<double>> marg_;
};

struct BroadcastSearchResult {
  std::optional<RatePoint3> point;
  double objective = 0.0;
  int restart = -1;
  std::uint64_t seed = 0;
  std::uint64_t evaluations = 0;
};

BroadcastSearchResult min_weighted_rate3(const BroadcastCRModel& m, const ConstraintBudget& budget, Weights3 w,
                                         const SearchConfig& cfg);

struct SurfaceRow {
  Weights3 weights;
  BroadcastSearchResult result;
  int source_weight = -1;
  bool on_envelope = false;
};

struct Surface {
  std::vector<SurfaceRow> rows;
  std::vector<std::size_t> envelope;  // Pareto-minimal rate triples among the rows
  std::vector<std::size_t> failures;
};

Surface trace_surface3(const BroadcastCRModel& m, const ConstraintBudget& budget,
                       std::span<const Weights3> weight_grid, const SearchConfig& cfg);

struct Membership3 {
  Verdict verdict = Verdict::not_found_at_resolution;
  std::optional<RatePoint3> witness;
  double shortfall = 0.0;
};

Membership3 membership3(const BroadcastCRModel& m, const RateTriple& rates, const ConstraintBudget& budget,
                        const SearchConfig& cfg);

}  // namespace vending
