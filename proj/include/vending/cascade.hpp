#pragma once

// Rate region of the cascade with a vending machine at the end node:
//   R1 >= I(X; X1, A, U | Y),  R2 >= I(X, Y; A) + I(X, Y; U | A, Z)
// over p(x, y) p(x1, a, u | x, y) p(z | y, a), with a per-letter decoder
// X2 = f(U, Z).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vending/models.hpp"
#include "vending/prob.hpp"
#include "vending/search.hpp"

namespace vending {

inline const std::string kAuxAxis = "U";

FiniteAlphabet aux_alphabet(int u_size);

// Cardinality bound |X||Y||A| + 3 on the auxiliary alphabet.
int max_u_size(const CascadeVendingModel& m);
int default_u_size(const CascadeVendingModel& m, const SearchConfig& cfg);

struct CascadeDecision {
  int u_size = 1;
  CondKernel kernel;  // (X, Y) -> (X1, A, U)

  static CascadeDecision from_values(const CascadeVendingModel& m, int u_size, Eigen::ArrayXd values);
  // Every cell puts all its mass on (x1, a, u) = (0, 0, 0).
  static CascadeDecision constant(const CascadeVendingModel& m, int u_size);
};

// f : U x Z -> X2, stored row-major over (u, z).
struct SymbolDecoder {
  int u_size = 0;
  int z_size = 0;
  std::vector<int> table;

  int operator()(int u, int z) const { return table[static_cast<std::size_t>(u) * z_size + z]; }
};

struct CascadeTerms {
  double i_x_x1au_given_y = 0.0;  // I(X; X1, A, U | Y)
  double i_xy_a = 0.0;            // I(X, Y; A)
  double i_xy_u_given_az = 0.0;   // I(X, Y; U | A, Z)
};

struct RatePoint2 {
  double r1 = 0.0;
  double r2 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double gamma = 0.0;
  CascadeTerms terms;
  CascadeDecision decision;
  SymbolDecoder decoder;
};

JointPmf assemble_joint(const CascadeVendingModel& m, const CascadeDecision& d);

// Pointwise Bayes decoder: for every (u, z) with positive mass, the x2 that
// minimizes sum_x p(x, u, z) d2(x, x2); ties go to the lowest index, empty
// cells decode to index 0.
SymbolDecoder bayes_decoder(const JointPmf& j, const DistortionTable& d2, const std::string& u_axis = kAuxAxis,
                            const std::string& z_axis = "Z");

// E[d2(X, f(U, Z))].
double decoder_distortion(const JointPmf& j, const DistortionTable& d2, const SymbolDecoder& f,
                          const std::string& u_axis = kAuxAxis, const std::string& z_axis = "Z");

RatePoint2 rate_corner(const CascadeVendingModel& m, const CascadeDecision& d);

struct CascadeMetrics {
  double r1 = 0.0;
  double r2 = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double gamma = 0.0;
};

// Fast corner evaluation straight from a flat kernel p(x1, a, u | x, y) laid
// out like CascadeDecision::kernel. Holds scratch buffers: use one instance
// per thread.
class CascadeEvaluator {
 public:
  CascadeEvaluator(const CascadeVendingModel& m, int u_size);

  CascadeMetrics operator()(std::span<const double> kernel) const;

  int u_size() const { return nu_; }
  SimplexBlock block() const { return {nx_ * ny_, n1_ * na_ * nu_}; }

 private:
  int nx_, ny_, nz_, na_, n1_, nu_;
  std::vector<double> pxy_;   // [x][y]
  std::vector<double> pz_;    // [a][y][z]
  std::vector<double> d1_;    // [x][x1]
  std::vector<double> d2_;    // [x][x2]
  int n2_;
  std::vector<double> cost_;  // [a]
  double h_xy_, h_y_;
  std::vector<std::vector<int>> maps_;
  std::vector<std::size_t> sizes_;
  mutable std::vector<double> full_;
  mutable std::vector<std::vector<double>> marg_;
};

struct Weights2 {
  double w1 = 1.0;
  double w2 = 1.0;

  auto operator<=>(const Weights2&) const = default;
};

struct CascadeSearchResult {
  std::optional<RatePoint2> point;  // empty: nothing feasible at this search resolution
  double objective = 0.0;
  int restart = -1;
  std::uint64_t seed = 0;
  int u_size = 0;
  std::uint64_t evaluations = 0;
};

// Best feasible w1 R1 + w2 R2 found by the multi-start search; an upper bound
// on the true minimum.
CascadeSearchResult min_weighted_rate(const CascadeVendingModel& m, const ConstraintBudget& budget, Weights2 w,
                                      const SearchConfig& cfg);

struct FrontierRow {
  Weights2 weights;
  CascadeSearchResult result;
  int source_weight = -1;  // index of the weight whose search produced the witness
  bool on_envelope = false;
};

struct Frontier {
  std::vector<FrontierRow> rows;     // weight-grid order
  std::vector<std::size_t> by_r1;    // feasible rows sorted by (R1, R2)
  std::vector<std::size_t> envelope; // rows on the lower convex envelope, by R1
  std::vector<std::size_t> failures; // rows with no feasible point
};

// Per-weight minima. Every witness found for any weight is re-scored under
// every other weight and the best one kept, so the reported points are
// mutually consistent (a monotone staircase in (R1, R2)).
Frontier trace_frontier(const CascadeVendingModel& m, const ConstraintBudget& budget,
                        std::span<const Weights2> weight_grid, const SearchConfig& cfg);

// Indices of the points on the lower-left convex envelope of
// conv(points) + R^2_+, ordered by the first coordinate.
std::vector<std::size_t> lower_convex_envelope(std::span<const std::array<double, 2>> points);

enum class Verdict { achievable, not_found_at_resolution };

const char* to_string(Verdict v);

struct Membership2 {
  Verdict verdict = Verdict::not_found_at_resolution;
  std::optional<RatePoint2> witness;
  double shortfall = 0.0;  // smallest sum of rate excesses found
};

// Searches for a feasible decision whose corner is dominated by (R1, R2).
// Never certifies that a point lies outside the region.
Membership2 membership(const CascadeVendingModel& m, double r1, double r2, const ConstraintBudget& budget,
                       const SearchConfig& cfg);

constexpr double kMembershipTol = 1e-9;

}  // namespace vending
