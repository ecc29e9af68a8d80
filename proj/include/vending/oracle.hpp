#pragma once

// Exhaustive lattice search over decision kernels: ground truth for the
// optimizers on small instances, plus the reduction and invariant batteries.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vending/broadcast.hpp"
#include "vending/cascade.hpp"
#include "vending/models.hpp"
#include "vending/search.hpp"

namespace vending {

enum class OracleMethod {
  automatic,   // full enumeration when within the guard, otherwise decomposed
  full,        // every lattice kernel
  decomposed,  // cascade only: outer p(a,u|x,y) lattice, exact inner X1 split
};

struct GridSpec {
  int resolution = 4;               // simplex step 1/K
  int u_size = 2;                   // cascade auxiliary alphabet
  std::uint64_t guard = 100000000;  // maximum evaluations
  OracleMethod method = OracleMethod::automatic;
};

class GuardExceeded : public std::runtime_error {
 public:
  explicit GuardExceeded(std::uint64_t count, std::uint64_t guard);
  std::uint64_t count() const { return count_; }

 private:
  std::uint64_t count_;
};

// C(K + m - 1, m - 1); saturates at UINT64_MAX.
std::uint64_t simplex_lattice_count(int resolution, int outputs);
std::uint64_t lattice_count(std::span<const SimplexBlock> blocks, int resolution);

// Streams every lattice point of a product of simplices, last cell fastest,
// each cell's compositions in lexicographic order of their integer parts.
class LatticeEnumerator {
 public:
  LatticeEnumerator(std::vector<SimplexBlock> blocks, int resolution, std::uint64_t guard);

  // Advances to the next point; the first call yields the first point.
  bool next();

  std::span<const double> point() const { return point_; }
  std::span<const int> units() const { return units_; }
  std::uint64_t count() const { return count_; }

 private:
  struct Cell {
    int table;   // index into tables_
    std::size_t offset;
  };

  int resolution_;
  std::uint64_t count_;
  std::vector<std::vector<std::vector<int>>> tables_;  // compositions per distinct output count
  std::vector<Cell> cells_;
  std::vector<std::size_t> digit_;
  std::vector<double> point_;
  std::vector<int> units_;
  bool started_ = false;
};

// All compositions of k into m nonnegative parts, lexicographic.
std::vector<std::vector<int>> compositions(int k, int m);

struct OracleResult2 {
  std::optional<RatePoint2> point;  // empty: nothing feasible on the lattice
  double objective = 0.0;
  std::uint64_t evaluated = 0;
  std::uint64_t lattice_points = 0;
  OracleMethod method = OracleMethod::full;
};

struct OracleResult3 {
  std::optional<RatePoint3> point;
  double objective = 0.0;
  std::uint64_t evaluated = 0;
  std::uint64_t lattice_points = 0;
};

// Exact minimum of the scalarized objective over lattice kernels, subject to
// the distortion and cost budgets (tolerance 1e-12, as in the optimizers).
OracleResult2 brute_force_min(const CascadeVendingModel& m, const ConstraintBudget& budget, Weights2 w,
                              const GridSpec& grid);
OracleResult3 brute_force_min(const BroadcastCRModel& m, const ConstraintBudget& budget, Weights3 w,
                              const GridSpec& grid);

// The model with the action alphabet cut down to the single action `a`.
CascadeVendingModel restrict_actions(const CascadeVendingModel& m, int a);
BroadcastCRModel restrict_actions(const BroadcastCRModel& m, int a);

struct CascadeInstance {
  CascadeVendingModel model;
  ConstraintBudget budget;
};

struct BroadcastInstance {
  BroadcastCRModel model;
  ConstraintBudget budget;
};

// All-binary instances with Hamming distortions, Lambda(0) = 0 and budgets
// that leave the lattice feasible. `action_free` makes the vending channel
// ignore A and the cost vanish.
CascadeInstance random_binary_cascade(std::uint64_t seed, bool action_free = false);
BroadcastInstance random_binary_broadcast(std::uint64_t seed, bool action_free = false);

struct SuiteCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::vector<SuiteCheck> checks;

  bool ok() const;
  std::string to_string() const;
};

enum class ModelFamily { cascade, broadcast };

struct SuiteOptions {
  std::uint64_t seed = 1;
  int instances = 3;
  GridSpec grid;
  double reduction_tol = 1e-3;
  int ladder_steps = 5;
};

// Action-free reductions, loose-budget zero rates and budget ladders.
SuiteReport degeneracy_suite(ModelFamily family, const SuiteOptions& opt = {});

// Markov structure of assembled joints, bound ordering and decoder optimality
// on random decisions.
SuiteReport invariant_suite(ModelFamily family, std::uint64_t seed, int decisions = 1000);

// Scalarized lattice minima along a budget ladder from 0 to the table maximum
// in one coordinate (0 = D1, 1 = D2, 2 = Gamma), the others held fixed.
std::vector<double> budget_ladder(const CascadeVendingModel& m, const ConstraintBudget& base, Weights2 w,
                                  int coordinate, int steps, const GridSpec& grid);
std::vector<double> budget_ladder(const BroadcastCRModel& m, const ConstraintBudget& base, Weights3 w,
                                  int coordinate, int steps, const GridSpec& grid);

}  // namespace vending
