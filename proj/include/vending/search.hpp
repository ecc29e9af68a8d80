#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace vending {

// Knobs shared by both region optimizers. Serialized verbatim in run configs.
struct SearchConfig {
  int restarts = 32;
  int max_iterations = 2000;  // sweeps per penalty round
  std::uint64_t seed = 1;
  int u_size = 0;       // 0 picks min(|X||Y||A| + 3, u_size_cap)
  int u_size_cap = 6;
  double penalty_start = 10.0;
  double penalty_growth = 10.0;  // applied per penalty round
  int penalty_rounds = 6;
  int stall_window = 50;
  double stall_tol = 1e-9;
  double initial_step = 0.25;
  double min_step = 1.0 / (1 << 24);
  int lattice_resolution = 0;  // > 0 restricts the search to the 1/K lattice
  int workers = 0;             // 0 uses VENDING_WORKERS or the hardware count
};

// A product of `cells` probability simplices with `outputs` vertices each,
// stored row-major (one contiguous slice per cell).
struct SimplexBlock {
  int cells = 0;
  int outputs = 0;
};

constexpr int kConstraintCount = 3;

// Objective and constraint excesses (value - budget) at one point.
struct PointEval {
  double objective = 0.0;
  std::array<double, kConstraintCount> excess{};

  bool feasible(double tol) const {
    for (double e : excess)
      if (e > tol) return false;
    return true;
  }
};

using PointEvaluator = std::function<PointEval(std::span<const double>)>;

struct SearchOptions {
  double feasibility_tol = 1e-12;
  std::optional<double> stop_at;  // stop every restart once a feasible point reaches this
};

struct Candidate {
  std::vector<double> x;
  double objective = 0.0;
  int restart = -1;
};

struct SearchOutcome {
  std::optional<Candidate> best;
  std::vector<std::optional<Candidate>> per_restart;
  std::uint64_t evaluations = 0;
};

std::size_t total_size(std::span<const SimplexBlock> blocks);

// Number of worker threads actually used for a config.
int resolve_workers(const SearchConfig& cfg);

// Multi-start projected pattern search over a simplex product. Moves transfer
// probability mass between two outputs of one cell, so every iterate stays on
// the simplex product. Constraints enter through a quadratic penalty whose
// weight grows each round; the best strictly feasible point seen is returned.
// Restarts may run concurrently (the evaluator is copied per worker); the
// merge is a min over (objective, restart index), independent of scheduling.
SearchOutcome multistart_minimize(std::span<const SimplexBlock> blocks, const PointEvaluator& f,
                                  const SearchConfig& cfg, const SearchOptions& opt = {});

// Restart r's starting point. Exposed for tests.
std::vector<double> restart_start(std::span<const SimplexBlock> blocks, const SearchConfig& cfg, int restart);

// 64-bit stream seed for restart r of a run seeded with `seed`.
std::uint64_t restart_seed(std::uint64_t seed, int restart);

}  // namespace vending
