#include "vending/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace vending {

namespace {

// Continuum iterates live on this dyadic grid so that mass transfers with
// power-of-two steps are exact and every cell keeps summing to exactly one.
constexpr double kGrid = 1099511627776.0;  // 2^40

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct CellRef {
  std::size_t offset;
  int outputs;
};

std::vector<CellRef> cells_of(std::span<const SimplexBlock> blocks) {
  std::vector<CellRef> cells;
  std::size_t off = 0;
  for (const auto& b : blocks) {
    if (b.cells < 1 || b.outputs < 1) throw std::invalid_argument("simplex block must be nonempty");
    for (int c = 0; c < b.cells; ++c) {
      cells.push_back({off, b.outputs});
      off += static_cast<std::size_t>(b.outputs);
    }
  }
  return cells;
}

void quantize_cell(std::span<double> cell) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cell.size(); ++i) {
    cell[i] = std::floor(cell[i] * kGrid) / kGrid;
    acc += cell[i];
  }
  cell.back() = 1.0 - acc;
  if (cell.back() < 0.0) {  // floor() never overshoots, so this is only round-off
    cell.back() = 0.0;
  }
}

std::uint64_t composition_count(int k, int m) {
  std::uint64_t c = 1;
  for (int i = 1; i < m; ++i) {
    c = c * static_cast<std::uint64_t>(k + i) / static_cast<std::uint64_t>(i);
    if (c > (1u << 20)) return c;
  }
  return c;
}

// Next composition of the same total in lexicographic order; false after the last.
bool next_composition(std::vector<int>& comp) {
  const int m = static_cast<int>(comp.size());
  // Rightmost position p < m - 1 whose suffix after it still holds mass.
  int tail = comp[m - 1];
  int p = m - 2;
  while (p >= 0 && tail == 0) tail += comp[p--];
  if (p < 0) return false;
  ++comp[p];
  --tail;
  for (int i = p + 1; i < m - 1; ++i) comp[i] = 0;
  comp[m - 1] = tail;
  return true;
}

struct RestartResult {
  std::optional<Candidate> best;
  std::uint64_t evaluations = 0;
};

class PatternSearch {
 public:
  PatternSearch(std::span<const SimplexBlock> blocks, PointEvaluator f, const SearchConfig& cfg,
                const SearchOptions& opt, const std::atomic<bool>& stop)
      : cells_(cells_of(blocks)), f_(std::move(f)), cfg_(cfg), opt_(opt), stop_(stop) {}

  RestartResult run(std::vector<double> start, int restart) {
    restart_ = restart;
    x_ = std::move(start);
    lattice_ = cfg_.lattice_resolution > 0;
    if (lattice_) {
      units_.resize(x_.size());
      for (std::size_t i = 0; i < x_.size(); ++i)
        units_[i] = static_cast<int>(std::lround(x_[i] * cfg_.lattice_resolution));
    }
    result_ = {};
    for (int round = 0; round < cfg_.penalty_rounds && !done(); ++round) {
      mu_ = cfg_.penalty_start * std::pow(cfg_.penalty_growth, round);
      cur_ = evaluate();
      cur_eval_ = last_;
      double step = lattice_ ? 1.0 : cfg_.initial_step;
      std::deque<double> history;
      for (int it = 0; it < cfg_.max_iterations && !done(); ++it) {
        bool improved = sweep(step);
        if (!improved) {
          if (!lattice_ && step * 0.5 >= cfg_.min_step) {
            step *= 0.5;
            continue;
          }
          if (lattice_ && (cell_sweep() || paired_sweep())) continue;
          break;
        }
        history.push_back(cur_);
        if (static_cast<int>(history.size()) > cfg_.stall_window) {
          if (history.front() - cur_ < cfg_.stall_tol) break;
          history.pop_front();
        }
      }
      if (cur_eval_.feasible(opt_.feasibility_tol)) break;
    }
    return std::move(result_);
  }

 private:
  bool done() const {
    return stop_.load(std::memory_order_relaxed) ||
           (opt_.stop_at && result_.best && result_.best->objective <= *opt_.stop_at);
  }

  double penalized(const PointEval& e) const {
    double p = e.objective;
    for (double ex : e.excess)
      if (ex > 0.0) p += mu_ * ex * ex;
    return p;
  }

  double evaluate() {
    last_ = f_(x_);
    ++result_.evaluations;
    if (last_.feasible(opt_.feasibility_tol) &&
        (!result_.best || last_.objective < result_.best->objective)) {
      result_.best = Candidate{x_, last_.objective, restart_};
    }
    return penalized(last_);
  }

  bool accept(double p) const { return p < cur_ - 1e-14 * std::max(1.0, std::abs(cur_)); }

  // Transfer mass from output i to output j of one cell; returns false (and
  // restores the point) unless the penalized objective improves.
  bool try_transfer(const CellRef& c, int i, int j, double amount, int units) {
    const std::size_t a = c.offset + i, b = c.offset + j;
    const double xa = x_[a], xb = x_[b];
    if (lattice_) {
      units_[a] -= units;
      units_[b] += units;
      x_[a] = static_cast<double>(units_[a]) / cfg_.lattice_resolution;
      x_[b] = static_cast<double>(units_[b]) / cfg_.lattice_resolution;
    } else {
      x_[a] = xa - amount;
      x_[b] = xb + amount;
    }
    double p = evaluate();
    if (accept(p)) {
      cur_ = p;
      cur_eval_ = last_;
      return true;
    }
    x_[a] = xa;
    x_[b] = xb;
    if (lattice_) {
      units_[a] += units;
      units_[b] -= units;
    }
    return false;
  }

  bool sweep(double step) {
    bool improved = false;
    for (const auto& c : cells_) {
      for (int i = 0; i < c.outputs; ++i) {
        for (int j = 0; j < c.outputs; ++j) {
          if (i == j || done()) continue;
          if (lattice_) {
            for (int t = 1; t <= units_[c.offset + i]; ++t) {
              if (try_transfer(c, i, j, 0.0, t)) {
                improved = true;
                break;
              }
            }
          } else {
            const double have = x_[c.offset + i];
            if (have <= 0.0) continue;
            if (try_transfer(c, i, j, std::min(step, have), 0)) improved = true;
          }
        }
      }
    }
    return improved;
  }

  // Lattice escape: the best lattice composition of each cell in turn, the
  // rest held fixed. Skipped for cells with too many compositions.
  bool cell_sweep() {
    const int k = cfg_.lattice_resolution;
    bool improved = false;
    for (const auto& c : cells_) {
      if (done()) break;
      if (composition_count(k, c.outputs) > 512) continue;
      const std::vector<int> saved(units_.begin() + c.offset, units_.begin() + c.offset + c.outputs);
      std::vector<int> comp(c.outputs, 0), best_comp = saved;
      comp.back() = k;
      double best = cur_;
      PointEval best_eval = cur_eval_;
      while (true) {
        set_cell(c, comp);
        const double p = evaluate();
        if (p < best) {
          best = p;
          best_comp = comp;
          best_eval = last_;
        }
        if (!next_composition(comp)) break;
      }
      set_cell(c, best_comp);
      if (best_comp != saved && accept(best)) {
        cur_ = best;
        cur_eval_ = best_eval;
        improved = true;
      } else {
        set_cell(c, saved);
      }
    }
    return improved;
  }

  void set_cell(const CellRef& c, const std::vector<int>& comp) {
    for (int o = 0; o < c.outputs; ++o) {
      units_[c.offset + o] = comp[o];
      x_[c.offset + o] = static_cast<double>(comp[o]) / cfg_.lattice_resolution;
    }
  }

  // Lattice escape: one-unit transfers in two different cells at once.
  bool paired_sweep() {
    struct Move {
      std::size_t cell;
      int i, j;
    };
    std::vector<Move> moves;
    for (std::size_t c = 0; c < cells_.size(); ++c)
      for (int i = 0; i < cells_[c].outputs; ++i)
        for (int j = 0; j < cells_[c].outputs; ++j)
          if (i != j) moves.push_back({c, i, j});
    if (moves.size() > 4096) return false;
    for (std::size_t p = 0; p < moves.size(); ++p) {
      const auto& m1 = moves[p];
      if (units_[cells_[m1.cell].offset + m1.i] == 0) continue;
      for (std::size_t q = p + 1; q < moves.size(); ++q) {
        const auto& m2 = moves[q];
        if (m2.cell == m1.cell || done()) continue;
        if (units_[cells_[m2.cell].offset + m2.i] == 0) continue;
        shift(m1, 1);
        shift(m2, 1);
        double pen = evaluate();
        if (accept(pen)) {
          cur_ = pen;
          cur_eval_ = last_;
          return true;
        }
        shift(m2, -1);
        shift(m1, -1);
      }
    }
    return false;
  }

  template <typename M>
  void shift(const M& m, int units) {
    const auto& c = cells_[m.cell];
    units_[c.offset + m.i] -= units;
    units_[c.offset + m.j] += units;
    x_[c.offset + m.i] = static_cast<double>(units_[c.offset + m.i]) / cfg_.lattice_resolution;
    x_[c.offset + m.j] = static_cast<double>(units_[c.offset + m.j]) / cfg_.lattice_resolution;
  }

  std::vector<CellRef> cells_;
  PointEvaluator f_;
  SearchConfig cfg_;
  SearchOptions opt_;
  const std::atomic<bool>& stop_;

  bool lattice_ = false;
  int restart_ = 0;
  double mu_ = 0.0;
  double cur_ = 0.0;
  PointEval last_;
  PointEval cur_eval_;
  std::vector<double> x_;
  std::vector<int> units_;
  RestartResult result_;
};

}  // namespace

std::size_t total_size(std::span<const SimplexBlock> blocks) {
  std::size_t n = 0;
  for (const auto& b : blocks) n += static_cast<std::size_t>(b.cells) * b.outputs;
  return n;
}

int resolve_workers(const SearchConfig& cfg) {
  if (const char* env = std::getenv("VENDING_WORKERS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  if (cfg.workers > 0) return cfg.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(restart) + 1));
}

std::vector<double> restart_start(std::span<const SimplexBlock> blocks, const SearchConfig& cfg, int restart) {
  const auto cells = cells_of(blocks);
  std::vector<double> x(total_size(blocks), 0.0);
  const int k = cfg.lattice_resolution;
  std::mt19937_64 rng(restart_seed(cfg.seed, restart));
  for (const auto& c : cells) {
    std::span<double> cell(x.data() + c.offset, static_cast<std::size_t>(c.outputs));
    if (restart == 0) {
      cell[0] = 1.0;  // constant decision
    } else if (restart == 1) {
      if (k > 0) {
        for (int u = 0; u < k; ++u) cell[u % c.outputs] += 1.0 / k;
      } else {
        for (auto& v : cell) v = 1.0 / c.outputs;
        quantize_cell(cell);
      }
    } else if (k > 0) {
      // Uniform composition of k units into `outputs` parts (stars and bars).
      std::vector<int> slots(static_cast<std::size_t>(k + c.outputs - 1));
      std::iota(slots.begin(), slots.end(), 0);
      std::shuffle(slots.begin(), slots.end(), rng);
      std::vector<int> bars(slots.begin(), slots.begin() + (c.outputs - 1));
      std::sort(bars.begin(), bars.end());
      int prev = -1;
      for (int o = 0; o < c.outputs; ++o) {
        int next = (o + 1 < c.outputs) ? bars[o] : k + c.outputs - 1;
        cell[o] = static_cast<double>(next - prev - 1) / k;
        prev = next;
      }
    } else {
      std::exponential_distribution<double> expo(1.0);
      double total = 0.0;
      for (auto& v : cell) total += (v = expo(rng));
      for (auto& v : cell) v /= total;
      quantize_cell(cell);
    }
  }
  return x;
}

SearchOutcome multistart_minimize(std::span<const SimplexBlock> blocks, const PointEvaluator& f,
                                  const SearchConfig& cfg, const SearchOptions& opt) {
  if (cfg.restarts < 1) throw std::invalid_argument("search needs at least one restart");
  SearchOutcome out;
  out.per_restart.resize(cfg.restarts);
  std::vector<std::uint64_t> evals(cfg.restarts, 0);
  std::atomic<int> next{0};
  std::atomic<bool> stop{false};

  auto worker = [&]() {
    PatternSearch search(blocks, f, cfg, opt, stop);
    for (int r = next.fetch_add(1); r < cfg.restarts; r = next.fetch_add(1)) {
      if (stop.load()) break;
      auto res = search.run(restart_start(blocks, cfg, r), r);
      evals[r] = res.evaluations;
      if (opt.stop_at && res.best && res.best->objective <= *opt.stop_at) stop.store(true);
      out.per_restart[r] = std::move(res.best);
    }
  };

  const int workers = std::min(resolve_workers(cfg), cfg.restarts);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (int r = 0; r < cfg.restarts; ++r) {
    out.evaluations += evals[r];
    const auto& c = out.per_restart[r];
    if (c && (!out.best || c->objective < out.best->objective)) out.best = c;
  }
  return out;
}

}  // namespace vending
