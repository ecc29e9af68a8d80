#include "vending/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace vending {

namespace {

constexpr double kFeasTol = 1e-12;
constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t mul_sat(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

double xlog2x_ratio(double p, double num, double den) { return p > 0.0 ? p * std::log2(p * num / den) : 0.0; }

// p(out | first = i, other = j) for a kernel with two given-axes in either order.
double kernel_at(const CondKernel& k, const std::string& first, int i, int j, int out) {
  const auto& from = k.from_axes();
  const bool natural = from[0].name() == first;
  const int cell = natural ? i * from[1].size() + j : j * from[1].size() + i;
  return k.slice(cell)[out];
}

// ---------------------------------------------------------------------------
// Decomposed cascade search. The kernel p(x1, a, u | x, y) on the 1/K lattice
// factors uniquely into integer counts n(a, u | x, y) and, for each (x, y, a, u),
// a split of that count over X1. Everything except R1 and D1 depends only on
// the counts; given the counts, R1 - I(X; A, U | Y) = sum_g p(g) I(X; X1 | g)
// and D1 are sums over groups g = (y, a, u) of terms that depend only on that
// group's splits. So the inner problem is a multiple-choice knapsack, solved
// exactly by merging per-group Pareto frontiers of (distortion, information).

struct InnerOption {
  double dist = 0.0;
  double info = 0.0;
  int choice = 0;  // index into the group's option product
};

struct FrontierPoint {
  double dist = 0.0;
  double info = 0.0;
  int parent = -1;  // index into the previous level
  int option = -1;  // index into the group's Pareto options
};

std::vector<InnerOption> pareto(std::vector<InnerOption> opts) {
  std::sort(opts.begin(), opts.end(), [](const InnerOption& a, const InnerOption& b) {
    return a.dist != b.dist ? a.dist < b.dist : (a.info != b.info ? a.info < b.info : a.choice < b.choice);
  });
  std::vector<InnerOption> out;
  for (const auto& o : opts)
    if (out.empty() || o.info < out.back().info) out.push_back(o);
  return out;
}

class DecomposedCascade {
 public:
  DecomposedCascade(const CascadeVendingModel& m, const ConstraintBudget& b, Weights2 w, const GridSpec& g)
      : m_(m), b_(b), w_(w), k_(g.resolution), nu_(g.u_size) {
    nx_ = m.x.size();
    ny_ = m.y.size();
    na_ = m.a.size();
    n1_ = m.x1.size();
    for (int n = 0; n <= k_; ++n) splits_.push_back(compositions(n, n1_));
    pxy_.assign(m.source.values().begin(), m.source.values().end());
  }

  OracleResult2 run(std::uint64_t guard) {
    CascadeVendingModel outer = m_;
    outer.x1 = FiniteAlphabet(m_.x1.name(), 1);
    outer.d1 = DistortionTable{m_.x, outer.x1, Eigen::MatrixXd::Zero(nx_, 1)};
    CascadeEvaluator eval(outer, nu_);
    const SimplexBlock block = eval.block();
    LatticeEnumerator lat({block}, k_, guard);

    OracleResult2 res;
    res.method = OracleMethod::decomposed;
    const std::vector<SimplexBlock> full_block{{nx_ * ny_, n1_ * na_ * nu_}};
    res.lattice_points = lattice_count(full_block, k_);

    bool have = false;
    double best = 0.0;
    std::vector<int> best_units, best_choice;
    while (lat.next()) {
      ++res.evaluated;
      const auto c = eval(lat.point());
      if (c.d2 - b_.d2 > kFeasTol || c.gamma - b_.gamma > kFeasTol) continue;
      const double lb = w_.w1 * c.r1 + w_.w2 * c.r2;
      if (have && lb >= best) continue;
      std::vector<int> choice;
      const auto inner = solve_inner(lat.units(), choice);
      if (!inner) continue;
      const double obj = lb + w_.w1 * *inner;
      if (!have || obj < best) {
        have = true;
        best = obj;
        best_units.assign(lat.units().begin(), lat.units().end());
        best_choice = choice;
      }
    }
    if (have) {
      res.point = rate_corner(m_, CascadeDecision::from_values(m_, nu_, witness(best_units, best_choice)));
      res.objective = w_.w1 * res.point->r1 + w_.w2 * res.point->r2;
    }
    return res;
  }

 private:
  int group_count() const { return ny_ * na_ * nu_; }

  // Counts n_x of group (y, a, u) from the outer units.
  std::vector<int> group_counts(std::span<const int> units, int y, int au) const {
    std::vector<int> n(nx_);
    for (int x = 0; x < nx_; ++x) n[x] = units[static_cast<std::size_t>(x * ny_ + y) * na_ * nu_ + au];
    return n;
  }

  // Pareto options of one group; depends only on (y, counts).
  const std::vector<InnerOption>& options(int y, const std::vector<int>& n) {
    std::size_t key = static_cast<std::size_t>(y);
    for (int x = 0; x < nx_; ++x) key = key * (k_ + 1) + n[x];
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    double pg = 0.0;
    std::vector<double> pxg(nx_);
    for (int x = 0; x < nx_; ++x) {
      pxg[x] = pxy_[x * ny_ + y] * n[x] / k_;
      pg += pxg[x];
    }
    std::vector<InnerOption> opts;
    std::vector<std::size_t> digit(nx_, 0);
    int index = 0;
    while (true) {
      std::vector<double> px1g(n1_, 0.0);
      for (int x = 0; x < nx_; ++x)
        for (int r = 0; r < n1_; ++r) px1g[r] += pxy_[x * ny_ + y] * splits_[n[x]][digit[x]][r] / k_;
      InnerOption o;
      o.choice = index;
      for (int x = 0; x < nx_; ++x)
        for (int r = 0; r < n1_; ++r) {
          const double p = pxy_[x * ny_ + y] * splits_[n[x]][digit[x]][r] / k_;
          o.dist += p * m_.d1.values(x, r);
          o.info += xlog2x_ratio(p, pg, pxg[x] * px1g[r]);
        }
      o.info = std::max(0.0, o.info);
      opts.push_back(o);
      ++index;
      int x = nx_ - 1;
      while (x >= 0 && ++digit[x] == splits_[n[x]].size()) digit[x--] = 0;
      if (x < 0) break;
    }
    return cache_.emplace(key, pareto(std::move(opts))).first->second;
  }

  // Smallest total information with total D1 within budget; `choice` gets
  // each group's option index (into the unfiltered option product).
  std::optional<double> solve_inner(std::span<const int> units, std::vector<int>& choice) {
    const double cap = b_.d1 + kFeasTol;
    std::vector<std::vector<FrontierPoint>> levels;
    std::vector<const std::vector<InnerOption>*> group_opts;
    std::vector<FrontierPoint> cur{{0.0, 0.0, -1, -1}};
    for (int y = 0; y < ny_; ++y)
      for (int au = 0; au < na_ * nu_; ++au) {
        const auto& opts = options(y, group_counts(units, y, au));
        group_opts.push_back(&opts);
        std::vector<FrontierPoint> next;
        next.reserve(cur.size() * opts.size());
        for (std::size_t i = 0; i < cur.size(); ++i)
          for (std::size_t o = 0; o < opts.size(); ++o) {
            const double d = cur[i].dist + opts[o].dist;
            if (d > cap) break;  // options sorted by dist
            next.push_back({d, cur[i].info + opts[o].info, static_cast<int>(i), static_cast<int>(o)});
          }
        if (next.empty()) return std::nullopt;
        std::stable_sort(next.begin(), next.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
          return a.dist != b.dist ? a.dist < b.dist : a.info < b.info;
        });
        std::vector<FrontierPoint> kept;
        for (const auto& p : next)
          if (kept.empty() || p.info < kept.back().info) kept.push_back(p);
        levels.push_back(cur);
        cur = std::move(kept);
      }
    // Every frontier point is within budget; the last has the least information.
    int idx = static_cast<int>(cur.size()) - 1;
    const double info = cur[idx].info;
    choice.assign(group_count(), 0);
    const std::vector<FrontierPoint>* level = &cur;
    for (int g = group_count() - 1; g >= 0; --g) {
      const auto& p = (*level)[idx];
      choice[g] = (*group_opts[g])[p.option].choice;
      idx = p.parent;
      level = &levels[g];
    }
    return info;
  }

  Eigen::ArrayXd witness(const std::vector<int>& units, const std::vector<int>& choice) const {
    const int outs = n1_ * na_ * nu_;
    Eigen::ArrayXd v = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(nx_) * ny_ * outs);
    for (int y = 0; y < ny_; ++y)
      for (int au = 0; au < na_ * nu_; ++au) {
        const auto n = group_counts(units, y, au);
        // Decode the option product index, last x fastest.
        int rest = choice[y * na_ * nu_ + au];
        std::vector<int> digit(nx_);
        for (int x = nx_ - 1; x >= 0; --x) {
          const int base = static_cast<int>(splits_[n[x]].size());
          digit[x] = rest % base;
          rest /= base;
        }
        for (int x = 0; x < nx_; ++x)
          for (int r = 0; r < n1_; ++r)
            v[static_cast<Eigen::Index>(x * ny_ + y) * outs + r * na_ * nu_ + au] =
                static_cast<double>(splits_[n[x]][digit[x]][r]) / k_;
      }
    return v;
  }

  const CascadeVendingModel& m_;
  ConstraintBudget b_;
  Weights2 w_;
  int k_, nu_;
  int nx_ = 0, ny_ = 0, na_ = 0, n1_ = 0;
  std::vector<double> pxy_;
  std::vector<std::vector<std::vector<int>>> splits_;
  std::map<std::size_t, std::vector<InnerOption>> cache_;
};

OracleResult2 full_cascade(const CascadeVendingModel& m, const ConstraintBudget& b, Weights2 w, const GridSpec& g) {
  CascadeEvaluator eval(m, g.u_size);
  const SimplexBlock block = eval.block();
  LatticeEnumerator lat({block}, g.resolution, g.guard);
  OracleResult2 res;
  res.method = OracleMethod::full;
  res.lattice_points = lat.count();
  bool have = false;
  double best = 0.0;
  std::vector<double> arg;
  while (lat.next()) {
    ++res.evaluated;
    const auto c = eval(lat.point());
    if (c.d1 - b.d1 > kFeasTol || c.d2 - b.d2 > kFeasTol || c.gamma - b.gamma > kFeasTol) continue;
    const double obj = w.w1 * c.r1 + w.w2 * c.r2;
    if (!have || obj < best) {
      have = true;
      best = obj;
      arg.assign(lat.point().begin(), lat.point().end());
    }
  }
  if (have) {
    Eigen::ArrayXd v = Eigen::Map<const Eigen::ArrayXd>(arg.data(), static_cast<Eigen::Index>(arg.size()));
    res.point = rate_corner(m, CascadeDecision::from_values(m, g.u_size, std::move(v)));
    res.objective = w.w1 * res.point->r1 + w.w2 * res.point->r2;
  }
  return res;
}

// Dirichlet(alpha) rows, one per cell.
Eigen::ArrayXd random_rows(std::mt19937_64& rng, int cells, int outputs, double alpha, double floor = 0.0) {
  std::gamma_distribution<double> gam(alpha, 1.0);
  Eigen::ArrayXd v(static_cast<Eigen::Index>(cells) * outputs);
  for (int c = 0; c < cells; ++c) {
    auto s = v.segment(static_cast<Eigen::Index>(c) * outputs, outputs);
    for (int o = 0; o < outputs; ++o) s[o] = gam(rng) + floor;
    s /= s.sum();
  }
  return v;
}

}  // namespace

GuardExceeded::GuardExceeded(std::uint64_t count, std::uint64_t guard)
    : std::runtime_error("lattice search needs " +
                         (count == kSaturated ? std::string("more than 2^64") : std::to_string(count)) +
                         " evaluations, guard is " + std::to_string(guard)),
      count_(count) {}

std::uint64_t simplex_lattice_count(int resolution, int outputs) {
  if (resolution < 1 || outputs < 1) throw std::invalid_argument("lattice needs resolution >= 1 and outputs >= 1");
  // C(K + m - 1, m - 1) via the multiplicative formula; each prefix is an integer.
  const std::uint64_t n = static_cast<std::uint64_t>(resolution) + outputs - 1;
  const std::uint64_t k = std::min<std::uint64_t>(outputs - 1, resolution);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > kSaturated) return kSaturated;
  }
  return static_cast<std::uint64_t>(c);
}

std::uint64_t lattice_count(std::span<const SimplexBlock> blocks, int resolution) {
  std::uint64_t total = 1;
  for (const auto& b : blocks) {
    const std::uint64_t per = simplex_lattice_count(resolution, b.outputs);
    for (int c = 0; c < b.cells; ++c) total = mul_sat(total, per);
  }
  return total;
}

std::vector<std::vector<int>> compositions(int k, int m) {
  if (k < 0 || m < 1) throw std::invalid_argument("compositions need k >= 0 and m >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(m, 0);
  // Recursive fill, first part smallest first.
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == m - 1) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, k);
  return out;
}

LatticeEnumerator::LatticeEnumerator(std::vector<SimplexBlock> blocks, int resolution, std::uint64_t guard)
    : resolution_(resolution), count_(lattice_count(blocks, resolution)) {
  if (count_ > guard) throw GuardExceeded(count_, guard);
  std::map<int, int> table_of;
  std::size_t offset = 0;
  for (const auto& b : blocks) {
    auto [it, fresh] = table_of.emplace(b.outputs, static_cast<int>(tables_.size()));
    if (fresh) tables_.push_back(compositions(resolution, b.outputs));
    for (int c = 0; c < b.cells; ++c) {
      cells_.push_back({it->second, offset});
      offset += b.outputs;
    }
  }
  digit_.assign(cells_.size(), 0);
  point_.assign(offset, 0.0);
  units_.assign(offset, 0);
}

bool LatticeEnumerator::next() {
  auto write = [&](std::size_t c) {
    const auto& comp = tables_[cells_[c].table][digit_[c]];
    for (std::size_t o = 0; o < comp.size(); ++o) {
      units_[cells_[c].offset + o] = comp[o];
      point_[cells_[c].offset + o] = static_cast<double>(comp[o]) / resolution_;
    }
  };
  if (!started_) {
    started_ = true;
    for (std::size_t c = 0; c < cells_.size(); ++c) write(c);
    return true;
  }
  for (std::size_t c = cells_.size(); c-- > 0;) {
    if (++digit_[c] < tables_[cells_[c].table].size()) {
      write(c);
      return true;
    }
    digit_[c] = 0;
    write(c);
  }
  return false;
}

OracleResult2 brute_force_min(const CascadeVendingModel& m, const ConstraintBudget& budget, Weights2 w,
                              const GridSpec& grid) {
  if (auto r = validate_model(m); !r.ok()) throw std::invalid_argument("invalid cascade model: " + r.to_string());
  if (auto r = validate_budget(budget); !r.ok()) throw std::invalid_argument("invalid budget: " + r.to_string());
  if (!(w.w1 >= 0.0 && w.w2 >= 0.0 && w.w1 + w.w2 > 0.0))
    throw std::invalid_argument("weights must be nonnegative with a positive sum");
  if (grid.resolution < 1 || grid.u_size < 1) throw std::invalid_argument("grid needs resolution >= 1 and u_size >= 1");

  const std::vector<SimplexBlock> full{{m.x.size() * m.y.size(), m.x1.size() * m.a.size() * grid.u_size}};
  const std::uint64_t n_full = lattice_count(full, grid.resolution);
  OracleMethod method = grid.method;
  if (method == OracleMethod::automatic) method = n_full <= grid.guard ? OracleMethod::full : OracleMethod::decomposed;
  if (method == OracleMethod::full) return full_cascade(m, budget, w, grid);

  const std::vector<SimplexBlock> outer{{m.x.size() * m.y.size(), m.a.size() * grid.u_size}};
  if (lattice_count(outer, grid.resolution) > grid.guard) throw GuardExceeded(n_full, grid.guard);
  return DecomposedCascade(m, budget, w, grid).run(grid.guard);
}

OracleResult3 brute_force_min(const BroadcastCRModel& m, const ConstraintBudget& budget, Weights3 w,
                              const GridSpec& grid) {
  if (auto r = validate_model(m); !r.ok()) throw std::invalid_argument("invalid broadcast model: " + r.to_string());
  if (auto r = validate_budget(budget); !r.ok()) throw std::invalid_argument("invalid budget: " + r.to_string());
  if (!(w.w1 >= 0.0 && w.w2 >= 0.0 && w.wb >= 0.0 && w.w1 + w.w2 + w.wb > 0.0))
    throw std::invalid_argument("weights must be nonnegative with a positive sum");
  if (grid.resolution < 1) throw std::invalid_argument("grid needs resolution >= 1");

  BroadcastEvaluator eval(m);
  const auto blocks = eval.blocks();
  LatticeEnumerator lat({blocks.begin(), blocks.end()}, grid.resolution, grid.guard);
  OracleResult3 res;
  res.lattice_points = lat.count();
  bool have = false;
  double best = 0.0;
  std::vector<double> arg;
  while (lat.next()) {
    ++res.evaluated;
    const auto c = eval(lat.point());
    if (c.d1 - budget.d1 > kFeasTol || c.d2 - budget.d2 > kFeasTol || c.gamma - budget.gamma > kFeasTol) continue;
    const double obj = weighted(w, optimal_rate_triple(c.bounds, w));
    if (!have || obj < best) {
      have = true;
      best = obj;
      arg.assign(lat.point().begin(), lat.point().end());
    }
  }
  if (have) {
    res.point = corner(m, BroadcastDecision::from_params(m, arg));
    res.point->rates = optimal_rate_triple(res.point->bounds, w);
    res.objective = weighted(w, res.point->rates);
  }
  return res;
}

CascadeVendingModel restrict_actions(const CascadeVendingModel& m, int a) {
  if (a < 0 || a >= m.a.size()) throw std::invalid_argument("restrict_actions: action index out of range");
  CascadeVendingModel r = m;
  r.a = FiniteAlphabet(m.a.name(), std::vector<std::string>{m.a.labels()[a]});
  const int ny = m.y.size(), nz = m.z.size();
  Eigen::ArrayXd ch(ny * nz);
  for (int y = 0; y < ny; ++y)
    for (int z = 0; z < nz; ++z) ch[y * nz + z] = kernel_at(m.vm_channel, m.a.name(), a, y, z);
  r.vm_channel = CondKernel({r.a, m.y}, {m.z}, std::move(ch));
  r.cost = CostTable{r.a, Eigen::VectorXd::Constant(1, m.cost.values[a])};
  return r;
}

BroadcastCRModel restrict_actions(const BroadcastCRModel& m, int a) {
  if (a < 0 || a >= m.a.size()) throw std::invalid_argument("restrict_actions: action index out of range");
  BroadcastCRModel r = m;
  r.a = FiniteAlphabet(m.a.name(), std::vector<std::string>{m.a.labels()[a]});
  const int nx = m.x.size(), ny = m.y.size();
  Eigen::ArrayXd ch(nx * ny);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) ch[x * ny + y] = kernel_at(m.vm_channel, m.a.name(), a, x, y);
  r.vm_channel = CondKernel({r.a, m.x}, {m.y}, std::move(ch));
  r.cost = CostTable{r.a, Eigen::VectorXd::Constant(1, m.cost.values[a])};
  return r;
}

CascadeInstance random_binary_cascade(std::uint64_t seed, bool action_free) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  CascadeInstance in;
  auto& m = in.model;
  m.x = FiniteAlphabet("X", 2);
  m.y = FiniteAlphabet("Y", 2);
  m.z = FiniteAlphabet("Z", 2);
  m.a = FiniteAlphabet("A", 2);
  m.x1 = FiniteAlphabet("X1", 2);
  m.x2 = FiniteAlphabet("X2", 2);
  m.source = JointPmf({m.x, m.y}, random_rows(rng, 1, 4, 1.0, 0.05));
  Eigen::ArrayXd ch = random_rows(rng, 4, 2, 1.0, 0.02);
  if (action_free) ch.tail(4) = ch.head(4);  // rows [a=1][y] copy [a=0][y]
  m.vm_channel = CondKernel({m.a, m.y}, {m.z}, ch);
  m.d1 = DistortionTable::hamming(m.x, m.x1);
  m.d2 = DistortionTable::hamming(m.x, m.x2);
  const double lambda = action_free ? 0.0 : 0.5 + 0.5 * unif(rng);
  m.cost = CostTable{m.a, Eigen::Vector2d(0.0, lambda)};
  in.budget.d1 = 0.05 + 0.25 * unif(rng);
  in.budget.d2 = 0.05 + 0.25 * unif(rng);
  in.budget.gamma = lambda * (0.2 + 0.6 * unif(rng));
  return in;
}

BroadcastInstance random_binary_broadcast(std::uint64_t seed, bool action_free) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BroadcastInstance in;
  auto& m = in.model;
  m.x = FiniteAlphabet("X", 2);
  m.y = FiniteAlphabet("Y", 2);
  m.a = FiniteAlphabet("A", 2);
  m.x1 = FiniteAlphabet("X1", 2);
  m.x2 = FiniteAlphabet("X2", 2);
  m.source = JointPmf({m.x}, random_rows(rng, 1, 2, 1.0, 0.1));
  Eigen::ArrayXd ch = random_rows(rng, 4, 2, 1.0, 0.02);
  if (action_free) ch.tail(4) = ch.head(4);
  m.vm_channel = CondKernel({m.a, m.x}, {m.y}, ch);
  m.d1 = DistortionTable::hamming(m.x, m.x1);
  m.d2 = DistortionTable::hamming(m.x, m.x2);
  const double lambda = action_free ? 0.0 : 0.5 + 0.5 * unif(rng);
  m.cost = CostTable{m.a, Eigen::Vector2d(0.0, lambda)};
  in.budget.d1 = 0.05 + 0.25 * unif(rng);
  in.budget.d2 = 0.05 + 0.25 * unif(rng);
  in.budget.gamma = lambda * (0.2 + 0.6 * unif(rng));
  return in;
}

bool SuiteReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const SuiteCheck& c) { return c.pass; });
}

std::string SuiteReport::to_string() const {
  std::ostringstream os;
  for (const auto& c : checks) os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  return os.str();
}

namespace {

template <typename Model, typename W, typename Solve>
std::vector<double> ladder(const Model& m, const ConstraintBudget& base, W w, int coordinate, int steps,
                           Solve solve) {
  if (coordinate < 0 || coordinate > 2) throw std::invalid_argument("budget_ladder: coordinate must be 0, 1 or 2");
  if (steps < 2) throw std::invalid_argument("budget_ladder: needs at least 2 steps");
  const double top = coordinate == 0 ? m.d1.d_max() : coordinate == 1 ? m.d2.d_max() : m.cost.lambda_max();
  std::vector<double> out;
  for (int s = 0; s < steps; ++s) {
    ConstraintBudget b = base;
    const double v = top * s / (steps - 1);
    (coordinate == 0 ? b.d1 : coordinate == 1 ? b.d2 : b.gamma) = v;
    auto r = solve(m, b, w);
    out.push_back(r.point ? r.objective : std::numeric_limits<double>::infinity());
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

template <typename Inst, typename W>
void run_degeneracy(SuiteReport& rep, const std::string& family, const SuiteOptions& opt, Inst (*make)(std::uint64_t, bool),
                    const std::vector<W>& weights) {
  const auto solve = [&](const auto& m, const ConstraintBudget& b, W w) { return brute_force_min(m, b, w, opt.grid); };
  for (int i = 0; i < opt.instances; ++i) {
    const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(i);

    // Action-free reduction: constant actions lose nothing.
    const Inst free = make(seed, true);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const auto full = solve(free.model, free.budget, weights[k]);
      const auto one = solve(restrict_actions(free.model, 0), free.budget, weights[k]);
      SuiteCheck c{family + " action-free reduction (seed " + std::to_string(seed) + ", weight " + std::to_string(k) + ")",
                   false, ""};
      if (full.point && one.point) {
        const double d = std::abs(full.objective - one.objective);
        c.pass = d <= opt.reduction_tol;
        c.detail = "full " + fmt(full.objective) + ", |A|=1 " + fmt(one.objective) + ", diff " + fmt(d);
      } else {
        c.pass = !full.point && !one.point;
        c.detail = c.pass ? "both infeasible" : "feasibility differs";
      }
      rep.checks.push_back(c);
    }

    // Loose budgets: everything fits at zero rate.
    const Inst inst = make(seed, false);
    const ConstraintBudget loose{inst.model.d1.d_max(), inst.model.d2.d_max(), inst.model.cost.lambda_max()};
    {
      const auto r = solve(inst.model, loose, weights.front());
      SuiteCheck c{family + " loose budget zero rate (seed " + std::to_string(seed) + ")", false, ""};
      c.pass = r.point && r.objective <= 1e-12;
      c.detail = r.point ? "minimum " + fmt(r.objective) : "infeasible";
      rep.checks.push_back(c);
    }

    // Budget ladders.
    const char* names[] = {"D1", "D2", "Gamma"};
    for (int coord = 0; coord < 3; ++coord) {
      const auto vals = ladder(inst.model, inst.budget, weights.front(), coord, opt.ladder_steps, solve);
      SuiteCheck c{family + " " + names[coord] + " ladder nonincreasing (seed " + std::to_string(seed) + ")", true, ""};
      for (std::size_t s = 0; s < vals.size(); ++s) {
        if (s && vals[s] > vals[s - 1] + 1e-12) c.pass = false;
        c.detail += (s ? " " : "") + fmt(vals[s]);
      }
      rep.checks.push_back(c);
    }
  }
}

}  // namespace

std::vector<double> budget_ladder(const CascadeVendingModel& m, const ConstraintBudget& base, Weights2 w,
                                  int coordinate, int steps, const GridSpec& grid) {
  return ladder(m, base, w, coordinate, steps,
                [&](const auto& mm, const ConstraintBudget& b, Weights2 ww) { return brute_force_min(mm, b, ww, grid); });
}

std::vector<double> budget_ladder(const BroadcastCRModel& m, const ConstraintBudget& base, Weights3 w,
                                  int coordinate, int steps, const GridSpec& grid) {
  return ladder(m, base, w, coordinate, steps,
                [&](const auto& mm, const ConstraintBudget& b, Weights3 ww) { return brute_force_min(mm, b, ww, grid); });
}

SuiteReport degeneracy_suite(ModelFamily family, const SuiteOptions& opt) {
  SuiteReport rep;
  if (family == ModelFamily::cascade)
    run_degeneracy<CascadeInstance, Weights2>(rep, "cascade", opt, &random_binary_cascade,
                                              {{1.0, 1.0}, {1.0, 0.25}, {0.25, 1.0}});
  else
    run_degeneracy<BroadcastInstance, Weights3>(rep, "broadcast", opt, &random_binary_broadcast,
                                                {{1.0, 1.0, 1.0}, {1.0, 0.5, 2.0}, {0.5, 2.0, 1.0}});
  return rep;
}

SuiteReport invariant_suite(ModelFamily family, std::uint64_t seed, int decisions) {
  SuiteReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto alpha = [&] { return unif(rng) < 0.5 ? 1.0 : 0.3; };

  if (family == ModelFamily::cascade) {
    const auto inst = random_binary_cascade(seed);
    const auto& m = inst.model;
    const int u = 2;
    CascadeEvaluator eval(m, u);
    const auto blk = eval.block();
    double worst_markov = 0.0, worst_eval = 0.0, worst_decoder = 0.0;
    for (int i = 0; i < decisions; ++i) {
      const Eigen::ArrayXd k = random_rows(rng, blk.cells, blk.outputs, alpha());
      const auto d = CascadeDecision::from_values(m, u, k);
      const JointPmf j = assemble_joint(m, d);
      worst_markov = std::max(worst_markov, mutual_information(j, {m.x.name()}, {m.z.name()}, {m.a.name(), m.y.name()}));

      const auto pt = rate_corner(m, d);
      const auto c = eval(std::span<const double>(k.data(), k.size()));
      worst_eval = std::max({worst_eval, std::abs(pt.r1 - c.r1), std::abs(pt.r2 - c.r2), std::abs(pt.d1 - c.d1),
                             std::abs(pt.d2 - c.d2), std::abs(pt.gamma - c.gamma)});

      // Exhaustive decoder enumeration: |X2|^(|U||Z|) tables.
      const int uz = u * m.z.size(), n2 = m.x2.size();
      double exhaustive = std::numeric_limits<double>::infinity();
      SymbolDecoder f{u, m.z.size(), std::vector<int>(uz, 0)};
      while (true) {
        exhaustive = std::min(exhaustive, decoder_distortion(j, m.d2, f));
        int p = uz - 1;
        while (p >= 0 && ++f.table[p] == n2) f.table[p--] = 0;
        if (p < 0) break;
      }
      const double bayes = decoder_distortion(j, m.d2, bayes_decoder(j, m.d2));
      worst_decoder = std::max(worst_decoder, std::abs(bayes - exhaustive));
    }
    rep.checks.push_back({"cascade joint satisfies X - (A,Y) - Z", worst_markov <= 1e-10,
                          "max I(X;Z|A,Y) = " + fmt(worst_markov)});
    rep.checks.push_back({"cascade fast evaluator matches generic route", worst_eval <= 1e-9,
                          "max deviation " + fmt(worst_eval)});
    rep.checks.push_back({"cascade Bayes decoder matches exhaustive enumeration", worst_decoder <= 1e-12,
                          "max deviation " + fmt(worst_decoder)});
  } else {
    const auto inst = random_binary_broadcast(seed);
    const auto& m = inst.model;
    BroadcastEvaluator eval(m);
    const auto blks = eval.blocks();
    double worst_markov = 0.0, worst_eval = 0.0, worst_order = 0.0;
    for (int i = 0; i < decisions; ++i) {
      const Eigen::ArrayXd act = random_rows(rng, blks[0].cells, blks[0].outputs, alpha());
      const Eigen::ArrayXd rec = random_rows(rng, blks[1].cells, blks[1].outputs, alpha());
      const auto d = BroadcastDecision::from_values(m, act, rec);
      const JointPmf j = assemble_joint(m, d);
      worst_markov = std::max(worst_markov, mutual_information(j, {m.x1.name(), m.x2.name()}, {m.a.name(), m.y.name()},
                                                               {m.x.name()}));
      const auto pt = corner(m, d);
      const auto& b = pt.bounds;
      worst_order = std::max({worst_order, b.lb - b.l1b, b.lb - b.l2b, b.l2b - b.l12b});

      std::vector<double> params(act.data(), act.data() + act.size());
      params.insert(params.end(), rec.data(), rec.data() + rec.size());
      const auto c = eval(params);
      worst_eval = std::max({worst_eval, std::abs(b.lb - c.bounds.lb), std::abs(b.l1b - c.bounds.l1b),
                             std::abs(b.l2b - c.bounds.l2b), std::abs(b.l12b - c.bounds.l12b),
                             std::abs(pt.d1 - c.d1), std::abs(pt.d2 - c.d2), std::abs(pt.gamma - c.gamma)});
    }
    rep.checks.push_back({"broadcast joint satisfies (X1,X2) - X - (A,Y)", worst_markov <= 1e-10,
                          "max I(X1,X2;A,Y|X) = " + fmt(worst_markov)});
    rep.checks.push_back({"broadcast bound ordering Lb <= L1b, Lb <= L2b <= L12b", worst_order <= 1e-12,
                          "max violation " + fmt(std::max(0.0, worst_order))});
    rep.checks.push_back({"broadcast fast evaluator matches generic route", worst_eval <= 1e-9,
                          "max deviation " + fmt(worst_eval)});
  }
  return rep;
}

}  // namespace vending
