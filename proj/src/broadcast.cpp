#include "vending/broadcast.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vending {

namespace {

double plogp(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

void require_valid(const BroadcastCRModel& m, const ConstraintBudget* b) {
  auto r = validate_model(m);
  if (b) {
    auto rb = validate_budget(*b);
    r.violations.insert(r.violations.end(), rb.violations.begin(), rb.violations.end());
  }
  if (!r.ok()) throw std::invalid_argument("invalid broadcast model: " + r.to_string());
}

int channel_cell(const BroadcastCRModel& m, int a, int x) {
  if (m.vm_channel.from_axes().front().name() == m.a.name()) return a * m.x.size() + x;
  return x * m.a.size() + a;
}

constexpr AxisMask kX = 1, kA = 2, kY = 4, kX1 = 8, kX2 = 16;
enum Marg { kAm, kXA, kXAY, kAYX1X2, kAY, kAX2, kXAX2, kXAYX2, kAYX2, kXX1, kXX2, kMargCount };
constexpr AxisMask kMargMasks[kMargCount] = {kA,      kX | kA,       kX | kA | kY,       kA | kY | kX1 | kX2,
                                             kA | kY, kA | kX2,      kX | kA | kX2,      kX | kA | kY | kX2,
                                             kA | kY | kX2, kX | kX1, kX | kX2};

}  // namespace

BroadcastDecision BroadcastDecision::from_values(const BroadcastCRModel& m, Eigen::ArrayXd action,
                                                 Eigen::ArrayXd recon) {
  return {CondKernel({m.x}, {m.a}, std::move(action)), CondKernel({m.x}, {m.x1, m.x2}, std::move(recon))};
}

BroadcastDecision BroadcastDecision::constant(const BroadcastCRModel& m) {
  const int nx = m.x.size();
  Eigen::ArrayXd act = Eigen::ArrayXd::Zero(nx * m.a.size());
  Eigen::ArrayXd rec = Eigen::ArrayXd::Zero(nx * m.x1.size() * m.x2.size());
  for (int x = 0; x < nx; ++x) {
    act[x * m.a.size()] = 1.0;
    rec[x * m.x1.size() * m.x2.size()] = 1.0;
  }
  return from_values(m, std::move(act), std::move(rec));
}

JointPmf assemble_joint(const BroadcastCRModel& m, const BroadcastDecision& d) {
  if (d.action.from_axes().size() != 1 || d.action.from_axes()[0] != m.x || d.action.to_axes().size() != 1 ||
      d.action.to_axes()[0] != m.a)
    throw std::invalid_argument("assemble_joint: action kernel must map X to A");
  if (d.recon.from_axes().size() != 1 || d.recon.from_axes()[0] != m.x || d.recon.to_axes().size() != 2 ||
      d.recon.to_axes()[0] != m.x1 || d.recon.to_axes()[1] != m.x2)
    throw std::invalid_argument("assemble_joint: reconstruction kernel must map X to (X1, X2)");
  return compose(compose(compose(m.source, d.action), m.vm_channel), d.recon);
}

RatePoint3 corner(const BroadcastCRModel& m, const BroadcastDecision& d) {
  auto j = assemble_joint(m, d);
  const auto& X = m.x.name();
  const auto& Y = m.y.name();
  const auto& A = m.a.name();
  const auto& X1 = m.x1.name();
  const auto& X2 = m.x2.name();
  RatePoint3 p;
  auto& t = p.terms;
  t.i_x_a = mutual_information(j, {X}, {A});
  t.i_x_x1x2_given_ay = mutual_information(j, {X}, {X1, X2}, {A, Y});
  t.i_x_x2_given_a = mutual_information(j, {X}, {X2}, {A});
  t.i_x_x2_given_ay = mutual_information(j, {X}, {X2}, {A, Y});
  t.i_x_x1_given_ayx2 = mutual_information(j, {X}, {X1}, {A, Y, X2});
  p.bounds.lb = t.i_x_a;
  p.bounds.l1b = t.i_x_a + t.i_x_x1x2_given_ay;
  p.bounds.l2b = t.i_x_a + t.i_x_x2_given_a;
  p.bounds.l12b = t.i_x_a + t.i_x_x2_given_a + t.i_x_x1_given_ayx2;
  p.d1 = expected_distortion(j, m.d1, X, X1);
  p.d2 = expected_distortion(j, m.d2, X, X2);
  p.gamma = expected_cost(j, m.cost, A);
  p.decision = d;
  return p;
}

double min_slack(const RateBounds& b, const RateTriple& r) {
  return std::min({r.rb - b.lb, r.r1 + r.rb - b.l1b, r.r2 + r.rb - b.l2b, r.r1 + r.r2 + r.rb - b.l12b});
}

RateTriple optimal_rate_triple(const RateBounds& b, const Weights3& w) {
  // Rows of G R >= h: the four region inequalities, then R >= 0.
  static const double kG[7][3] = {{0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const double h[7] = {b.lb, b.l1b, b.l2b, b.l12b, 0.0, 0.0, 0.0};
  const Eigen::Vector3d weight(w.w1, w.w2, w.wb);
  constexpr double kTol = 1e-12;

  RateTriple best;
  double best_obj = std::numeric_limits<double>::infinity(), best_sum = best_obj;
  for (int i = 0; i < 7; ++i)
    for (int j = i + 1; j < 7; ++j)
      for (int k = j + 1; k < 7; ++k) {
        Eigen::Matrix3d g;
        g << kG[i][0], kG[i][1], kG[i][2], kG[j][0], kG[j][1], kG[j][2], kG[k][0], kG[k][1], kG[k][2];
        if (std::abs(g.determinant()) < 0.5) continue;  // integer matrix: singular iff det == 0
        Eigen::Vector3d r = g.partialPivLu().solve(Eigen::Vector3d(h[i], h[j], h[k]));
        bool feasible = true;
        for (int row = 0; row < 7 && feasible; ++row)
          feasible = kG[row][0] * r[0] + kG[row][1] * r[1] + kG[row][2] * r[2] >= h[row] - kTol;
        if (!feasible) continue;
        const double obj = weight.dot(r), sum = r.sum();
        if (obj < best_obj - 1e-15 || (obj <= best_obj + 1e-15 && sum < best_sum - 1e-15)) {
          best_obj = obj;
          best_sum = sum;
          best = {std::max(0.0, r[0]), std::max(0.0, r[1]), std::max(0.0, r[2])};
        }
      }
  return best;
}

BroadcastEvaluator::BroadcastEvaluator(const BroadcastCRModel& m)
    : nx_(m.x.size()), na_(m.a.size()), ny_(m.y.size()), n1_(m.x1.size()), n2_(m.x2.size()) {
  require_valid(m, nullptr);
  px_.assign(m.source.values().begin(), m.source.values().end());
  py_.resize(static_cast<std::size_t>(nx_) * na_ * ny_);
  for (int x = 0; x < nx_; ++x)
    for (int a = 0; a < na_; ++a) {
      auto s = m.vm_channel.slice(channel_cell(m, a, x));
      for (int y = 0; y < ny_; ++y) py_[(x * na_ + a) * ny_ + y] = s[y];
    }
  for (int x = 0; x < nx_; ++x) {
    for (int r = 0; r < n1_; ++r) d1_.push_back(m.d1.values(x, r));
    for (int r = 0; r < n2_; ++r) d2_.push_back(m.d2.values(x, r));
  }
  cost_.assign(m.cost.values.begin(), m.cost.values.end());
  const std::vector<int> shape{nx_, na_, ny_, n1_, n2_};
  full_.resize(detail::volume(shape));
  for (AxisMask mask : kMargMasks) {
    maps_.push_back(detail::marginal_map(shape, mask));
    marg_.emplace_back(detail::marginal_volume(shape, mask));
  }
}

BroadcastMetrics BroadcastEvaluator::operator()(std::span<const double> params) const {
  const double* act = params.data();
  const double* rec = params.data() + static_cast<std::size_t>(nx_) * na_;
  const int nr = n1_ * n2_;
  std::size_t cell = 0;
  for (int x = 0; x < nx_; ++x)
    for (int a = 0; a < na_; ++a) {
      const double pxa = px_[x] * act[x * na_ + a];
      for (int y = 0; y < ny_; ++y) {
        const double q = pxa * py_[(x * na_ + a) * ny_ + y];
        for (int r = 0; r < nr; ++r) full_[cell++] = q * rec[x * nr + r];
      }
    }
  std::array<double, kMargCount> h{};
  for (int i = 0; i < kMargCount; ++i) {
    auto& out = marg_[i];
    std::fill(out.begin(), out.end(), 0.0);
    const auto& map = maps_[i];
    for (std::size_t c = 0; c < full_.size(); ++c) out[map[c]] += full_[c];
    h[i] = plogp(out);
  }
  const double h_all = plogp(full_);
  const double h_x = plogp(px_);
  const double i_xa = std::max(0.0, h_x + h[kAm] - h[kXA]);
  const double i_x_x1x2_ay = std::max(0.0, h[kXAY] + h[kAYX1X2] - h_all - h[kAY]);
  const double i_x_x2_a = std::max(0.0, h[kXA] + h[kAX2] - h[kXAX2] - h[kAm]);
  const double i_x_x1_ayx2 = std::max(0.0, h[kXAYX2] + h[kAYX1X2] - h_all - h[kAYX2]);

  BroadcastMetrics r;
  r.bounds = {i_xa, i_xa + i_x_x1x2_ay, i_xa + i_x_x2_a, i_xa + i_x_x2_a + i_x_x1_ayx2};
  for (int i = 0; i < nx_ * n1_; ++i) r.d1 += marg_[kXX1][i] * d1_[i];
  for (int i = 0; i < nx_ * n2_; ++i) r.d2 += marg_[kXX2][i] * d2_[i];
  for (int x = 0; x < nx_; ++x)
    for (int a = 0; a < na_; ++a) r.gamma += px_[x] * act[x * na_ + a] * cost_[a];
  return r;
}

namespace {

PointEval scored(const BroadcastMetrics& c, double objective, const ConstraintBudget& b) {
  return {objective, {c.d1 - b.d1, c.d2 - b.d2, c.gamma - b.gamma}};
}

}  // namespace

double weighted(const Weights3& w, const RateTriple& r) { return w.w1 * r.r1 + w.w2 * r.r2 + w.wb * r.rb; }

BroadcastDecision BroadcastDecision::from_params(const BroadcastCRModel& m, std::span<const double> x) {
  const Eigen::Index na = static_cast<Eigen::Index>(m.x.size()) * m.a.size();
  Eigen::Map<const Eigen::ArrayXd> all(x.data(), static_cast<Eigen::Index>(x.size()));
  return BroadcastDecision::from_values(m, all.head(na), all.tail(all.size() - na));
}

BroadcastSearchResult min_weighted_rate3(const BroadcastCRModel& m, const ConstraintBudget& budget, Weights3 w,
                                         const SearchConfig& cfg) {
  require_valid(m, &budget);
  if (!(w.w1 >= 0.0 && w.w2 >= 0.0 && w.wb >= 0.0 && w.w1 + w.w2 + w.wb > 0.0))
    throw std::invalid_argument("weights must be nonnegative with a positive sum");
  BroadcastEvaluator eval(m);
  const auto blocks = eval.blocks();
  PointEvaluator f = [eval, w, budget](std::span<const double> p) {
    auto c = eval(p);
    return scored(c, weighted(w, optimal_rate_triple(c.bounds, w)), budget);
  };
  auto outcome = multistart_minimize(blocks, f, cfg);

  BroadcastSearchResult res;
  res.seed = cfg.seed;
  res.evaluations = outcome.evaluations;
  if (outcome.best) {
    res.point = corner(m, BroadcastDecision::from_params(m, outcome.best->x));
    res.point->rates = optimal_rate_triple(res.point->bounds, w);
    res.objective = weighted(w, res.point->rates);
    res.restart = outcome.best->restart;
  }
  return res;
}

Surface trace_surface3(const BroadcastCRModel& m, const ConstraintBudget& budget,
                       std::span<const Weights3> weight_grid, const SearchConfig& cfg) {
  if (weight_grid.empty()) throw std::invalid_argument("trace_surface3: empty weight grid");
  std::vector<BroadcastSearchResult> raw;
  for (const auto& w : weight_grid) raw.push_back(min_weighted_rate3(m, budget, w, cfg));

  Surface s;
  for (std::size_t i = 0; i < weight_grid.size(); ++i) {
    const auto& w = weight_grid[i];
    int pick = -1;
    double best = 0.0, best_sum = 0.0;
    RateTriple best_rates;
    for (std::size_t j = 0; j < raw.size(); ++j) {
      if (!raw[j].point) continue;
      auto rates = optimal_rate_triple(raw[j].point->bounds, w);
      const double obj = weighted(w, rates), sum = rates.r1 + rates.r2 + rates.rb;
      if (pick < 0 || obj < best || (obj == best && sum < best_sum)) {
        pick = static_cast<int>(j);
        best = obj;
        best_sum = sum;
        best_rates = rates;
      }
    }
    SurfaceRow row{w, pick >= 0 ? raw[pick] : raw[i], pick, false};
    if (pick >= 0) {
      row.result.point->rates = best_rates;
      row.result.objective = best;
    } else {
      s.failures.push_back(i);
    }
    s.rows.push_back(std::move(row));
  }

  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    if (!s.rows[i].result.point) continue;
    const auto& a = s.rows[i].result.point->rates;
    bool dominated = false;
    for (std::size_t j = 0; j < s.rows.size() && !dominated; ++j) {
      if (j == i || !s.rows[j].result.point) continue;
      const auto& b = s.rows[j].result.point->rates;
      const bool le = b.r1 <= a.r1 && b.r2 <= a.r2 && b.rb <= a.rb;
      const bool lt = b.r1 < a.r1 || b.r2 < a.r2 || b.rb < a.rb;
      dominated = le && lt;
    }
    if (!dominated) {
      s.envelope.push_back(i);
      s.rows[i].on_envelope = true;
    }
  }
  return s;
}

Membership3 membership3(const BroadcastCRModel& m, const RateTriple& rates, const ConstraintBudget& budget,
                        const SearchConfig& cfg) {
  require_valid(m, &budget);
  if (!(rates.r1 >= 0.0 && rates.r2 >= 0.0 && rates.rb >= 0.0))
    throw std::invalid_argument("membership3: rates must be >= 0");
  BroadcastEvaluator eval(m);
  const auto blocks = eval.blocks();
  auto shortfall = [rates](const RateBounds& b) {
    return std::max(0.0, b.lb - rates.rb) + std::max(0.0, b.l1b - rates.r1 - rates.rb) +
           std::max(0.0, b.l2b - rates.r2 - rates.rb) + std::max(0.0, b.l12b - rates.r1 - rates.r2 - rates.rb);
  };
  PointEvaluator f = [eval, budget, shortfall](std::span<const double> p) {
    auto c = eval(p);
    return scored(c, shortfall(c.bounds), budget);
  };
  SearchOptions opt;
  opt.stop_at = 0.0;
  auto outcome = multistart_minimize(blocks, f, cfg, opt);

  Membership3 out;
  if (!outcome.best) {
    out.shortfall = std::numeric_limits<double>::infinity();
    return out;
  }
  auto p = corner(m, BroadcastDecision::from_params(m, outcome.best->x));
  p.rates = rates;
  out.shortfall = shortfall(p.bounds);
  if (min_slack(p.bounds, rates) >= -kMembershipTol) {
    out.verdict = Verdict::achievable;
    out.witness = std::move(p);
  }
  return out;
}

}  // namespace vending
