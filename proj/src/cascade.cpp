#include "vending/cascade.hpp"

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

void require_valid(const CascadeVendingModel& m, const ConstraintBudget* b) {
  auto r = validate_model(m);
  if (b) {
    auto rb = validate_budget(*b);
    r.violations.insert(r.violations.end(), rb.violations.begin(), rb.violations.end());
  }
  if (!r.ok()) throw std::invalid_argument("invalid cascade model: " + r.to_string());
}

// Cell index of (a, y) in the channel, whichever order its given-axes use.
int channel_cell(const CascadeVendingModel& m, int a, int y) {
  if (m.vm_channel.from_axes().front().name() == m.a.name()) return a * m.y.size() + y;
  return y * m.a.size() + a;
}

}  // namespace

FiniteAlphabet aux_alphabet(int u_size) { return FiniteAlphabet(kAuxAxis, u_size); }

int max_u_size(const CascadeVendingModel& m) { return m.x.size() * m.y.size() * m.a.size() + 3; }

int default_u_size(const CascadeVendingModel& m, const SearchConfig& cfg) {
  if (cfg.u_size > 0) return cfg.u_size;
  return std::max(1, std::min(max_u_size(m), cfg.u_size_cap));
}

CascadeDecision CascadeDecision::from_values(const CascadeVendingModel& m, int u_size, Eigen::ArrayXd values) {
  return {u_size, CondKernel({m.x, m.y}, {m.x1, m.a, aux_alphabet(u_size)}, std::move(values))};
}

CascadeDecision CascadeDecision::constant(const CascadeVendingModel& m, int u_size) {
  const int cells = m.x.size() * m.y.size();
  const int outs = m.x1.size() * m.a.size() * u_size;
  Eigen::ArrayXd v = Eigen::ArrayXd::Zero(cells * outs);
  for (int c = 0; c < cells; ++c) v[c * outs] = 1.0;
  return from_values(m, u_size, std::move(v));
}

JointPmf assemble_joint(const CascadeVendingModel& m, const CascadeDecision& d) {
  const auto& from = d.kernel.from_axes();
  const auto& to = d.kernel.to_axes();
  if (from.size() != 2 || from[0] != m.x || from[1] != m.y)
    throw std::invalid_argument("assemble_joint: decision must condition on (X, Y) of the model");
  if (to.size() != 3 || to[0] != m.x1 || to[1] != m.a || to[2].name() != kAuxAxis || to[2].size() != d.u_size)
    throw std::invalid_argument("assemble_joint: decision outputs must be (X1, A, U) of the model");
  return compose(compose(m.source, d.kernel), m.vm_channel);
}

SymbolDecoder bayes_decoder(const JointPmf& j, const DistortionTable& d2, const std::string& u_axis,
                            const std::string& z_axis) {
  const std::string& x_axis = d2.source.name();
  auto xuz = marginalize(j, {x_axis, u_axis, z_axis});
  const int nx = j.axis(x_axis).size(), nu = j.axis(u_axis).size(), nz = j.axis(z_axis).size();
  if (nx != d2.values.rows()) throw std::invalid_argument("bayes_decoder: source alphabet mismatch");
  const int n2 = static_cast<int>(d2.values.cols());
  SymbolDecoder f{nu, nz, std::vector<int>(static_cast<std::size_t>(nu) * nz, 0)};
  for (int u = 0; u < nu; ++u) {
    for (int z = 0; z < nz; ++z) {
      double mass = 0.0;
      for (int x = 0; x < nx; ++x) mass += xuz.values()[(x * nu + u) * nz + z];
      if (!(mass > 0.0)) continue;
      int best = 0;
      double best_risk = std::numeric_limits<double>::infinity();
      for (int r = 0; r < n2; ++r) {
        double risk = 0.0;
        for (int x = 0; x < nx; ++x) risk += xuz.values()[(x * nu + u) * nz + z] * d2.values(x, r);
        if (risk < best_risk) {
          best_risk = risk;
          best = r;
        }
      }
      f.table[static_cast<std::size_t>(u) * nz + z] = best;
    }
  }
  return f;
}

double decoder_distortion(const JointPmf& j, const DistortionTable& d2, const SymbolDecoder& f,
                          const std::string& u_axis, const std::string& z_axis) {
  auto xuz = marginalize(j, {d2.source.name(), u_axis, z_axis});
  const int nx = static_cast<int>(d2.values.rows());
  if (f.u_size != j.axis(u_axis).size() || f.z_size != j.axis(z_axis).size())
    throw std::invalid_argument("decoder_distortion: decoder shape mismatch");
  double total = 0.0;
  for (int x = 0; x < nx; ++x)
    for (int u = 0; u < f.u_size; ++u)
      for (int z = 0; z < f.z_size; ++z)
        total += xuz.values()[(x * f.u_size + u) * f.z_size + z] * d2.values(x, f(u, z));
  return total;
}

RatePoint2 rate_corner(const CascadeVendingModel& m, const CascadeDecision& d) {
  auto j = assemble_joint(m, d);
  const auto& X = m.x.name();
  const auto& Y = m.y.name();
  const auto& Z = m.z.name();
  const auto& A = m.a.name();
  const auto& X1 = m.x1.name();
  RatePoint2 p;
  p.terms.i_x_x1au_given_y = mutual_information(j, {X}, {X1, A, kAuxAxis}, {Y});
  p.terms.i_xy_a = mutual_information(j, {X, Y}, {A});
  p.terms.i_xy_u_given_az = mutual_information(j, {X, Y}, {kAuxAxis}, {A, Z});
  p.r1 = p.terms.i_x_x1au_given_y;
  p.r2 = p.terms.i_xy_a + p.terms.i_xy_u_given_az;
  p.d1 = expected_distortion(j, m.d1, X, X1);
  p.decoder = bayes_decoder(j, m.d2, kAuxAxis, Z);
  p.d2 = decoder_distortion(j, m.d2, p.decoder, kAuxAxis, Z);
  p.gamma = expected_cost(j, m.cost, A);
  p.decision = d;
  return p;
}

// Axis bits of the full tensor (x, y, x1, a, u, z).
namespace {
constexpr AxisMask kX = 1, kY = 2, kX1 = 4, kA = 8, kU = 16, kZ = 32;
enum Marg { kYX1AU, kXYX1AU, kAm, kXYA, kXYAZ, kUAZ, kXYUAZ, kAZ, kXX1, kXUZ, kMargCount };
constexpr AxisMask kMargMasks[kMargCount] = {kY | kX1 | kA | kU, kX | kY | kX1 | kA | kU, kA,
                                             kX | kY | kA,       kX | kY | kA | kZ,       kU | kA | kZ,
                                             kX | kY | kU | kA | kZ, kA | kZ,         kX | kX1,
                                             kX | kU | kZ};
}  // namespace

CascadeEvaluator::CascadeEvaluator(const CascadeVendingModel& m, int u_size)
    : nx_(m.x.size()),
      ny_(m.y.size()),
      nz_(m.z.size()),
      na_(m.a.size()),
      n1_(m.x1.size()),
      nu_(u_size),
      n2_(m.x2.size()) {
  require_valid(m, nullptr);
  if (u_size < 1) throw std::invalid_argument("u_size must be >= 1");
  pxy_.assign(m.source.values().begin(), m.source.values().end());
  pz_.resize(static_cast<std::size_t>(na_) * ny_ * nz_);
  for (int a = 0; a < na_; ++a)
    for (int y = 0; y < ny_; ++y) {
      auto s = m.vm_channel.slice(channel_cell(m, a, y));
      for (int z = 0; z < nz_; ++z) pz_[(a * ny_ + y) * nz_ + z] = s[z];
    }
  for (int x = 0; x < nx_; ++x) {
    for (int r = 0; r < n1_; ++r) d1_.push_back(m.d1.values(x, r));
    for (int r = 0; r < n2_; ++r) d2_.push_back(m.d2.values(x, r));
  }
  cost_.assign(m.cost.values.begin(), m.cost.values.end());
  h_xy_ = plogp(pxy_);
  std::vector<double> py(ny_, 0.0);
  for (int x = 0; x < nx_; ++x)
    for (int y = 0; y < ny_; ++y) py[y] += pxy_[x * ny_ + y];
  h_y_ = plogp(py);

  const std::vector<int> shape{nx_, ny_, n1_, na_, nu_, nz_};
  full_.resize(detail::volume(shape));
  for (AxisMask mask : kMargMasks) {
    maps_.push_back(detail::marginal_map(shape, mask));
    sizes_.push_back(detail::marginal_volume(shape, mask));
    marg_.emplace_back(sizes_.back());
  }
}

CascadeMetrics CascadeEvaluator::operator()(std::span<const double> kernel) const {
  const int outs = n1_ * na_ * nu_;
  std::size_t cell = 0;
  for (int x = 0; x < nx_; ++x)
    for (int y = 0; y < ny_; ++y) {
      const double pxy = pxy_[x * ny_ + y];
      const double* k = kernel.data() + static_cast<std::size_t>(x * ny_ + y) * outs;
      for (int x1 = 0; x1 < n1_; ++x1)
        for (int a = 0; a < na_; ++a) {
          const double* pz = pz_.data() + static_cast<std::size_t>(a * ny_ + y) * nz_;
          for (int u = 0; u < nu_; ++u) {
            const double q = pxy * k[(x1 * na_ + a) * nu_ + u];
            for (int z = 0; z < nz_; ++z) full_[cell++] = q * pz[z];
          }
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
  CascadeMetrics r;
  r.r1 = std::max(0.0, h_xy_ + h[kYX1AU] - h[kXYX1AU] - h_y_);
  const double i_xy_a = std::max(0.0, h_xy_ + h[kAm] - h[kXYA]);
  const double i_xy_u_az = std::max(0.0, h[kXYAZ] + h[kUAZ] - h[kXYUAZ] - h[kAZ]);
  r.r2 = i_xy_a + i_xy_u_az;

  const auto& xx1 = marg_[kXX1];
  for (int i = 0; i < nx_ * n1_; ++i) r.d1 += xx1[i] * d1_[i];
  const auto& pa = marg_[kAm];
  for (int a = 0; a < na_; ++a) r.gamma += pa[a] * cost_[a];
  const auto& xuz = marg_[kXUZ];
  const int uz = nu_ * nz_;
  for (int c = 0; c < uz; ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (int rec = 0; rec < n2_; ++rec) {
      double risk = 0.0;
      for (int x = 0; x < nx_; ++x) risk += xuz[x * uz + c] * d2_[x * n2_ + rec];
      best = std::min(best, risk);
    }
    r.d2 += best;
  }
  return r;
}

namespace {

PointEval scored(const CascadeMetrics& c, double objective, const ConstraintBudget& b) {
  return {objective, {c.d1 - b.d1, c.d2 - b.d2, c.gamma - b.gamma}};
}

}  // namespace

CascadeSearchResult min_weighted_rate(const CascadeVendingModel& m, const ConstraintBudget& budget, Weights2 w,
                                      const SearchConfig& cfg) {
  require_valid(m, &budget);
  if (!(w.w1 >= 0.0 && w.w2 >= 0.0 && w.w1 + w.w2 > 0.0))
    throw std::invalid_argument("weights must be nonnegative with a positive sum");
  const int u = default_u_size(m, cfg);
  CascadeEvaluator eval(m, u);
  const SimplexBlock block = eval.block();
  PointEvaluator f = [eval, w, budget](std::span<const double> k) {
    auto c = eval(k);
    return scored(c, w.w1 * c.r1 + w.w2 * c.r2, budget);
  };
  auto outcome = multistart_minimize(std::span(&block, 1), f, cfg);

  CascadeSearchResult res;
  res.seed = cfg.seed;
  res.u_size = u;
  res.evaluations = outcome.evaluations;
  if (outcome.best) {
    Eigen::ArrayXd v = Eigen::Map<const Eigen::ArrayXd>(outcome.best->x.data(),
                                                       static_cast<Eigen::Index>(outcome.best->x.size()));
    res.point = rate_corner(m, CascadeDecision::from_values(m, u, std::move(v)));
    res.objective = w.w1 * res.point->r1 + w.w2 * res.point->r2;
    res.restart = outcome.best->restart;
  }
  return res;
}

std::vector<std::size_t> lower_convex_envelope(std::span<const std::array<double, 2>> points) {
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a][0] != points[b][0]) return points[a][0] < points[b][0];
    if (points[a][1] != points[b][1]) return points[a][1] < points[b][1];
    return a < b;
  });
  // Pareto filter: strictly decreasing second coordinate.
  std::vector<std::size_t> pareto;
  for (std::size_t i : order)
    if (pareto.empty() || points[i][1] < points[pareto.back()][1]) pareto.push_back(i);
  // Monotone-chain lower hull.
  std::vector<std::size_t> hull;
  for (std::size_t i : pareto) {
    while (hull.size() >= 2) {
      const auto& o = points[hull[hull.size() - 2]];
      const auto& a = points[hull.back()];
      const auto& b = points[i];
      double cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
      if (cross <= 0.0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(i);
  }
  return hull;
}

Frontier trace_frontier(const CascadeVendingModel& m, const ConstraintBudget& budget,
                        std::span<const Weights2> weight_grid, const SearchConfig& cfg) {
  if (weight_grid.empty()) throw std::invalid_argument("trace_frontier: empty weight grid");
  Frontier fr;
  std::vector<CascadeSearchResult> raw;
  for (const auto& w : weight_grid) raw.push_back(min_weighted_rate(m, budget, w, cfg));

  for (std::size_t i = 0; i < weight_grid.size(); ++i) {
    const auto& w = weight_grid[i];
    int pick = -1;
    double best = 0.0, best_sum = 0.0;
    for (std::size_t j = 0; j < raw.size(); ++j) {
      if (!raw[j].point) continue;
      const auto& p = *raw[j].point;
      double obj = w.w1 * p.r1 + w.w2 * p.r2;
      double sum = p.r1 + p.r2;
      if (pick < 0 || obj < best || (obj == best && sum < best_sum)) {
        pick = static_cast<int>(j);
        best = obj;
        best_sum = sum;
      }
    }
    FrontierRow row{w, {}, pick, false};
    if (pick >= 0) {
      row.result = raw[pick];
      row.result.objective = best;
    } else {
      row.result = raw[i];
    }
    fr.rows.push_back(std::move(row));
  }

  std::vector<std::array<double, 2>> pts;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < fr.rows.size(); ++i) {
    if (fr.rows[i].result.point) {
      pts.push_back({fr.rows[i].result.point->r1, fr.rows[i].result.point->r2});
      idx.push_back(i);
    } else {
      fr.failures.push_back(i);
    }
  }
  fr.by_r1 = idx;
  std::stable_sort(fr.by_r1.begin(), fr.by_r1.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = *fr.rows[a].result.point;
    const auto& pb = *fr.rows[b].result.point;
    if (pa.r1 != pb.r1) return pa.r1 < pb.r1;
    return pa.r2 < pb.r2;
  });
  for (std::size_t h : lower_convex_envelope(pts)) {
    fr.envelope.push_back(idx[h]);
    fr.rows[idx[h]].on_envelope = true;
  }
  // rows repeating an envelope point sit on it too
  for (std::size_t k = 0; k < idx.size(); ++k)
    for (std::size_t e : fr.envelope)
      if (pts[k] == std::array<double, 2>{fr.rows[e].result.point->r1, fr.rows[e].result.point->r2})
        fr.rows[idx[k]].on_envelope = true;
  return fr;
}

const char* to_string(Verdict v) {
  return v == Verdict::achievable ? "ACHIEVABLE" : "NOT-FOUND-AT-RESOLUTION";
}

Membership2 membership(const CascadeVendingModel& m, double r1, double r2, const ConstraintBudget& budget,
                       const SearchConfig& cfg) {
  require_valid(m, &budget);
  if (!(r1 >= 0.0 && r2 >= 0.0)) throw std::invalid_argument("membership: rates must be >= 0");
  const int u = default_u_size(m, cfg);
  CascadeEvaluator eval(m, u);
  const SimplexBlock block = eval.block();
  PointEvaluator f = [eval, r1, r2, budget](std::span<const double> k) {
    auto c = eval(k);
    return scored(c, std::max(0.0, c.r1 - r1) + std::max(0.0, c.r2 - r2), budget);
  };
  SearchOptions opt;
  opt.stop_at = 0.0;
  auto outcome = multistart_minimize(std::span(&block, 1), f, cfg, opt);

  Membership2 out;
  if (!outcome.best) {
    out.shortfall = std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::ArrayXd v =
      Eigen::Map<const Eigen::ArrayXd>(outcome.best->x.data(), static_cast<Eigen::Index>(outcome.best->x.size()));
  auto p = rate_corner(m, CascadeDecision::from_values(m, u, std::move(v)));
  out.shortfall = std::max(0.0, p.r1 - r1) + std::max(0.0, p.r2 - r2);
  if (p.r1 <= r1 + kMembershipTol && p.r2 <= r2 + kMembershipTol) {
    out.verdict = Verdict::achievable;
    out.witness = std::move(p);
  }
  return out;
}

}  // namespace vending
