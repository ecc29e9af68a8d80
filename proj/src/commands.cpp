#include "vending/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vending/fm.hpp"

namespace vending::cli {

namespace {

std::string g9(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

const ConstraintBudget& need_budget(const RunConfig& c) {
  if (!c.budget) throw ConfigError("budget", "missing (required by this command)");
  return *c.budget;
}

std::vector<std::vector<double>> weights_of(const RunConfig& c) {
  return c.weights.empty() ? default_weights(c.is_cascade()) : c.weights;
}

std::string budget_status(const ConstraintBudget& b, double d1, double d2, double gamma) {
  std::string s;
  auto check = [&](const char* name, double v, double cap) {
    if (v - cap > 1e-12) s += std::string(s.empty() ? "" : ", ") + name + " " + g9(v) + " > " + g9(cap);
  };
  check("D1", d1, b.d1);
  check("D2", d2, b.d2);
  check("Gamma", gamma, b.gamma);
  return s;
}

bool write_text(const std::string& path, const std::string& text, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "error: cannot write '" << path << "'\n";
    return false;
  }
  f << text;
  return static_cast<bool>(f);
}

}  // namespace

std::vector<std::vector<double>> default_weights(bool cascade) {
  std::vector<std::vector<double>> w;
  if (cascade) {
    for (int i = 0; i <= 10; ++i) w.push_back({i / 10.0, 1.0 - i / 10.0});
  } else {
    w = {{1, 1, 1}, {2, 1, 1}, {1, 2, 1}, {1, 1, 2}, {2, 2, 1}, {2, 1, 2}, {1, 2, 2}};
  }
  return w;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
  if (!c.decision) throw ConfigError("decision", "missing (eval needs an explicit decision kernel)");
  double d1 = 0, d2 = 0, gamma = 0;
  if (const auto* m = std::get_if<CascadeVendingModel>(&c.model)) {
    const auto& d = std::get<CascadeDecision>(*c.decision);
    const RatePoint2 p = rate_corner(*m, d);
    out << "model cascade, |U| = " << d.u_size << "\n";
    out << "R1 = " << g9(p.r1) << "\n";
    out << "  I(X;X1,A,U|Y) = " << g9(p.terms.i_x_x1au_given_y) << "\n";
    out << "R2 = " << g9(p.r2) << "\n";
    out << "  I(X,Y;A) = " << g9(p.terms.i_xy_a) << "\n";
    out << "  I(X,Y;U|A,Z) = " << g9(p.terms.i_xy_u_given_az) << "\n";
    out << "D1 = " << g9(p.d1) << "\nD2 = " << g9(p.d2) << "\nGamma = " << g9(p.gamma) << "\n";
    out << "decoder X2 = f(U,Z):";
    for (int u = 0; u < p.decoder.u_size; ++u)
      for (int z = 0; z < p.decoder.z_size; ++z)
        out << " f(" << u << "," << m->z.labels()[z] << ")=" << m->x2.labels()[p.decoder(u, z)];
    out << "\n";
    d1 = p.d1;
    d2 = p.d2;
    gamma = p.gamma;
  } else {
    const auto& bm = std::get<BroadcastCRModel>(c.model);
    const RatePoint3 p = corner(bm, std::get<BroadcastDecision>(*c.decision));
    out << "model broadcast\n";
    out << "Rb >= " << g9(p.bounds.lb) << "\n";
    out << "R1 + Rb >= " << g9(p.bounds.l1b) << "\n";
    out << "R2 + Rb >= " << g9(p.bounds.l2b) << "\n";
    out << "R1 + R2 + Rb >= " << g9(p.bounds.l12b) << "\n";
    out << "  I(X;A) = " << g9(p.terms.i_x_a) << "\n";
    out << "  I(X;X1,X2|A,Y) = " << g9(p.terms.i_x_x1x2_given_ay) << "\n";
    out << "  I(X;X2|A) = " << g9(p.terms.i_x_x2_given_a) << "\n";
    out << "  I(X;X2|A,Y) = " << g9(p.terms.i_x_x2_given_ay) << "\n";
    out << "  I(X;X1|A,Y,X2) = " << g9(p.terms.i_x_x1_given_ayx2) << "\n";
    out << "D1 = " << g9(p.d1) << "\nD2 = " << g9(p.d2) << "\nGamma = " << g9(p.gamma) << "\n";
    if (!c.weights.empty()) {
      const auto& w = c.weights.front();
      const RateTriple r = optimal_rate_triple(p.bounds, {w[0], w[1], w[2]});
      out << "weight-optimal (R1, R2, Rb) = (" << g9(r.r1) << ", " << g9(r.r2) << ", " << g9(r.rb) << ")\n";
    }
    d1 = p.d1;
    d2 = p.d2;
    gamma = p.gamma;
  }
  if (c.budget) {
    const std::string v = budget_status(*c.budget, d1, d2, gamma);
    out << "budget: " << (v.empty() ? "satisfied" : "violated (" + v + ")") << "\n";
    if (!v.empty()) return kExitInfeasible;
  }
  return kExitOk;
}

std::string frontier_csv(const RunConfig& c, int& status) {
  const ConstraintBudget& budget = need_budget(c);
  const auto weights = weights_of(c);
  std::ostringstream csv;
  nlohmann::json witnesses = nlohmann::json::object();
  std::size_t ok = 0;

  if (const auto* m = std::get_if<CascadeVendingModel>(&c.model)) {
    std::vector<Weights2> grid;
    for (const auto& w : weights) grid.push_back({w[0], w[1]});
    const Frontier f = trace_frontier(*m, budget, grid, c.search);
    std::vector<std::size_t> order(f.rows.size());
    std::iota(order.begin(), order.end(), 0);
    auto r1 = [&](std::size_t i) { return f.rows[i].result.point ? f.rows[i].result.point->r1 : HUGE_VAL; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (f.rows[a].weights != f.rows[b].weights) return f.rows[a].weights < f.rows[b].weights;
      return r1(a) < r1(b);
    });
    csv << "w1,w2,R1,R2,D1,D2,Gamma,objective,seed,restart,source_row,witness,status,on_envelope\n";
    for (std::size_t i : order) {
      const auto& row = f.rows[i];
      csv << g9(row.weights.w1) << "," << g9(row.weights.w2) << ",";
      if (const auto& p = row.result.point) {
        const std::string h = witness_hash(p->decision);
        witnesses[h] = decision_json(p->decision, *m);
        csv << g9(p->r1) << "," << g9(p->r2) << "," << g9(p->d1) << "," << g9(p->d2) << "," << g9(p->gamma) << ","
            << g9(row.result.objective) << "," << row.result.seed << "," << row.result.restart << ","
            << row.source_weight << "," << h << ",ok," << (row.on_envelope ? 1 : 0) << "\n";
        ++ok;
      } else {
        csv << ",,,,,," << row.result.seed << ",,,," << to_string(Verdict::not_found_at_resolution) << ",0\n";
      }
    }
  } else {
    const auto& bm = std::get<BroadcastCRModel>(c.model);
    std::vector<Weights3> grid;
    for (const auto& w : weights) grid.push_back({w[0], w[1], w[2]});
    const Surface s = trace_surface3(bm, budget, grid, c.search);
    std::vector<std::size_t> order(s.rows.size());
    std::iota(order.begin(), order.end(), 0);
    auto r1 = [&](std::size_t i) { return s.rows[i].result.point ? s.rows[i].result.point->rates.r1 : HUGE_VAL; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (s.rows[a].weights != s.rows[b].weights) return s.rows[a].weights < s.rows[b].weights;
      return r1(a) < r1(b);
    });
    csv << "w1,w2,wb,R1,R2,Rb,D1,D2,Gamma,objective,seed,restart,source_row,witness,status,on_envelope\n";
    for (std::size_t i : order) {
      const auto& row = s.rows[i];
      csv << g9(row.weights.w1) << "," << g9(row.weights.w2) << "," << g9(row.weights.wb) << ",";
      if (const auto& p = row.result.point) {
        const std::string h = witness_hash(p->decision);
        witnesses[h] = decision_json(p->decision, bm);
        csv << g9(p->rates.r1) << "," << g9(p->rates.r2) << "," << g9(p->rates.rb) << "," << g9(p->d1) << ","
            << g9(p->d2) << "," << g9(p->gamma) << "," << g9(row.result.objective) << "," << row.result.seed << ","
            << row.result.restart << "," << row.source_weight << "," << h << ",ok," << (row.on_envelope ? 1 : 0)
            << "\n";
        ++ok;
      } else {
        csv << ",,,,,,," << row.result.seed << ",,,," << to_string(Verdict::not_found_at_resolution) << ",0\n";
      }
    }
  }
  if (!c.witness_path.empty()) {
    std::ostringstream err;
    if (!write_text(c.witness_path, witnesses.dump(2) + "\n", err)) throw ConfigError("output.witnesses", err.str());
  }
  status = ok == 0 ? kExitInfeasible : kExitOk;
  return csv.str();
}

int cmd_frontier(const RunConfig& c, std::ostream& out) {
  int status = kExitOk;
  const std::string csv = frontier_csv(c, status);
  if (c.csv_path.empty()) {
    out << csv;
  } else if (!write_text(c.csv_path, csv, out)) {
    return kExitConfig;
  }
  return status;
}

int cmd_membership(const RunConfig& c, std::ostream& out) {
  const ConstraintBudget& budget = need_budget(c);
  if (!c.rates) throw ConfigError("rates", "missing (membership needs a rate point)");
  const auto& r = *c.rates;
  Verdict v;
  if (const auto* m = std::get_if<CascadeVendingModel>(&c.model)) {
    const Membership2 res = membership(*m, r[0], r[1], budget, c.search);
    v = res.verdict;
    out << "(R1, R2) = (" << g9(r[0]) << ", " << g9(r[1]) << "): " << to_string(v) << "\n";
    if (res.witness) {
      out << "witness corner (" << g9(res.witness->r1) << ", " << g9(res.witness->r2) << "), D1 = "
          << g9(res.witness->d1) << ", D2 = " << g9(res.witness->d2) << ", Gamma = " << g9(res.witness->gamma)
          << ", witness " << witness_hash(res.witness->decision) << "\n";
      out << decision_json(res.witness->decision, *m).dump() << "\n";
    } else {
      out << "smallest rate excess found: " << g9(res.shortfall) << "\n";
    }
  } else {
    const auto& bm = std::get<BroadcastCRModel>(c.model);
    const Membership3 res = membership3(bm, {r[0], r[1], r[2]}, budget, c.search);
    v = res.verdict;
    out << "(R1, R2, Rb) = (" << g9(r[0]) << ", " << g9(r[1]) << ", " << g9(r[2]) << "): " << to_string(v) << "\n";
    if (res.witness) {
      const auto& b = res.witness->bounds;
      out << "witness bounds Lb = " << g9(b.lb) << ", L1b = " << g9(b.l1b) << ", L2b = " << g9(b.l2b)
          << ", L12b = " << g9(b.l12b) << ", D1 = " << g9(res.witness->d1) << ", D2 = " << g9(res.witness->d2)
          << ", Gamma = " << g9(res.witness->gamma) << ", witness " << witness_hash(res.witness->decision) << "\n";
      out << decision_json(res.witness->decision, bm).dump() << "\n";
    } else {
      out << "smallest bound shortfall found: " << g9(res.shortfall) << "\n";
    }
  }
  return v == Verdict::achievable ? kExitOk : kExitInfeasible;
}

int cmd_fm(const FmCommand& opt, std::ostream& out) {
  fm::ProjectionOptions po;
  po.order = opt.order;
  po.drop_nonneg = opt.drop_nonneg;
  const fm::ProjectionTrace t = fm::project_broadcast(po);
  const fm::IneqSystem golden = fm::golden_broadcast_region();
  out << fm::format_system(t.pruned);
  if (fm::same_system(t.pruned, golden)) {
    out << "# matches the built-in golden region (" << golden.ineqs.size() << " inequalities)\n";
    return kExitOk;
  }
  out << "# MISMATCH against the built-in golden region\n";
  const fm::IneqSystem a = fm::normalized(t.pruned), b = fm::normalized(golden);
  for (const auto& q : b.ineqs)
    if (std::find(a.ineqs.begin(), a.ineqs.end(), q) == a.ineqs.end()) out << "- " << fm::format_ineq(b, q) << "\n";
  for (const auto& q : a.ineqs)
    if (std::find(b.ineqs.begin(), b.ineqs.end(), q) == b.ineqs.end()) out << "+ " << fm::format_ineq(a, q) << "\n";
  return kExitMismatch;
}

int cmd_oracle(const RunConfig& c, std::ostream& out) {
  const ConstraintBudget& budget = need_budget(c);
  const auto weights = weights_of(c);
  const GridSpec& grid = c.oracle;
  SearchConfig cfg = c.search;
  cfg.lattice_resolution = grid.resolution;
  cfg.u_size = grid.u_size;

  bool all_pass = true;
  out << "oracle resolution K = " << grid.resolution;
  if (c.is_cascade()) out << ", |U| = " << grid.u_size;
  out << "; window [-1e-09, +0.001] bits\n";
  for (const auto& w : weights) {
    std::optional<double> oracle_obj, opt_obj;
    std::string label;
    if (const auto* m = std::get_if<CascadeVendingModel>(&c.model)) {
      const Weights2 ww{w[0], w[1]};
      const auto o = brute_force_min(*m, budget, ww, grid);
      if (o.point) oracle_obj = o.objective;
      const auto s = min_weighted_rate(*m, budget, ww, cfg);
      if (s.point) opt_obj = s.objective;
      label = "w = (" + g9(w[0]) + ", " + g9(w[1]) + ")";
    } else {
      const auto& bm = std::get<BroadcastCRModel>(c.model);
      const Weights3 ww{w[0], w[1], w[2]};
      const auto o = brute_force_min(bm, budget, ww, grid);
      if (o.point) oracle_obj = o.objective;
      const auto s = min_weighted_rate3(bm, budget, ww, cfg);
      if (s.point) opt_obj = s.objective;
      label = "w = (" + g9(w[0]) + ", " + g9(w[1]) + ", " + g9(w[2]) + ")";
    }
    bool pass;
    out << label << ": oracle " << (oracle_obj ? g9(*oracle_obj) : "infeasible") << ", optimizer "
        << (opt_obj ? g9(*opt_obj) : "not found");
    if (oracle_obj && opt_obj) {
      const double delta = *opt_obj - *oracle_obj;
      pass = delta >= -1e-9 && delta <= 1e-3;
      out << ", delta " << g9(delta);
    } else {
      pass = !oracle_obj && !opt_obj;
    }
    out << (pass ? " PASS" : " FAIL") << "\n";
    all_pass = all_pass && pass;
  }
  out << (all_pass ? "PASS" : "FAIL") << "\n";
  return all_pass ? kExitOk : kExitMismatch;
}

int cmd_suite(const SuiteCommand& opt, std::ostream& out) {
  bool ok = true;
  for (auto family : opt.families) {
    SuiteOptions so;
    so.seed = opt.seed;
    so.instances = opt.instances;
    so.grid = opt.grid;
    const SuiteReport deg = degeneracy_suite(family, so);
    const SuiteReport inv = invariant_suite(family, opt.seed, opt.decisions);
    out << deg.to_string() << inv.to_string();
    ok = ok && deg.ok() && inv.ok();
  }
  out << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitMismatch;
}

}  // namespace vending::cli
