// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails.
//   usage: acceptance <vending-cli> <scratch-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vending/commands.hpp"
#include "vending/fm.hpp"
#include "vending/oracle.hpp"

using namespace vending;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void criterion(const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double hx(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

Outcome fm_golden() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream out;
  const int rc = cli::cmd_fm({}, out);
  const double secs = seconds_since(t0);
  const auto t = fm::project_broadcast();
  const bool four = t.pruned.ineqs.size() == 4;
  return {rc == 0 && four && fm::same_system(t.pruned, fm::golden_broadcast_region()) && secs < 1.0,
          std::to_string(t.pruned.ineqs.size()) + " inequalities, exact match, " + fmt(secs) + " s"};
}

Outcome fm_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto t = fm::project_broadcast();
  const auto r = fm::sample_equivalence(t.pruned, fm::golden_broadcast_region(), 10000, 2024, 10);
  const double secs = seconds_since(t0);
  return {r.disagreements == 0 && r.pmfs >= 10000 && r.triples >= 100000 && secs < 60.0,
          std::to_string(r.disagreements) + " disagreements over " + std::to_string(r.pmfs) + " pmfs x 10 rate triples"};
}

Outcome optimizer_vs_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  GridSpec grid;
  grid.resolution = 4;
  grid.u_size = 2;
  SearchConfig cfg;
  cfg.restarts = 128;
  cfg.u_size = grid.u_size;
  cfg.lattice_resolution = grid.resolution;
  double worst_lo = 0, worst_hi = 0;
  int compared = 0;
  bool ok = true;
  auto check = [&](bool have_o, double o, bool have_s, double s) {
    ++compared;
    if (!have_o || !have_s) {
      ok = ok && !have_o && !have_s;
      return;
    }
    const double d = s - o;
    worst_lo = std::min(worst_lo, d);
    worst_hi = std::max(worst_hi, d);
    ok = ok && d >= -1e-9 && d <= 1e-3;
  };
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = random_binary_cascade(seed);
    for (Weights2 w : {Weights2{1, 1}, Weights2{1, 0.25}, Weights2{0.25, 1}}) {
      const auto o = brute_force_min(c.model, c.budget, w, grid);
      const auto s = min_weighted_rate(c.model, c.budget, w, cfg);
      check(o.point.has_value(), o.objective, s.point.has_value(), s.objective);
    }
    const auto b = random_binary_broadcast(seed);
    for (Weights3 w : {Weights3{1, 1, 1}, Weights3{1, 0.5, 2}, Weights3{0.5, 2, 1}}) {
      const auto o = brute_force_min(b.model, b.budget, w, grid);
      const auto s = min_weighted_rate3(b.model, b.budget, w, cfg);
      check(o.point.has_value(), o.objective, s.point.has_value(), s.objective);
    }
  }
  const double secs = seconds_since(t0);
  return {ok && compared == 30 && secs < 900.0,
          std::to_string(compared) + " comparisons, delta in [" + fmt(worst_lo) + ", " + fmt(worst_hi) + "] bits"};
}

Outcome analytic_corners() {
  // Cascade: D1 = D2 = 0, Hamming, Y independent of X, Z pure noise.
  const double p0 = 0.3;
  CascadeVendingModel m;
  m.x = FiniteAlphabet("X", 2);
  m.y = FiniteAlphabet("Y", 2);
  m.z = FiniteAlphabet("Z", 2);
  m.a = FiniteAlphabet("A", 1);
  m.x1 = FiniteAlphabet("X1", 2);
  m.x2 = FiniteAlphabet("X2", 2);
  Eigen::ArrayXd pxy(4);
  pxy << p0 * 0.6, p0 * 0.4, (1 - p0) * 0.6, (1 - p0) * 0.4;
  m.source = JointPmf({m.x, m.y}, pxy);
  m.vm_channel = CondKernel({m.a, m.y}, {m.z}, Eigen::ArrayXd::Constant(4, 0.5));
  m.d1 = DistortionTable::hamming(m.x, m.x1);
  m.d2 = DistortionTable::hamming(m.x, m.x2);
  m.cost = CostTable::zero(m.a);
  SearchConfig cfg;
  cfg.restarts = 8;
  cfg.u_size = 2;
  const std::vector<Weights2> weights{{1, 1}, {1, 0.5}, {0.5, 1}};
  const Frontier f = trace_frontier(m, {0, 0, 0}, weights, cfg);
  const double h = hx(p0);
  double err = HUGE_VAL;
  for (const auto& row : f.rows)
    if (row.result.point)
      err = std::min(err, std::max(std::abs(row.result.point->r1 - h), std::abs(row.result.point->r2 - h)));
  bool ok = f.failures.empty() && err <= 1e-6;

  // Broadcast: Y = X, one action, lossless X2.
  BroadcastCRModel b;
  b.x = FiniteAlphabet("X", 2);
  b.y = FiniteAlphabet("Y", 2);
  b.a = FiniteAlphabet("A", 1);
  b.x1 = FiniteAlphabet("X1", 2);
  b.x2 = FiniteAlphabet("X2", 2);
  Eigen::ArrayXd px(2), ch(4), act = Eigen::ArrayXd::Ones(2), rec = Eigen::ArrayXd::Zero(8);
  px << p0, 1 - p0;
  ch << 1, 0, 0, 1;
  b.source = JointPmf({b.x}, px);
  b.vm_channel = CondKernel({b.a, b.x}, {b.y}, ch);
  b.d1 = DistortionTable::hamming(b.x, b.x1);
  b.d2 = DistortionTable::hamming(b.x, b.x2);
  b.cost = CostTable::zero(b.a);
  for (int x = 0; x < 2; ++x) rec[x * 4 + x * 2 + x] = 1.0;
  const RatePoint3 p = corner(b, BroadcastDecision::from_values(b, act, rec));
  const double e1 = std::abs(p.bounds.l1b), e2 = std::abs(p.bounds.l2b - h);
  SearchConfig bcfg;
  bcfg.restarts = 8;
  const auto s = min_weighted_rate3(b, {1, 0, 0}, {1, 1, 1}, bcfg);
  const bool found = s.point && std::abs(s.point->bounds.l1b) <= 1e-6 && std::abs(s.point->bounds.l2b - h) <= 1e-6;
  ok = ok && e1 <= 1e-6 && e2 <= 1e-6 && found;
  return {ok, "cascade |(R1,R2) - (H,H)| = " + fmt(err) + ", broadcast |L1b| = " + fmt(e1) + ", |L2b - H| = " +
                  fmt(e2) + (found ? ", optimizer agrees" : ", optimizer disagrees")};
}

struct SuiteSplit {
  Outcome reductions, ladders;
};

SuiteSplit degeneracy() {
  SuiteSplit out{{true, ""}, {true, ""}};
  int nred = 0, nlad = 0;
  for (auto fam : {ModelFamily::cascade, ModelFamily::broadcast}) {
    SuiteOptions o;
    o.seed = 1;
    o.instances = 3;
    o.ladder_steps = 5;
    const SuiteReport r = degeneracy_suite(fam, o);
    for (const auto& c : r.checks) {
      if (c.name.find("action-free") != std::string::npos) {
        ++nred;
        out.reductions.pass = out.reductions.pass && c.pass;
        if (!c.pass) out.reductions.detail += " [" + c.name + ": " + c.detail + "]";
      } else if (c.name.find("ladder") != std::string::npos) {
        ++nlad;
        out.ladders.pass = out.ladders.pass && c.pass;
        if (!c.pass) out.ladders.detail += " [" + c.name + ": " + c.detail + "]";
      }
    }
  }
  out.reductions.pass = out.reductions.pass && nred == 18;
  out.ladders.pass = out.ladders.pass && nlad == 18;
  out.reductions.detail = std::to_string(nred) + " action-free reductions within 1e-3 bits" + out.reductions.detail;
  out.ladders.detail = std::to_string(nlad) + " five-step ladders (D1, D2, Gamma x 3 instances x 2 models)" +
                       out.ladders.detail;
  return out;
}

Outcome invariants() {
  bool ok = true;
  std::string detail;
  for (auto fam : {ModelFamily::cascade, ModelFamily::broadcast}) {
    const SuiteReport r = invariant_suite(fam, 1, 1000);
    ok = ok && r.ok() && !r.checks.empty();
    for (const auto& c : r.checks)
      if (!c.pass) detail += " [" + c.name + ": " + c.detail + "]";
  }
  return {ok, "1000 random decisions per model: Markov, bound ordering, decoder optimality" + detail};
}

Outcome reproducibility(const std::string& cli, const fs::path& dir) {
  fs::create_directories(dir);
  bool same = true;
  std::string detail;
  for (bool cascade : {true, false}) {
    const auto inst_c = random_binary_cascade(2);
    const auto inst_b = random_binary_broadcast(2);
    RunConfig c;
    if (cascade) {
      c.model = inst_c.model;
      c.budget = inst_c.budget;
      c.weights = {{1, 1}, {1, 0.25}, {0.25, 1}};
    } else {
      c.model = inst_b.model;
      c.budget = inst_b.budget;
      c.weights = {{1, 1, 1}, {1, 0.5, 2}};
    }
    c.search.restarts = 3;
    c.search.seed = 42;
    c.search.u_size = 2;
    const std::string tag = cascade ? "cascade" : "broadcast";
    std::string csv[2];
    for (int run = 0; run < 2; ++run) {
      c.csv_path = (dir / (tag + std::to_string(run) + ".csv")).string();
      std::ofstream(dir / (tag + ".json")) << to_json(c).dump(2);
      const std::string cmd = cli + " frontier " + (dir / (tag + ".json")).string();
      const int rc = std::system(cmd.c_str());
      if (rc != 0) {
        same = false;
        detail += " " + tag + " run exited " + std::to_string(rc);
      }
      std::ifstream in(c.csv_path, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      csv[run] = ss.str();
    }
    same = same && !csv[0].empty() && csv[0] == csv[1];
    detail += " " + tag + " " + std::to_string(csv[0].size()) + " bytes" + (csv[0] == csv[1] ? " identical;" : " DIFFER;");
  }
  return {same, "two consecutive CLI runs:" + detail};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <vending-cli> <scratch-dir>\n", argv[0]);
    return 2;
  }
  criterion("fm golden region", fm_golden);
  criterion("fm semantic equivalence", fm_equivalence);
  criterion("optimizer vs oracle", optimizer_vs_oracle);
  criterion("analytic corners", analytic_corners);
  SuiteSplit deg;
  bool ran = false;
  auto run_suite = [&] {
    if (!ran) deg = degeneracy();
    ran = true;
  };
  criterion("degeneration suite", [&] {
    run_suite();
    return deg.reductions;
  });
  criterion("structural invariants", invariants);
  criterion("monotonicity", [&] {
    run_suite();
    return deg.ladders;
  });
  criterion("reproducibility", [&] { return reproducibility(argv[1], argv[2]); });
  std::printf("%s\n", failures == 0 ? "ALL PASS" : (std::to_string(failures) + " FAILED").c_str());
  return failures == 0 ? 0 : 1;
}
