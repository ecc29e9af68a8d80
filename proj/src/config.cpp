#include "vending/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

namespace vending {

namespace {

using nlohmann::json;

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(at(path, key), "missing");
  return *it;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(at(path, it.key()), "unknown field");
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

long long integer(const json& j, const std::string& path) {
  if (j.is_number_integer()) return j.get<long long>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.2e18) return static_cast<long long>(v);
  }
  throw ConfigError(path, "expected an integer");
}

int positive_int(const json& j, const std::string& path) {
  const long long v = integer(j, path);
  if (v < 1 || v > 1000000000) throw ConfigError(path, "expected a positive integer");
  return static_cast<int>(v);
}

void flatten_into(const json& j, const std::vector<int>& shape, std::size_t depth, const std::string& path,
                  std::vector<double>& out) {
  if (depth == shape.size()) {
    out.push_back(number(j, path));
    return;
  }
  if (!j.is_array()) throw ConfigError(path, "expected an array of length " + std::to_string(shape[depth]));
  if (j.size() != static_cast<std::size_t>(shape[depth]))
    throw ConfigError(path, "has length " + std::to_string(j.size()) + ", expected " + std::to_string(shape[depth]));
  for (std::size_t i = 0; i < j.size(); ++i) flatten_into(j[i], shape, depth + 1, idx(path, i), out);
}

Eigen::ArrayXd flatten(const json& j, const std::vector<int>& shape, const std::string& path) {
  std::vector<double> v;
  flatten_into(j, shape, 0, path, v);
  return Eigen::Map<Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json nest(const Eigen::ArrayXd& v, const std::vector<int>& shape, std::size_t depth = 0, std::size_t offset = 0) {
  if (depth + 1 == shape.size()) {
    json a = json::array();
    for (int i = 0; i < shape[depth]; ++i) a.push_back(v[static_cast<Eigen::Index>(offset) + i]);
    return a;
  }
  std::size_t stride = 1;
  for (std::size_t d = depth + 1; d < shape.size(); ++d) stride *= static_cast<std::size_t>(shape[d]);
  json a = json::array();
  for (int i = 0; i < shape[depth]; ++i) a.push_back(nest(v, shape, depth + 1, offset + i * stride));
  return a;
}

// Every block of `outputs` consecutive entries must be a pmf; the message
// names the cell by its nested index.
void check_slices(const Eigen::ArrayXd& v, const std::vector<int>& cell_shape, int outputs, const std::string& path) {
  const Eigen::Index cells = v.size() / outputs;
  for (Eigen::Index c = 0; c < cells; ++c) {
    std::string where = path;
    Eigen::Index rest = c;
    std::vector<Eigen::Index> digits(cell_shape.size());
    for (std::size_t d = cell_shape.size(); d-- > 0;) {
      digits[d] = rest % cell_shape[d];
      rest /= cell_shape[d];
    }
    for (auto d : digits) where += "[" + std::to_string(d) + "]";
    auto s = v.segment(c * outputs, outputs);
    for (Eigen::Index o = 0; o < outputs; ++o)
      if (s[o] < 0.0) throw ConfigError(where + "[" + std::to_string(o) + "]", "negative probability");
    const double sum = s.sum();
    if (std::abs(sum - 1.0) > kNormalizationTol) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", sum);
      throw ConfigError(where, std::string("slice sums to ") + buf + ", not 1");
    }
  }
}

FiniteAlphabet parse_alphabet(const std::string& role, const json& j, const std::string& path) {
  if (j.is_number()) return FiniteAlphabet(role, positive_int(j, path));
  if (j.is_array()) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_string()) throw ConfigError(idx(path, i), "expected a symbol label string");
      labels.push_back(j[i].get<std::string>());
    }
    try {
      return FiniteAlphabet(role, labels);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
  }
  throw ConfigError(path, "expected a size or a list of labels");
}

json alphabet_json(const FiniteAlphabet& a) {
  bool plain = true;
  for (int i = 0; i < a.size(); ++i) plain = plain && a.labels()[i] == std::to_string(i);
  return plain ? json(a.size()) : json(a.labels());
}

DistortionTable parse_distortion(const json& j, const FiniteAlphabet& src, const FiniteAlphabet& rec,
                                 const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() != "hamming") throw ConfigError(path, "unknown distortion '" + j.get<std::string>() + "'");
    return DistortionTable::hamming(src, rec);
  }
  const Eigen::ArrayXd v = flatten(j, {src.size(), rec.size()}, path);
  Eigen::MatrixXd m(src.size(), rec.size());
  for (int i = 0; i < src.size(); ++i)
    for (int k = 0; k < rec.size(); ++k) m(i, k) = v[i * rec.size() + k];
  return {src, rec, m};
}

json distortion_json(const DistortionTable& d) {
  json a = json::array();
  for (Eigen::Index i = 0; i < d.values.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < d.values.cols(); ++k) row.push_back(d.values(i, k));
    a.push_back(row);
  }
  return a;
}

CostTable parse_cost(const json& j, const FiniteAlphabet& a, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() != "zero") throw ConfigError(path, "unknown cost '" + j.get<std::string>() + "'");
    return CostTable::zero(a);
  }
  return {a, flatten(j, {a.size()}, path).matrix()};
}

// p(out | first, second) laid out [first][second][out], whatever the kernel's
// given-axis order.
Eigen::ArrayXd channel_values(const CondKernel& k, const std::string& first) {
  const auto& from = k.from_axes();
  const bool natural = from[0].name() == first;
  const int n0 = natural ? from[0].size() : from[1].size();
  const int n1 = natural ? from[1].size() : from[0].size();
  const int outs = k.outputs();
  Eigen::ArrayXd v(static_cast<Eigen::Index>(n0) * n1 * outs);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      const int cell = natural ? i * from[1].size() + j : j * from[1].size() + i;
      v.segment(static_cast<Eigen::Index>(i * n1 + j) * outs, outs) = k.slice(cell);
    }
  return v;
}

void report_violations(const ValidationReport& r, const std::string& prefix) {
  if (r.ok()) return;
  std::string msg;
  for (std::size_t i = 1; i < r.violations.size(); ++i)
    msg += "; " + at(prefix, r.violations[i].path) + ": " + r.violations[i].message;
  throw ConfigError(at(prefix, r.violations.front().path), r.violations.front().message + msg);
}

ModelSpec parse_model(const json& j) {
  const std::string p = "model";
  const json& type = require(j, "type", p);
  if (!type.is_string()) throw ConfigError("model.type", "expected \"cascade\" or \"broadcast\"");
  const std::string kind = type.get<std::string>();
  const json& al = require(j, "alphabets", p);
  auto alpha = [&](const std::string& role) { return parse_alphabet(role, require(al, role, "model.alphabets"), "model.alphabets." + role); };

  if (kind == "cascade") {
    reject_unknown(j, {"type", "alphabets", "source", "vm_channel", "d1", "d2", "cost"}, p);
    reject_unknown(al, {"X", "Y", "Z", "A", "X1", "X2"}, "model.alphabets");
    CascadeVendingModel m;
    m.x = alpha("X");
    m.y = alpha("Y");
    m.z = alpha("Z");
    m.a = alpha("A");
    m.x1 = alpha("X1");
    m.x2 = alpha("X2");
    m.source = JointPmf::unchecked({m.x, m.y}, flatten(require(j, "source", p), {m.x.size(), m.y.size()}, "model.source"));
    m.vm_channel = CondKernel::unchecked(
        {m.a, m.y}, {m.z},
        flatten(require(j, "vm_channel", p), {m.a.size(), m.y.size(), m.z.size()}, "model.vm_channel"));
    m.d1 = parse_distortion(require(j, "d1", p), m.x, m.x1, "model.d1");
    m.d2 = parse_distortion(require(j, "d2", p), m.x, m.x2, "model.d2");
    m.cost = j.contains("cost") ? parse_cost(j["cost"], m.a, "model.cost") : CostTable::zero(m.a);
    report_violations(validate_model(m), p);
    return m;
  }
  if (kind == "broadcast") {
    reject_unknown(j, {"type", "alphabets", "source", "vm_channel", "d1", "d2", "cost"}, p);
    reject_unknown(al, {"X", "Y", "A", "X1", "X2"}, "model.alphabets");
    BroadcastCRModel m;
    m.x = alpha("X");
    m.y = alpha("Y");
    m.a = alpha("A");
    m.x1 = alpha("X1");
    m.x2 = alpha("X2");
    m.source = JointPmf::unchecked({m.x}, flatten(require(j, "source", p), {m.x.size()}, "model.source"));
    m.vm_channel = CondKernel::unchecked(
        {m.a, m.x}, {m.y},
        flatten(require(j, "vm_channel", p), {m.a.size(), m.x.size(), m.y.size()}, "model.vm_channel"));
    m.d1 = parse_distortion(require(j, "d1", p), m.x, m.x1, "model.d1");
    m.d2 = parse_distortion(require(j, "d2", p), m.x, m.x2, "model.d2");
    m.cost = j.contains("cost") ? parse_cost(j["cost"], m.a, "model.cost") : CostTable::zero(m.a);
    report_violations(validate_model(m), p);
    return m;
  }
  throw ConfigError("model.type", "expected \"cascade\" or \"broadcast\", got \"" + kind + "\"");
}

void parse_search(const json& j, SearchConfig& s) {
  const std::string p = "search";
  if (!j.is_object()) throw ConfigError(p, "expected an object");
  reject_unknown(j,
                 {"restarts", "max_iterations", "seed", "u_size", "u_size_cap", "penalty_start", "penalty_growth",
                  "penalty_rounds", "stall_window", "stall_tol", "initial_step", "min_step", "lattice_resolution",
                  "workers"},
                 p);
  auto pos = [&](const char* k, int& dst) {
    if (j.contains(k)) dst = positive_int(j[k], at(p, k));
  };
  auto nonneg = [&](const char* k, int& dst) {
    if (!j.contains(k)) return;
    const long long v = integer(j[k], at(p, k));
    if (v < 0 || v > 1000000000) throw ConfigError(at(p, k), "expected an integer >= 0");
    dst = static_cast<int>(v);
  };
  auto real = [&](const char* k, double& dst, double lo) {
    if (!j.contains(k)) return;
    const double v = number(j[k], at(p, k));
    if (!(v > lo)) throw ConfigError(at(p, k), "must be > " + std::to_string(lo));
    dst = v;
  };
  pos("restarts", s.restarts);
  pos("max_iterations", s.max_iterations);
  if (j.contains("seed")) {
    const long long v = integer(j["seed"], "search.seed");
    if (v < 0) throw ConfigError("search.seed", "expected an integer >= 0");
    s.seed = static_cast<std::uint64_t>(v);
  }
  nonneg("u_size", s.u_size);
  pos("u_size_cap", s.u_size_cap);
  real("penalty_start", s.penalty_start, 0.0);
  real("penalty_growth", s.penalty_growth, 1.0);
  pos("penalty_rounds", s.penalty_rounds);
  pos("stall_window", s.stall_window);
  real("stall_tol", s.stall_tol, 0.0);
  real("initial_step", s.initial_step, 0.0);
  real("min_step", s.min_step, 0.0);
  nonneg("lattice_resolution", s.lattice_resolution);
  nonneg("workers", s.workers);
}

json search_json(const SearchConfig& s) {
  return {{"restarts", s.restarts},
          {"max_iterations", s.max_iterations},
          {"seed", s.seed},
          {"u_size", s.u_size},
          {"u_size_cap", s.u_size_cap},
          {"penalty_start", s.penalty_start},
          {"penalty_growth", s.penalty_growth},
          {"penalty_rounds", s.penalty_rounds},
          {"stall_window", s.stall_window},
          {"stall_tol", s.stall_tol},
          {"initial_step", s.initial_step},
          {"min_step", s.min_step},
          {"lattice_resolution", s.lattice_resolution},
          {"workers", s.workers}};
}

std::vector<double> parse_tuple(const json& j, std::size_t n, const std::string& path) {
  if (!j.is_array() || j.size() != n) throw ConfigError(path, "expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = number(j[i], idx(path, i));
    if (x < 0.0) throw ConfigError(idx(path, i), "must be >= 0");
    v.push_back(x);
  }
  return v;
}

DecisionSpec parse_decision(const json& j, const ModelSpec& model) {
  const std::string p = "decision";
  if (auto* m = std::get_if<CascadeVendingModel>(&model)) {
    reject_unknown(j, {"u_size", "kernel"}, p);
    const int u = positive_int(require(j, "u_size", p), "decision.u_size");
    const int outs = m->x1.size() * m->a.size() * u;
    Eigen::ArrayXd k = flatten(require(j, "kernel", p), {m->x.size(), m->y.size(), m->x1.size(), m->a.size(), u},
                               "decision.kernel");
    check_slices(k, {m->x.size(), m->y.size()}, outs, "decision.kernel");
    return CascadeDecision::from_values(*m, u, std::move(k));
  }
  const auto& m = std::get<BroadcastCRModel>(model);
  reject_unknown(j, {"action", "recon"}, p);
  Eigen::ArrayXd act = flatten(require(j, "action", p), {m.x.size(), m.a.size()}, "decision.action");
  check_slices(act, {m.x.size()}, m.a.size(), "decision.action");
  Eigen::ArrayXd rec = flatten(require(j, "recon", p), {m.x.size(), m.x1.size(), m.x2.size()}, "decision.recon");
  check_slices(rec, {m.x.size()}, m.x1.size() * m.x2.size(), "decision.recon");
  return BroadcastDecision::from_values(m, std::move(act), std::move(rec));
}

void parse_oracle(const json& j, GridSpec& g) {
  const std::string p = "oracle";
  if (!j.is_object()) throw ConfigError(p, "expected an object");
  reject_unknown(j, {"resolution", "u_size", "guard", "method"}, p);
  if (j.contains("resolution")) g.resolution = positive_int(j["resolution"], "oracle.resolution");
  if (j.contains("u_size")) g.u_size = positive_int(j["u_size"], "oracle.u_size");
  if (j.contains("guard")) {
    const double v = number(j["guard"], "oracle.guard");
    if (v < 1.0 || v > 1.8e19) throw ConfigError("oracle.guard", "expected a count >= 1");
    g.guard = static_cast<std::uint64_t>(v);
  }
  if (j.contains("method")) {
    const auto& v = j["method"];
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "auto") g.method = OracleMethod::automatic;
    else if (s == "full") g.method = OracleMethod::full;
    else if (s == "decomposed") g.method = OracleMethod::decomposed;
    else throw ConfigError("oracle.method", "expected \"auto\", \"full\" or \"decomposed\"");
  }
}

const char* method_name(OracleMethod m) {
  switch (m) {
    case OracleMethod::full: return "full";
    case OracleMethod::decomposed: return "decomposed";
    default: return "auto";
  }
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* b = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 1099511628211ull;
  }
}

void fnv_values(std::uint64_t& h, const Eigen::ArrayXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v[i] == 0.0 ? 0.0 : v[i];  // fold -0
    fnv(h, &x, sizeof x);
  }
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  reject_unknown(j, {"schema_version", "model", "budget", "search", "weights", "decision", "rates", "oracle", "output"},
                 "");
  RunConfig c;
  const long long v = integer(require(j, "schema_version", ""), "schema_version");
  if (v != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(v) + ", expected " +
                                            std::to_string(kSchemaVersion));
  c.model = parse_model(require(j, "model", ""));
  const std::size_t arity = c.is_cascade() ? 2 : 3;

  if (j.contains("budget")) {
    const json& b = j["budget"];
    if (!b.is_object()) throw ConfigError("budget", "expected an object");
    reject_unknown(b, {"D1", "D2", "Gamma"}, "budget");
    ConstraintBudget cb{number(require(b, "D1", "budget"), "budget.D1"), number(require(b, "D2", "budget"), "budget.D2"),
                        number(require(b, "Gamma", "budget"), "budget.Gamma")};
    report_violations(validate_budget(cb), "");
    c.budget = cb;
  }
  if (j.contains("search")) parse_search(j["search"], c.search);
  if (j.contains("weights")) {
    const json& w = j["weights"];
    if (!w.is_array()) throw ConfigError("weights", "expected an array of weight vectors");
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto t = parse_tuple(w[i], arity, idx("weights", i));
      double sum = 0.0;
      for (double x : t) sum += x;
      if (!(sum > 0.0)) throw ConfigError(idx("weights", i), "weights must have a positive sum");
      c.weights.push_back(std::move(t));
    }
  }
  if (j.contains("decision")) c.decision = parse_decision(j["decision"], c.model);
  if (j.contains("rates")) c.rates = parse_tuple(j["rates"], arity, "rates");
  if (j.contains("oracle")) parse_oracle(j["oracle"], c.oracle);
  if (j.contains("output")) {
    const json& o = j["output"];
    if (!o.is_object()) throw ConfigError("output", "expected an object");
    reject_unknown(o, {"csv", "witnesses"}, "output");
    if (o.contains("csv")) {
      if (!o["csv"].is_string()) throw ConfigError("output.csv", "expected a path string");
      c.csv_path = o["csv"].get<std::string>();
    }
    if (o.contains("witnesses")) {
      if (!o["witnesses"].is_string()) throw ConfigError("output.witnesses", "expected a path string");
      c.witness_path = o["witnesses"].get<std::string>();
    }
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  // "model": "other.json" pulls the model object from a file next to the config
  if (j.is_object() && j.contains("model") && j["model"].is_string()) {
    const auto ref = std::filesystem::path(path).parent_path() / j["model"].get<std::string>();
    std::ifstream mf(ref);
    if (!mf) throw ConfigError("model", "cannot open model file '" + ref.string() + "'");
    try {
      j["model"] = json::parse(mf);
    } catch (const json::parse_error& e) {
      throw ConfigError("model", "invalid JSON in '" + ref.string() + "': " + e.what());
    }
  }
  return parse_config(j);
}

json decision_json(const CascadeDecision& d, const CascadeVendingModel& m) {
  return {{"u_size", d.u_size},
          {"kernel", nest(d.kernel.values(), {m.x.size(), m.y.size(), m.x1.size(), m.a.size(), d.u_size})}};
}

json decision_json(const BroadcastDecision& d, const BroadcastCRModel& m) {
  return {{"action", nest(d.action.values(), {m.x.size(), m.a.size()})},
          {"recon", nest(d.recon.values(), {m.x.size(), m.x1.size(), m.x2.size()})}};
}

json to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  if (const auto* m = std::get_if<CascadeVendingModel>(&c.model)) {
    j["model"] = {{"type", "cascade"},
                  {"alphabets",
                   {{"X", alphabet_json(m->x)},
                    {"Y", alphabet_json(m->y)},
                    {"Z", alphabet_json(m->z)},
                    {"A", alphabet_json(m->a)},
                    {"X1", alphabet_json(m->x1)},
                    {"X2", alphabet_json(m->x2)}}},
                  {"source", nest(m->source.values(), {m->x.size(), m->y.size()})},
                  {"vm_channel", nest(channel_values(m->vm_channel, m->a.name()), {m->a.size(), m->y.size(), m->z.size()})},
                  {"d1", distortion_json(m->d1)},
                  {"d2", distortion_json(m->d2)},
                  {"cost", nest(m->cost.values.array(), {m->a.size()})}};
  } else {
    const auto& b = std::get<BroadcastCRModel>(c.model);
    j["model"] = {{"type", "broadcast"},
                  {"alphabets",
                   {{"X", alphabet_json(b.x)},
                    {"Y", alphabet_json(b.y)},
                    {"A", alphabet_json(b.a)},
                    {"X1", alphabet_json(b.x1)},
                    {"X2", alphabet_json(b.x2)}}},
                  {"source", nest(b.source.values(), {b.x.size()})},
                  {"vm_channel", nest(channel_values(b.vm_channel, b.a.name()), {b.a.size(), b.x.size(), b.y.size()})},
                  {"d1", distortion_json(b.d1)},
                  {"d2", distortion_json(b.d2)},
                  {"cost", nest(b.cost.values.array(), {b.a.size()})}};
  }
  if (c.budget) j["budget"] = {{"D1", c.budget->d1}, {"D2", c.budget->d2}, {"Gamma", c.budget->gamma}};
  j["search"] = search_json(c.search);
  if (!c.weights.empty()) j["weights"] = c.weights;
  if (c.decision) {
    if (const auto* d = std::get_if<CascadeDecision>(&*c.decision))
      j["decision"] = decision_json(*d, std::get<CascadeVendingModel>(c.model));
    else
      j["decision"] = decision_json(std::get<BroadcastDecision>(*c.decision), std::get<BroadcastCRModel>(c.model));
  }
  if (c.rates) j["rates"] = *c.rates;
  j["oracle"] = {{"resolution", c.oracle.resolution},
                 {"u_size", c.oracle.u_size},
                 {"guard", c.oracle.guard},
                 {"method", method_name(c.oracle.method)}};
  if (!c.csv_path.empty() || !c.witness_path.empty()) {
    j["output"] = json::object();
    if (!c.csv_path.empty()) j["output"]["csv"] = c.csv_path;
    if (!c.witness_path.empty()) j["output"]["witnesses"] = c.witness_path;
  }
  return j;
}

std::string witness_hash(const CascadeDecision& d) {
  std::uint64_t h = 14695981039346656037ull;
  fnv(h, &d.u_size, sizeof d.u_size);
  fnv_values(h, d.kernel.values());
  return hex(h);
}

std::string witness_hash(const BroadcastDecision& d) {
  std::uint64_t h = 14695981039346656037ull;
  fnv_values(h, d.action.values());
  fnv_values(h, d.recon.values());
  return hex(h);
}

}  // namespace vending
