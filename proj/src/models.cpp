#include "vending/models.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vending {

DistortionTable DistortionTable::hamming(const FiniteAlphabet& source, const FiniteAlphabet& recon) {
  Eigen::MatrixXd v(source.size(), recon.size());
  for (int i = 0; i < source.size(); ++i)
    for (int j = 0; j < recon.size(); ++j) v(i, j) = (i == j) ? 0.0 : 1.0;
  return {source, recon, v};
}

CostTable CostTable::zero(const FiniteAlphabet& action) {
  return {action, Eigen::VectorXd::Zero(action.size())};
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.path << ": " << v.message << '\n';
  return os.str();
}

namespace {

std::string names_of(const std::vector<FiniteAlphabet>& axes) {
  std::string s;
  for (const auto& a : axes) s += (s.empty() ? "" : ",") + a.name();
  return s;
}

void check_axes(ValidationReport& r, const std::string& path, const std::vector<FiniteAlphabet>& got,
                const std::vector<FiniteAlphabet>& want, bool as_set) {
  bool match = got.size() == want.size();
  if (match) {
    if (as_set) {
      std::set<std::string> g, w;
      for (const auto& a : got) g.insert(a.name());
      for (const auto& a : want) w.insert(a.name());
      match = g == w;
    } else {
      for (std::size_t i = 0; i < got.size(); ++i) match = match && got[i].name() == want[i].name();
    }
  }
  if (!match) {
    r.violations.push_back({path, "axes are {" + names_of(got) + "}, expected {" + names_of(want) + "}"});
    return;
  }
  for (const auto& g : got)
    for (const auto& w : want)
      if (g.name() == w.name() && g.size() != w.size())
        r.violations.push_back({path, "axis '" + g.name() + "' has size " + std::to_string(g.size()) +
                                          ", model alphabet has " + std::to_string(w.size())});
}

// Prefixes each kernel issue ("slice 3 ...") with the field path.
void check_kernel(ValidationReport& r, const std::string& path, const CondKernel& k) {
  for (const auto& issue : k.check()) r.violations.push_back({path, issue});
}

void check_table(ValidationReport& r, const std::string& path, const DistortionTable& t,
                 const FiniteAlphabet& src, const FiniteAlphabet& rec) {
  if (t.values.rows() != src.size() || t.values.cols() != rec.size()) {
    r.violations.push_back({path, "shape " + std::to_string(t.values.rows()) + "x" +
                                      std::to_string(t.values.cols()) + ", expected " +
                                      std::to_string(src.size()) + "x" + std::to_string(rec.size())});
    return;
  }
  for (Eigen::Index i = 0; i < t.values.rows(); ++i)
    for (Eigen::Index j = 0; j < t.values.cols(); ++j) {
      double v = t.values(i, j);
      if (!std::isfinite(v) || v < 0.0)
        r.violations.push_back({path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                "distortion " + std::to_string(v) + " outside [0, D_max]"});
    }
}

void check_cost(ValidationReport& r, const std::string& path, const CostTable& c, const FiniteAlphabet& a) {
  if (c.values.size() != a.size()) {
    r.violations.push_back({path, "length " + std::to_string(c.values.size()) + ", expected " +
                                      std::to_string(a.size())});
    return;
  }
  for (Eigen::Index i = 0; i < c.values.size(); ++i)
    if (!std::isfinite(c.values[i]) || c.values[i] < 0.0)
      r.violations.push_back({path + "[" + std::to_string(i) + "]",
                              "cost " + std::to_string(c.values[i]) + " outside [0, Lambda_max]"});
}

void check_distinct(ValidationReport& r, const std::vector<const FiniteAlphabet*>& alphabets) {
  std::set<std::string> seen;
  for (const auto* a : alphabets)
    if (!seen.insert(a->name()).second)
      r.violations.push_back({"alphabets." + a->name(), "alphabet name used twice"});
}

void check_source(ValidationReport& r, const JointPmf& source, const std::vector<FiniteAlphabet>& want) {
  check_axes(r, "source", source.axes(), want, false);
  for (const auto& issue : source.check()) r.violations.push_back({"source", issue});
}

}  // namespace

ValidationReport validate_model(const CascadeVendingModel& m) {
  ValidationReport r;
  check_distinct(r, {&m.x, &m.y, &m.z, &m.a, &m.x1, &m.x2});
  check_source(r, m.source, {m.x, m.y});
  check_axes(r, "vm_channel.given", m.vm_channel.from_axes(), {m.a, m.y}, true);
  check_axes(r, "vm_channel.output", m.vm_channel.to_axes(), {m.z}, false);
  check_kernel(r, "vm_channel", m.vm_channel);
  check_table(r, "d1", m.d1, m.x, m.x1);
  check_table(r, "d2", m.d2, m.x, m.x2);
  check_cost(r, "cost", m.cost, m.a);
  return r;
}

ValidationReport validate_model(const BroadcastCRModel& m) {
  ValidationReport r;
  check_distinct(r, {&m.x, &m.y, &m.a, &m.x1, &m.x2});
  check_source(r, m.source, {m.x});
  check_axes(r, "vm_channel.given", m.vm_channel.from_axes(), {m.a, m.x}, true);
  check_axes(r, "vm_channel.output", m.vm_channel.to_axes(), {m.y}, false);
  check_kernel(r, "vm_channel", m.vm_channel);
  check_table(r, "d1", m.d1, m.x, m.x1);
  check_table(r, "d2", m.d2, m.x, m.x2);
  check_cost(r, "cost", m.cost, m.a);
  return r;
}

ValidationReport validate_budget(const ConstraintBudget& b) {
  ValidationReport r;
  auto check = [&](const char* path, double v) {
    if (!std::isfinite(v) || v < 0.0) r.violations.push_back({path, "budget must be a finite value >= 0"});
  };
  check("budget.D1", b.d1);
  check("budget.D2", b.d2);
  check("budget.Gamma", b.gamma);
  return r;
}

double expected_distortion(const JointPmf& j, const DistortionTable& table, const std::string& source_axis,
                           const std::string& recon_axis) {
  const auto& sa = j.axis(source_axis);
  const auto& ra = j.axis(recon_axis);
  if (sa.size() != table.values.rows() || ra.size() != table.values.cols())
    throw std::invalid_argument("expected_distortion: alphabet mismatch between joint and table");
  auto pair = marginalize(j, {source_axis, recon_axis});
  double total = 0.0;
  for (int s = 0; s < sa.size(); ++s)
    for (int r = 0; r < ra.size(); ++r) total += pair.values()[s * ra.size() + r] * table.values(s, r);
  return total;
}

double expected_cost(const JointPmf& j, const CostTable& cost, const std::string& action_axis) {
  const auto& aa = j.axis(action_axis);
  if (aa.size() != cost.values.size())
    throw std::invalid_argument("expected_cost: alphabet mismatch between joint and cost table");
  auto pa = marginalize(j, {action_axis});
  return pa.values().matrix().dot(cost.values);
}

}  // namespace vending
