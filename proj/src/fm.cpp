#include "vending/fm.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

namespace vending::fm {

const std::vector<std::string> kSplitRates = {"r0b", "r0d", "r1b", "r1d", "r2b", "r2d"};

namespace {

using boost::multiprecision::cpp_int;

bool lex_less(const RationalVector& a, const RationalVector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

bool is_zero(const RationalVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0) return false;
  return true;
}

// Positive rescaling to coprime integers.
void canonicalize_in_place(RationalVector& v) {
  cpp_int l = 1;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0) l = boost::multiprecision::lcm(l, cpp_int(boost::multiprecision::denominator(v[i])));
  cpp_int g = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] == 0) continue;
    cpp_int n = boost::multiprecision::numerator(v[i]) * (l / boost::multiprecision::denominator(v[i]));
    g = boost::multiprecision::gcd(g, n < 0 ? cpp_int(-n) : n);
  }
  if (g == 0) return;
  const Rational scale(l, g);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] *= scale;
}

RationalVector drop_column(const RationalVector& v, Eigen::Index col) {
  RationalVector out(v.size() - 1);
  for (Eigen::Index i = 0, k = 0; i < v.size(); ++i)
    if (i != col) out[k++] = v[i];
  return out;
}

void sort_unique(std::vector<RationalVector>& rows) {
  std::sort(rows.begin(), rows.end(), lex_less);
  rows.erase(std::unique(rows.begin(), rows.end(), [](const RationalVector& a, const RationalVector& b) { return a == b; }),
             rows.end());
}

// One Fourier-Motzkin step on homogeneous rows sum_i v_i x_i >= 0, removing
// column `col`.
std::vector<RationalVector> fm_step(const std::vector<RationalVector>& rows, Eigen::Index col) {
  std::vector<const RationalVector*> pos, neg;
  std::vector<RationalVector> out;
  for (const auto& r : rows) {
    if (r[col] > 0) pos.push_back(&r);
    else if (r[col] < 0) neg.push_back(&r);
    else out.push_back(drop_column(r, col));
  }
  for (const auto* p : pos) {
    for (const auto* n : neg) {
      const Rational cp = (*p)[col];
      const Rational cn = -(*n)[col];
      RationalVector comb(p->size());
      for (Eigen::Index i = 0; i < comb.size(); ++i) comb[i] = (*p)[i] * cn + (*n)[i] * cp;
      out.push_back(drop_column(comb, col));
    }
  }
  std::vector<RationalVector> kept;
  kept.reserve(out.size());
  for (auto& r : out) {
    if (is_zero(r)) continue;
    canonicalize_in_place(r);
    kept.push_back(std::move(r));
  }
  sort_unique(kept);
  return kept;
}

// Feasibility of affine rows (last entry is the constant) by eliminating every
// variable column.
bool affine_feasible(std::vector<RationalVector> rows) {
  while (!rows.empty() && rows.front().size() > 1) {
    rows = fm_step(rows, 0);
    for (const auto& r : rows)
      if (r.size() == 1 && r[0] < 0) return false;
    // Drop rows whose variable part vanished and whose constant is >= 0.
    std::erase_if(rows, [](const RationalVector& r) {
      for (Eigen::Index i = 0; i + 1 < r.size(); ++i)
        if (r[i] != 0) return false;
      return r[r.size() - 1] >= 0;
    });
    for (const auto& r : rows) {
      bool vars_zero = true;
      for (Eigen::Index i = 0; i + 1 < r.size(); ++i) vars_zero = vars_zero && r[i] == 0;
      if (vars_zero && r[r.size() - 1] < 0) return false;
    }
  }
  for (const auto& r : rows)
    if (r[r.size() - 1] < 0) return false;
  return true;
}

RationalVector concat(const LinIneq& q) {
  RationalVector v(q.rate.size() + q.entropy.size());
  v << q.rate, q.entropy;
  return v;
}

LinIneq split(const RationalVector& v, Eigen::Index n_rate) {
  return {v.head(n_rate), v.tail(v.size() - n_rate)};
}

std::string rational_str(const Rational& r) { return r.str(); }

void append_term(std::string& s, const Rational& coeff, const std::string& name) {
  const bool negative = coeff < 0;
  const Rational mag = negative ? Rational(-coeff) : coeff;
  if (s.empty()) s += negative ? "-" : "";
  else s += negative ? " - " : " + ";
  if (mag != 1) s += rational_str(mag) + " ";
  s += name;
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
  return out;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> parse_names(const std::string& s, const std::string& text) {
  auto names = split_list(s, ',');
  for (const auto& n : names)
    if (n.empty()) throw std::invalid_argument("malformed information term '" + text + "'");
  return names;
}

std::vector<NamedAtom> broadcast_atoms(const EntropyBasis& b) {
  std::vector<NamedAtom> atoms;
  for (const char* t : {"I(X;A)", "I(X;X2|A)", "I(X;X2|A,Y)", "I(X;X1|A,Y,X2)"})
    atoms.push_back({t, expand_atom(b, InfoTerm::parse(t))});
  return atoms;
}

// Conditions for L - lambda * M to be a nonnegative combination of the
// nonnegativity constraints, for some lambda > 0. `free_coord[i]` marks
// coordinates that must cancel exactly.
bool dominated(const RationalVector& l, const RationalVector& m, const std::vector<bool>& free_coord) {
  std::optional<Rational> lo, hi, fixed;
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    if (free_coord[i]) {
      if (m[i] == 0) {
        if (l[i] != 0) return false;
      } else {
        const Rational r = l[i] / m[i];
        if (fixed && *fixed != r) return false;
        fixed = r;
      }
    } else if (m[i] > 0) {
      const Rational r = l[i] / m[i];
      if (!hi || r < *hi) hi = r;
    } else if (m[i] < 0) {
      const Rational r = l[i] / m[i];
      if (!lo || r > *lo) lo = r;
    } else if (l[i] < 0) {
      return false;
    }
  }
  if (fixed) {
    if (*fixed <= 0) return false;
    if (lo && *fixed < *lo) return false;
    if (hi && *fixed > *hi) return false;
    return true;
  }
  if (hi && *hi <= 0) return false;
  if (lo && hi && *lo > *hi) return false;
  return true;
}

}  // namespace

// --- EntropyBasis ---------------------------------------------------------

EntropyBasis::EntropyBasis(std::vector<std::string> variables) : vars_(std::move(variables)) {
  if (vars_.empty() || vars_.size() > 16) throw std::invalid_argument("entropy basis needs 1..16 variables");
  std::set<std::string> seen(vars_.begin(), vars_.end());
  if (seen.size() != vars_.size()) throw std::invalid_argument("entropy basis has repeated variable names");
}

EntropyBasis EntropyBasis::broadcast() { return EntropyBasis({"X", "Y", "A", "X1", "X2"}); }

AxisMask EntropyBasis::mask_of(const std::vector<std::string>& names) const {
  AxisMask m = 0;
  for (const auto& n : names) {
    auto it = std::find(vars_.begin(), vars_.end(), n);
    if (it == vars_.end()) throw std::invalid_argument("unknown variable '" + n + "'");
    m |= AxisMask{1} << (it - vars_.begin());
  }
  return m;
}

std::string EntropyBasis::coordinate_name(int coord) const {
  const AxisMask s = static_cast<AxisMask>(coord + 1);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (s & (AxisMask{1} << i)) names.push_back(vars_[i]);
  return "H(" + join(names) + ")";
}

RationalVector EntropyBasis::unit(AxisMask subset) const {
  RationalVector v = zero();
  if (subset) v[subset - 1] = 1;
  return v;
}

RationalVector EntropyBasis::entropy(const std::vector<std::string>& target, const std::vector<std::string>& given) const {
  if (target.empty()) throw std::invalid_argument("entropy of an empty variable set");
  const AxisMask t = mask_of(target), g = mask_of(given);
  detail::require_disjoint(t, g, "entropy");
  return unit(t | g) - unit(g);
}

RationalVector EntropyBasis::mutual_information(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                                const std::vector<std::string>& given) const {
  if (a.empty() || b.empty()) throw std::invalid_argument("mutual information of an empty variable set");
  const AxisMask ma = mask_of(a), mb = mask_of(b), mg = mask_of(given);
  detail::require_disjoint(ma, mb, "mutual_information");
  detail::require_disjoint(ma, mg, "mutual_information");
  detail::require_disjoint(mb, mg, "mutual_information");
  return unit(ma | mg) + unit(mb | mg) - unit(ma | mb | mg) - unit(mg);
}

Eigen::VectorXd EntropyBasis::evaluate(const JointPmf& j) const {
  Eigen::VectorXd h(dimension());
  for (int c = 0; c < dimension(); ++c) {
    const AxisMask s = static_cast<AxisMask>(c + 1);
    std::vector<std::string> names;
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (s & (AxisMask{1} << i)) names.push_back(vars_[i]);
    h[c] = j.joint_entropy(j.mask_of(names));
  }
  return h;
}

// --- InfoTerm --------------------------------------------------------------

InfoTerm InfoTerm::parse(const std::string& raw) {
  std::string text;
  for (char c : raw)
    if (c != ' ') text += c;
  if (text.size() < 4 || (text[0] != 'I' && text[0] != 'H') || text[1] != '(' || text.back() != ')')
    throw std::invalid_argument("malformed information term '" + raw + "'");
  const std::string body = text.substr(2, text.size() - 3);
  auto parts = split_list(body, '|');
  if (parts.size() > 2) throw std::invalid_argument("malformed information term '" + raw + "'");
  InfoTerm t;
  if (parts.size() == 2) t.given = parse_names(parts[1], raw);
  if (text[0] == 'H') {
    t.kind = Kind::entropy;
    t.a = parse_names(parts[0], raw);
  } else {
    t.kind = Kind::mutual_information;
    auto sides = split_list(parts[0], ';');
    if (sides.size() != 2) throw std::invalid_argument("malformed information term '" + raw + "'");
    t.a = parse_names(sides[0], raw);
    t.b = parse_names(sides[1], raw);
  }
  return t;
}

std::string InfoTerm::to_string() const {
  std::string s = kind == Kind::entropy ? "H(" + join(a) : "I(" + join(a) + ";" + join(b);
  if (!given.empty()) s += "|" + join(given);
  return s + ")";
}

RationalVector expand_atom(const EntropyBasis& basis, const InfoTerm& term) {
  if (term.kind == InfoTerm::Kind::entropy) return basis.entropy(term.a, term.given);
  return basis.mutual_information(term.a, term.b, term.given);
}

// --- LinIneq / IneqSystem --------------------------------------------------

LinIneq canonicalize(const LinIneq& q) {
  RationalVector v = concat(q);
  canonicalize_in_place(v);
  return split(v, q.rate.size());
}

int IneqSystem::rate_index(const std::string& name) const {
  auto it = std::find(rate_vars.begin(), rate_vars.end(), name);
  if (it == rate_vars.end()) throw std::invalid_argument("unknown rate variable '" + name + "'");
  return static_cast<int>(it - rate_vars.begin());
}

LinIneq IneqSystem::make(const std::map<std::string, Rational>& rate_coeffs, const RationalVector& entropy) const {
  if (entropy.size() != basis.dimension()) throw std::invalid_argument("entropy part has the wrong dimension");
  LinIneq q{RationalVector::Zero(rate_vars.size()), entropy};
  for (const auto& [name, c] : rate_coeffs) q.rate[rate_index(name)] += c;
  return q;
}

IneqSystem normalized(IneqSystem sys) {
  const Eigen::Index nr = sys.rate_vars.size();
  std::vector<RationalVector> rows;
  for (const auto& q : sys.ineqs) {
    if (q.rate.size() != nr || q.entropy.size() != sys.basis.dimension())
      throw std::invalid_argument("inequality has the wrong dimension");
    RationalVector v = concat(q);
    if (is_zero(v)) continue;
    canonicalize_in_place(v);
    rows.push_back(std::move(v));
  }
  sort_unique(rows);
  sys.ineqs.clear();
  for (const auto& r : rows) sys.ineqs.push_back(split(r, nr));
  return sys;
}

IneqSystem eliminate(const IneqSystem& sys, const std::string& var) {
  const int k = sys.rate_index(var);
  std::vector<RationalVector> rows;
  for (const auto& q : sys.ineqs) rows.push_back(concat(q));
  rows = fm_step(rows, k);
  IneqSystem out = sys;
  out.rate_vars.erase(out.rate_vars.begin() + k);
  out.nonnegative.erase(var);
  out.ineqs.clear();
  for (const auto& r : rows) out.ineqs.push_back(split(r, out.rate_vars.size()));
  return out;
}

std::optional<RationalVector> decompose(const RationalVector& v, const std::vector<NamedAtom>& atoms) {
  const Eigen::Index n = v.size();
  const Eigen::Index k = static_cast<Eigen::Index>(atoms.size());
  Eigen::Matrix<Rational, Eigen::Dynamic, Eigen::Dynamic> m(n, k + 1);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (atoms[j].vec.size() != n) throw std::invalid_argument("atom has the wrong dimension");
    m.col(j) = atoms[j].vec;
  }
  m.col(k) = v;

  std::vector<Eigen::Index> pivot_col;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < k && row < n; ++col) {
    Eigen::Index p = row;
    while (p < n && m(p, col) == 0) ++p;
    if (p == n) continue;
    m.row(p).swap(m.row(row));
    const Rational inv = Rational(1) / m(row, col);
    for (Eigen::Index j = 0; j <= k; ++j) m(row, j) *= inv;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == row || m(i, col) == 0) continue;
      const Rational f = m(i, col);
      for (Eigen::Index j = 0; j <= k; ++j) m(i, j) -= f * m(row, j);
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (Eigen::Index i = row; i < n; ++i)
    if (m(i, k) != 0) return std::nullopt;
  RationalVector coeff = RationalVector::Zero(k);
  for (std::size_t r = 0; r < pivot_col.size(); ++r) coeff[pivot_col[r]] = m(static_cast<Eigen::Index>(r), k);
  return coeff;
}

IneqSystem prune_redundant(const IneqSystem& input) {
  IneqSystem sys = normalized(input);
  const std::size_t nr = sys.rate_vars.size();
  const std::size_t na = sys.atoms.size();

  // Reduced coordinates (rates, atoms) for every row expressible over the atoms.
  std::vector<std::optional<RationalVector>> reduced;
  for (const auto& q : sys.ineqs) {
    auto c = decompose(q.entropy, sys.atoms);
    if (!c) {
      reduced.push_back(std::nullopt);
      continue;
    }
    RationalVector v(nr + na);
    v << q.rate, *c;
    reduced.push_back(v);
  }
  std::vector<bool> free_coord(nr + na, false);
  for (std::size_t i = 0; i < nr; ++i) free_coord[i] = !sys.nonnegative.count(sys.rate_vars[i]);

  std::vector<bool> keep(sys.ineqs.size(), true);

  // Implied by nonnegativity alone.
  for (std::size_t i = 0; i < reduced.size(); ++i) {
    if (!reduced[i]) continue;
    bool trivial = true;
    for (std::size_t c = 0; c < nr + na && trivial; ++c)
      trivial = free_coord[c] ? (*reduced[i])[c] == 0 : (*reduced[i])[c] >= 0;
    if (trivial) keep[i] = false;
  }

  // Dominated by a single other row.
  for (std::size_t i = 0; i < reduced.size(); ++i) {
    if (!keep[i] || !reduced[i]) continue;
    for (std::size_t j = 0; j < reduced.size(); ++j) {
      if (i == j || !keep[j] || !reduced[j]) continue;
      if (dominated(*reduced[i], *reduced[j], free_coord)) {
        keep[i] = false;
        break;
      }
    }
  }

  // Implied by a nonnegative combination of the remaining rows: infeasibility
  // of {remaining >= 0, declared vars >= 0, atoms >= 0, -row >= 1}.
  for (std::size_t i = 0; i < reduced.size(); ++i) {
    if (!keep[i] || !reduced[i]) continue;
    const Eigen::Index width = static_cast<Eigen::Index>(nr + na + 1);
    std::vector<RationalVector> rows;
    for (std::size_t j = 0; j < reduced.size(); ++j) {
      if (j == i || !keep[j] || !reduced[j]) continue;
      RationalVector r = RationalVector::Zero(width);
      r.head(width - 1) = *reduced[j];
      rows.push_back(r);
    }
    for (std::size_t c = 0; c < nr + na; ++c) {
      if (free_coord[c]) continue;
      RationalVector r = RationalVector::Zero(width);
      r[c] = 1;
      rows.push_back(r);
    }
    RationalVector neg = RationalVector::Zero(width);
    neg.head(width - 1) = -*reduced[i];
    neg[width - 1] = -1;
    rows.push_back(neg);
    if (!affine_feasible(rows)) keep[i] = false;
  }

  IneqSystem out = sys;
  out.ineqs.clear();
  for (std::size_t i = 0; i < sys.ineqs.size(); ++i)
    if (keep[i]) out.ineqs.push_back(sys.ineqs[i]);
  return out;
}

// --- the cascade-broadcast system ------------------------------------------

IneqSystem broadcast_split_system(const std::set<std::string>& drop_nonneg) {
  for (const auto& d : drop_nonneg)
    if (std::find(kSplitRates.begin(), kSplitRates.end(), d) == kSplitRates.end())
      throw std::invalid_argument("'" + d + "' is not a split rate");
  IneqSystem s;
  s.rate_vars = {"R1", "R2", "Rb"};
  s.rate_vars.insert(s.rate_vars.end(), kSplitRates.begin(), kSplitRates.end());
  for (const auto& v : s.rate_vars)
    if (!drop_nonneg.count(v)) s.nonnegative.insert(v);
  s.atoms = broadcast_atoms(s.basis);
  const RationalVector& e = s.atoms[0].vec;
  const RationalVector& a = s.atoms[1].vec;
  const RationalVector& b = s.atoms[2].vec;
  const RationalVector& c = s.atoms[3].vec;
  const RationalVector z = s.basis.zero();
  s.ineqs = {
      s.make({{"r0b", 1}, {"r0d", 1}, {"r2b", 1}}, -a),
      s.make({{"r2b", 1}, {"r2d", 1}}, -b),
      s.make({{"r1b", 1}, {"r1d", 1}}, -c),
      s.make({{"R1", 1}, {"r1d", -1}, {"r2d", -1}}, z),
      s.make({{"R2", 1}, {"r0d", -1}}, z),
      s.make({{"Rb", 1}, {"r1b", -1}, {"r2b", -1}, {"r0b", -1}}, -e),
  };
  for (const auto& r : kSplitRates)
    if (!drop_nonneg.count(r)) s.ineqs.push_back(s.make({{r, 1}}, z));
  return normalized(std::move(s));
}

IneqSystem golden_broadcast_region() {
  IneqSystem s;
  s.rate_vars = {"R1", "R2", "Rb"};
  s.nonnegative = {"R1", "R2", "Rb"};
  s.atoms = broadcast_atoms(s.basis);
  const auto& B = s.basis;
  const RationalVector e = B.mutual_information({"X"}, {"A"});
  s.ineqs = {
      s.make({{"Rb", 1}}, -e),
      s.make({{"R1", 1}, {"Rb", 1}}, -e - B.mutual_information({"X"}, {"X1", "X2"}, {"A", "Y"})),
      s.make({{"R2", 1}, {"Rb", 1}}, -e - B.mutual_information({"X"}, {"X2"}, {"A"})),
      s.make({{"R1", 1}, {"R2", 1}, {"Rb", 1}},
             -e - B.mutual_information({"X"}, {"X2"}, {"A"}) - B.mutual_information({"X"}, {"X1"}, {"A", "Y", "X2"})),
  };
  return normalized(std::move(s));
}

ProjectionTrace project_broadcast(const ProjectionOptions& opt) {
  ProjectionTrace t;
  t.order = opt.order.empty() ? kSplitRates : opt.order;
  {
    auto sorted = t.order;
    std::sort(sorted.begin(), sorted.end());
    auto expected = kSplitRates;
    std::sort(expected.begin(), expected.end());
    if (sorted != expected)
      throw std::invalid_argument("elimination order must be a permutation of r0b, r0d, r1b, r1d, r2b, r2d");
  }
  t.stages.push_back(broadcast_split_system(opt.drop_nonneg));
  for (const auto& v : t.order) t.stages.push_back(eliminate(t.stages.back(), v));
  t.raw = t.stages.back();
  t.pruned = prune_redundant(t.raw);
  return t;
}

bool same_system(const IneqSystem& a, const IneqSystem& b) {
  if (a.rate_vars != b.rate_vars || !(a.basis == b.basis)) return false;
  const IneqSystem na = normalized(a), nb = normalized(b);
  return na.ineqs == nb.ineqs;
}

std::string format_ineq(const IneqSystem& sys, const LinIneq& q) {
  std::string lhs;
  for (Eigen::Index i = 0; i < q.rate.size(); ++i)
    if (q.rate[i] != 0) append_term(lhs, q.rate[i], sys.rate_vars[i]);
  std::string rhs;
  const RationalVector moved = -q.entropy;
  if (auto c = decompose(moved, sys.atoms)) {
    for (Eigen::Index k = 0; k < c->size(); ++k)
      if ((*c)[k] != 0) append_term(rhs, (*c)[k], sys.atoms[k].name);
  } else {
    for (Eigen::Index k = 0; k < moved.size(); ++k)
      if (moved[k] != 0) append_term(rhs, moved[k], sys.basis.coordinate_name(static_cast<int>(k)));
  }
  return (lhs.empty() ? "0" : lhs) + " >= " + (rhs.empty() ? "0" : rhs);
}

std::string format_system(const IneqSystem& sys) {
  std::string out;
  for (const auto& q : sys.ineqs) out += format_ineq(sys, q) + "\n";
  return out;
}

// --- numerics ---------------------------------------------------------------

double evaluate(const LinIneq& q, const Eigen::VectorXd& rates, const Eigen::VectorXd& entropy) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.rate.size(); ++i)
    if (q.rate[i] != 0) s += q.rate[i].convert_to<double>() * rates[i];
  for (Eigen::Index i = 0; i < q.entropy.size(); ++i)
    if (q.entropy[i] != 0) s += q.entropy[i].convert_to<double>() * entropy[i];
  return s;
}

bool contains(const IneqSystem& sys, const Eigen::VectorXd& rates, const Eigen::VectorXd& entropy, double tol) {
  for (const auto& q : sys.ineqs)
    if (evaluate(q, rates, entropy) < -tol) return false;
  return true;
}

namespace {

struct DenseSystem {
  Eigen::MatrixXd rate, entropy;

  explicit DenseSystem(const IneqSystem& s)
      : rate(s.ineqs.size(), s.rate_vars.size()), entropy(s.ineqs.size(), s.basis.dimension()) {
    for (std::size_t r = 0; r < s.ineqs.size(); ++r) {
      for (Eigen::Index i = 0; i < rate.cols(); ++i) rate(r, i) = s.ineqs[r].rate[i].convert_to<double>();
      for (Eigen::Index i = 0; i < entropy.cols(); ++i) entropy(r, i) = s.ineqs[r].entropy[i].convert_to<double>();
    }
  }
};

}  // namespace

EquivalenceReport sample_equivalence(const IneqSystem& a, const IneqSystem& b, std::size_t n_samples,
                                     std::uint64_t seed, std::size_t triples_per_pmf) {
  if (a.rate_vars != b.rate_vars || !(a.basis == b.basis))
    throw std::invalid_argument("systems are over different variables");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& vars = a.basis.variables();
  std::vector<FiniteAlphabet> axes;
  for (const auto& v : vars) axes.emplace_back(v, 2);
  const Eigen::Index cells = Eigen::Index{1} << vars.size();
  const DenseSystem da(a), db(b);

  EquivalenceReport rep;
  for (std::size_t s = 0; s < n_samples; ++s) {
    // Dirichlet draw; a small concentration gives sparse, strongly dependent pmfs.
    const double alpha = unif(rng) < 0.5 ? 1.0 : 0.2;
    std::gamma_distribution<double> gam(alpha, 1.0);
    Eigen::ArrayXd p(cells);
    for (Eigen::Index i = 0; i < cells; ++i) p[i] = gam(rng) + 1e-300;
    p /= p.sum();
    const JointPmf j = JointPmf::unchecked(axes, p);
    const Eigen::VectorXd h = a.basis.evaluate(j);

    const Eigen::VectorXd off_a = da.entropy * h, off_b = db.entropy * h;
    double scale = 0.0;
    if (off_a.size()) scale = std::max(scale, -off_a.minCoeff());
    if (off_b.size()) scale = std::max(scale, -off_b.minCoeff());
    scale = 1.2 * std::max(scale, 1e-3);

    ++rep.pmfs;
    for (std::size_t t = 0; t < triples_per_pmf; ++t) {
      Eigen::VectorXd r(a.rate_vars.size());
      for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = scale * unif(rng);
      const bool in_a = ((da.rate * r + off_a).array() >= -1e-12).all();
      const bool in_b = ((db.rate * r + off_b).array() >= -1e-12).all();
      ++rep.triples;
      if (in_a != in_b) {
        ++rep.disagreements;
        if (rep.examples.size() < 5) rep.examples.push_back({p.matrix(), r, in_a, in_b});
      }
    }
  }
  return rep;
}

Rational evaluate_exact(const IneqSystem& sys, const LinIneq& q, const std::map<std::string, Rational>& rates,
                        const RationalVector& entropy) {
  Rational s = 0;
  for (Eigen::Index i = 0; i < q.rate.size(); ++i)
    if (q.rate[i] != 0) s += q.rate[i] * rates.at(sys.rate_vars[i]);
  for (Eigen::Index i = 0; i < q.entropy.size(); ++i)
    if (q.entropy[i] != 0) s += q.entropy[i] * entropy[i];
  return s;
}

std::optional<std::map<std::string, Rational>> back_substitute(const ProjectionTrace& trace,
                                                               const std::map<std::string, Rational>& rates,
                                                               const RationalVector& entropy) {
  std::map<std::string, Rational> vals;
  for (const auto& v : trace.raw.rate_vars) {
    auto it = rates.find(v);
    if (it == rates.end()) throw std::invalid_argument("missing value for rate variable '" + v + "'");
    vals[v] = it->second;
  }
  for (const auto& q : trace.raw.ineqs)
    if (evaluate_exact(trace.raw, q, vals, entropy) < 0) return std::nullopt;

  for (std::size_t k = trace.order.size(); k-- > 0;) {
    const IneqSystem& s = trace.stages[k];
    const std::string& var = trace.order[k];
    const int col = s.rate_index(var);
    std::optional<Rational> lo, hi;
    vals[var] = 0;
    for (const auto& q : s.ineqs) {
      const Rational c = q.rate[col];
      const Rational rest = evaluate_exact(s, q, vals, entropy);  // var currently 0
      if (c > 0) {
        const Rational bound = -rest / c;
        if (!lo || bound > *lo) lo = bound;
      } else if (c < 0) {
        const Rational bound = rest / -c;
        if (!hi || bound < *hi) hi = bound;
      } else if (rest < 0) {
        return std::nullopt;
      }
    }
    if (lo && hi && *lo > *hi) return std::nullopt;
    vals[var] = lo ? *lo : (hi ? *hi : Rational(0));
  }
  for (const auto& q : trace.stages.front().ineqs)
    if (evaluate_exact(trace.stages.front(), q, vals, entropy) < 0) return std::nullopt;
  return vals;
}

RationalVector to_rational(const Eigen::VectorXd& v) {
  RationalVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = Rational(v[i]);
  return out;
}

}  // namespace vending::fm
