#pragma once

// Exact Fourier-Motzkin projection of linear rate inequalities whose
// information terms live in the joint-entropy basis (one coordinate per
// nonempty subset of the random variables). Chain-rule identities are plain
// vector equalities there, so no rewrite rules are needed.

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vending/prob.hpp"

namespace vending::fm {

using Rational = boost::multiprecision::cpp_rational;
using RationalVector = Eigen::Matrix<Rational, Eigen::Dynamic, 1>;

class EntropyBasis {
 public:
  explicit EntropyBasis(std::vector<std::string> variables);

  // The variables of the cascade-broadcast model: X, Y, A, X1, X2.
  static EntropyBasis broadcast();

  const std::vector<std::string>& variables() const { return vars_; }
  int dimension() const { return (1 << vars_.size()) - 1; }

  AxisMask mask_of(const std::vector<std::string>& names) const;
  std::string coordinate_name(int coord) const;

  RationalVector zero() const { return RationalVector::Zero(dimension()); }
  RationalVector entropy(const std::vector<std::string>& target, const std::vector<std::string>& given = {}) const;
  RationalVector mutual_information(const std::vector<std::string>& a, const std::vector<std::string>& b,
                                    const std::vector<std::string>& given = {}) const;

  // Joint entropies of every coordinate subset under j (axes matched by name).
  Eigen::VectorXd evaluate(const JointPmf& j) const;

  bool operator==(const EntropyBasis&) const = default;

 private:
  RationalVector unit(AxisMask subset) const;

  std::vector<std::string> vars_;
};

// H(T | G) or I(A ; B | G), written as e.g. "H(X,Y|A)" or "I(X;X2|A,Y)".
struct InfoTerm {
  enum class Kind { entropy, mutual_information };
  Kind kind = Kind::entropy;
  std::vector<std::string> a, b, given;

  static InfoTerm parse(const std::string& text);
  std::string to_string() const;
};

RationalVector expand_atom(const EntropyBasis& basis, const InfoTerm& term);

// sum_i rate[i] R_i + sum_j entropy[j] H_j >= 0
struct LinIneq {
  RationalVector rate;
  RationalVector entropy;

  bool operator==(const LinIneq& o) const { return rate == o.rate && entropy == o.entropy; }
};

// Positive rescaling to coprime integer coefficients.
LinIneq canonicalize(const LinIneq& q);

// Known-nonnegative information atom (a conditional mutual information).
struct NamedAtom {
  std::string name;
  RationalVector vec;
};

struct IneqSystem {
  EntropyBasis basis = EntropyBasis::broadcast();
  std::vector<std::string> rate_vars;
  std::set<std::string> nonnegative;  // declared nonnegative rate variables
  std::vector<NamedAtom> atoms;       // used for pruning and printing
  std::vector<LinIneq> ineqs;

  int rate_index(const std::string& name) const;
  LinIneq make(const std::map<std::string, Rational>& rate_coeffs, const RationalVector& entropy) const;
};

// Canonicalize every row, drop trivial 0 >= 0 rows and duplicates, and sort
// lexicographically by (rate, entropy) coefficients.
IneqSystem normalized(IneqSystem sys);

IneqSystem eliminate(const IneqSystem& sys, const std::string& var);

// Removes duplicates, rows implied by the declared nonnegativity alone, rows
// dominated by a single other row, and rows implied by a nonnegative
// combination of the remaining rows (tested exactly, with the atoms treated
// as free nonnegative variables). Never removes a row that is not implied.
IneqSystem prune_redundant(const IneqSystem& sys);

// Exact rational coordinates of v over the atom vectors, when v is in their span.
std::optional<RationalVector> decompose(const RationalVector& v, const std::vector<NamedAtom>& atoms);

// Split rates of the broadcast rate-split system, in default elimination order.
extern const std::vector<std::string> kSplitRates;

struct ProjectionOptions {
  std::vector<std::string> order;     // empty: r0b, r0d, r1b, r1d, r2b, r2d
  std::set<std::string> drop_nonneg;  // omit "r >= 0" for these split rates
};

struct ProjectionTrace {
  std::vector<std::string> order;
  std::vector<IneqSystem> stages;  // stages[0] is the input, stages[k] after k eliminations
  IneqSystem raw;                  // == stages.back()
  IneqSystem pruned;
};

// The six rate-split inequalities of the cascade-broadcast achievability
// scheme plus nonnegativity of the split rates.
IneqSystem broadcast_split_system(const std::set<std::string>& drop_nonneg = {});

// The four-inequality target region, entered by hand.
IneqSystem golden_broadcast_region();

ProjectionTrace project_broadcast(const ProjectionOptions& opt = {});

// Same rate variables and the same rows after normalization.
bool same_system(const IneqSystem& a, const IneqSystem& b);

// Plain-text listing, one inequality per line.
std::string format_system(const IneqSystem& sys);
std::string format_ineq(const IneqSystem& sys, const LinIneq& q);

// Numeric value of the left-hand side for rate values (by rate_vars order) and
// entropy coordinates.
double evaluate(const LinIneq& q, const Eigen::VectorXd& rates, const Eigen::VectorXd& entropy);
bool contains(const IneqSystem& sys, const Eigen::VectorXd& rates, const Eigen::VectorXd& entropy,
              double tol = 1e-12);

struct Disagreement {
  Eigen::VectorXd pmf;   // over the basis variables, all binary
  Eigen::VectorXd rates;
  bool in_a = false;
  bool in_b = false;
};

struct EquivalenceReport {
  std::size_t pmfs = 0;
  std::size_t triples = 0;
  std::size_t disagreements = 0;
  std::vector<Disagreement> examples;  // first few
};

// Random binary joint pmfs over the basis variables; for each, random rate
// vectors are tested for membership in both systems.
EquivalenceReport sample_equivalence(const IneqSystem& a, const IneqSystem& b, std::size_t n_samples,
                                     std::uint64_t seed, std::size_t triples_per_pmf = 10);

// Recovers values of the eliminated variables for a point of the projected
// system by back-substitution through the stages, in exact arithmetic.
// `rates` holds the values of the final-stage rate variables.
std::optional<std::map<std::string, Rational>> back_substitute(const ProjectionTrace& trace,
                                                               const std::map<std::string, Rational>& rates,
                                                               const RationalVector& entropy);

// Exact value of a system row; entropy coordinates given as exact rationals.
Rational evaluate_exact(const IneqSystem& sys, const LinIneq& q, const std::map<std::string, Rational>& rates,
                        const RationalVector& entropy);

RationalVector to_rational(const Eigen::VectorXd& v);

}  // namespace vending::fm
