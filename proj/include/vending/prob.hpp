#pragma once

// Named-axis discrete probability tensors and the Shannon functionals built on
// them. Everything here is header-only and templated on the scalar type; the
// rest of the library uses the double aliases at the bottom.

#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vending {

constexpr double kNormalizationTol = 1e-12;
constexpr double kInfoClampTol = 1e-12;

using AxisSet = std::vector<std::string>;
using AxisMask = std::uint32_t;

class FiniteAlphabet {
 public:
  FiniteAlphabet() = default;

  FiniteAlphabet(std::string name, int size) : name_(std::move(name)) {
    if (size < 1) throw std::invalid_argument("alphabet '" + name_ + "' must have size >= 1");
    labels_.reserve(size);
    for (int i = 0; i < size; ++i) labels_.push_back(std::to_string(i));
  }

  FiniteAlphabet(std::string name, std::vector<std::string> labels)
      : name_(std::move(name)), labels_(std::move(labels)) {
    if (labels_.empty()) throw std::invalid_argument("alphabet '" + name_ + "' must have size >= 1");
    std::set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size())
      throw std::invalid_argument("alphabet '" + name_ + "' has repeated symbol labels");
  }

  const std::string& name() const { return name_; }
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

  FiniteAlphabet renamed(std::string name) const {
    FiniteAlphabet out = *this;
    out.name_ = std::move(name);
    return out;
  }

  bool operator==(const FiniteAlphabet&) const = default;

 private:
  std::string name_;
  std::vector<std::string> labels_;
};

namespace detail {

inline std::vector<int> shape_of(const std::vector<FiniteAlphabet>& axes) {
  std::vector<int> shape;
  shape.reserve(axes.size());
  for (const auto& a : axes) shape.push_back(a.size());
  return shape;
}

inline std::size_t volume(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int s : shape) n *= static_cast<std::size_t>(s);
  return n;
}

// Row-major (last axis fastest) strides.
inline std::vector<std::size_t> strides_of(const std::vector<int>& shape) {
  std::vector<std::size_t> st(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * shape[i + 1];
  return st;
}

// For every cell of a tensor with `shape`, the flat index of the cell it lands
// in after summing out the axes not in `mask`. Kept axes stay in their order.
inline std::vector<int> marginal_map(const std::vector<int>& shape, AxisMask mask) {
  const int rank = static_cast<int>(shape.size());
  std::vector<std::size_t> out_stride(rank, 0);
  std::size_t s = 1;
  for (int i = rank - 1; i >= 0; --i) {
    if (mask & (AxisMask{1} << i)) {
      out_stride[i] = s;
      s *= shape[i];
    }
  }
  std::vector<int> map(volume(shape));
  std::vector<int> digit(rank, 0);
  std::size_t target = 0;
  for (std::size_t cell = 0; cell < map.size(); ++cell) {
    map[cell] = static_cast<int>(target);
    for (int ax = rank - 1; ax >= 0; --ax) {
      if (++digit[ax] < shape[ax]) {
        target += out_stride[ax];
        break;
      }
      target -= out_stride[ax] * (shape[ax] - 1);
      digit[ax] = 0;
    }
  }
  return map;
}

inline std::size_t marginal_volume(const std::vector<int>& shape, AxisMask mask) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (mask & (AxisMask{1} << i)) n *= shape[i];
  return n;
}

template <typename Scalar>
Scalar plogp_sum(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& p) {
  using std::log2;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > Scalar(0)) h -= p[i] * log2(p[i]);
  return h;
}

inline void require_disjoint(AxisMask a, AxisMask b, const char* what) {
  if (a & b) throw std::invalid_argument(std::string("overlapping axis sets in ") + what);
}

}  // namespace detail

template <typename Scalar>
class JointPmfT {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  JointPmfT() = default;

  // Validates nonnegativity, normalization and distinct axis names.
  JointPmfT(std::vector<FiniteAlphabet> axes, Values values)
      : JointPmfT(unchecked(std::move(axes), std::move(values))) {
    auto issues = check();
    if (!issues.empty()) throw std::invalid_argument("invalid joint pmf: " + issues.front());
  }

  // Only checks that the value count matches the shape; used for deserialized
  // data that is validated later and for results that are normalized by
  // construction.
  static JointPmfT unchecked(std::vector<FiniteAlphabet> axes, Values values) {
    JointPmfT j;
    j.axes_ = std::move(axes);
    j.shape_ = detail::shape_of(j.axes_);
    if (static_cast<std::size_t>(values.size()) != detail::volume(j.shape_))
      throw std::invalid_argument("joint pmf value count does not match the axis shape");
    if (j.axes_.size() > 31) throw std::invalid_argument("too many axes");
    j.values_ = std::move(values);
    return j;
  }

  std::vector<std::string> check() const {
    std::vector<std::string> issues;
    std::set<std::string> names;
    for (const auto& a : axes_)
      if (!names.insert(a.name()).second) issues.push_back("repeated axis name '" + a.name() + "'");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= Scalar(0))) {
        issues.push_back("negative or non-finite entry at flat index " + std::to_string(i));
        break;
      }
    }
    using std::abs;
    Scalar total = values_.sum();
    if (!(abs(total - Scalar(1)) <= Scalar(kNormalizationTol)))
      issues.push_back("entries sum to " + std::to_string(static_cast<double>(total)) + ", not 1");
    return issues;
  }

  const std::vector<FiniteAlphabet>& axes() const { return axes_; }
  const std::vector<int>& shape() const { return shape_; }
  const Values& values() const { return values_; }
  int rank() const { return static_cast<int>(axes_.size()); }

  int axis_index(std::string_view name) const {
    for (int i = 0; i < rank(); ++i)
      if (axes_[i].name() == name) return i;
    throw std::invalid_argument("unknown axis name '" + std::string(name) + "'");
  }

  bool has_axis(std::string_view name) const {
    return std::any_of(axes_.begin(), axes_.end(), [&](const auto& a) { return a.name() == name; });
  }

  AxisMask mask_of(const AxisSet& names) const {
    AxisMask m = 0;
    for (const auto& n : names) m |= AxisMask{1} << axis_index(n);
    return m;
  }

  const FiniteAlphabet& axis(std::string_view name) const { return axes_[axis_index(name)]; }

  Scalar at(std::initializer_list<int> index) const {
    auto st = detail::strides_of(shape_);
    std::size_t flat = 0, k = 0;
    for (int i : index) flat += st[k++] * static_cast<std::size_t>(i);
    return values_[static_cast<Eigen::Index>(flat)];
  }

  // Marginal over the axes in `mask`, laid out in this pmf's axis order.
  Values marginal_values(AxisMask mask) const {
    Values out = Values::Zero(static_cast<Eigen::Index>(detail::marginal_volume(shape_, mask)));
    if (mask == 0) {
      out[0] = values_.sum();
      return out;
    }
    auto map = detail::marginal_map(shape_, mask);
    for (std::size_t c = 0; c < map.size(); ++c) out[map[c]] += values_[static_cast<Eigen::Index>(c)];
    return out;
  }

  // Joint entropy of the axes in `mask`, in bits.
  Scalar joint_entropy(AxisMask mask) const {
    if (mask == 0) return Scalar(0);
    return detail::plogp_sum(marginal_values(mask));
  }

 private:
  std::vector<FiniteAlphabet> axes_;
  std::vector<int> shape_;
  Values values_;
};

// A conditional pmf: every slice with the from-axes fixed is a pmf over the
// to-axes. Values are laid out from-axes first, row-major.
template <typename Scalar>
class CondKernelT {
 public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  CondKernelT() = default;

  CondKernelT(std::vector<FiniteAlphabet> from, std::vector<FiniteAlphabet> to, Values values)
      : CondKernelT(unchecked(std::move(from), std::move(to), std::move(values))) {
    auto issues = check();
    if (!issues.empty()) throw std::invalid_argument("invalid conditional kernel: " + issues.front());
  }

  static CondKernelT unchecked(std::vector<FiniteAlphabet> from, std::vector<FiniteAlphabet> to,
                               Values values) {
    CondKernelT k;
    k.from_ = std::move(from);
    k.to_ = std::move(to);
    k.cells_ = static_cast<int>(detail::volume(detail::shape_of(k.from_)));
    k.outputs_ = static_cast<int>(detail::volume(detail::shape_of(k.to_)));
    if (values.size() != static_cast<Eigen::Index>(k.cells_) * k.outputs_)
      throw std::invalid_argument("kernel value count does not match the axis shapes");
    k.values_ = std::move(values);
    return k;
  }

  // Problems with slice indices, suitable for validation reports.
  std::vector<std::string> check() const {
    std::vector<std::string> issues;
    std::set<std::string> names;
    for (const auto& a : from_)
      if (!names.insert(a.name()).second) issues.push_back("repeated axis name '" + a.name() + "'");
    for (const auto& a : to_)
      if (!names.insert(a.name()).second) issues.push_back("repeated axis name '" + a.name() + "'");
    using std::abs;
    for (int c = 0; c < cells_; ++c) {
      auto s = slice(c);
      if (!(s >= Scalar(0)).all()) issues.push_back("slice " + std::to_string(c) + " has a negative entry");
      Scalar total = s.sum();
      if (!(abs(total - Scalar(1)) <= Scalar(kNormalizationTol)))
        issues.push_back("slice " + std::to_string(c) + " sums to " +
                         std::to_string(static_cast<double>(total)));
    }
    return issues;
  }

  const std::vector<FiniteAlphabet>& from_axes() const { return from_; }
  const std::vector<FiniteAlphabet>& to_axes() const { return to_; }
  const Values& values() const { return values_; }
  int cells() const { return cells_; }
  int outputs() const { return outputs_; }

  auto slice(int cell) const { return values_.segment(static_cast<Eigen::Index>(cell) * outputs_, outputs_); }

 private:
  std::vector<FiniteAlphabet> from_, to_;
  int cells_ = 0;
  int outputs_ = 0;
  Values values_;
};

using JointPmf = JointPmfT<double>;
using CondKernel = CondKernelT<double>;

template <typename Scalar>
JointPmfT<Scalar> marginalize(const JointPmfT<Scalar>& j, const AxisSet& keep) {
  if (keep.empty()) throw std::invalid_argument("marginalize: empty axis set");
  const AxisMask mask = j.mask_of(keep);
  if (static_cast<std::size_t>(std::popcount(mask)) != keep.size())
    throw std::invalid_argument("marginalize: repeated axis name");
  auto natural = j.marginal_values(mask);

  // Reorder from j's axis order into the order requested by `keep`.
  std::vector<int> kept_order;  // j-axis indices in j order
  for (int i = 0; i < j.rank(); ++i)
    if (mask & (AxisMask{1} << i)) kept_order.push_back(i);
  std::vector<FiniteAlphabet> out_axes;
  std::vector<int> out_shape;
  for (const auto& n : keep) {
    out_axes.push_back(j.axis(n));
    out_shape.push_back(j.axis(n).size());
  }
  std::vector<int> nat_shape;
  for (int i : kept_order) nat_shape.push_back(j.shape()[i]);
  auto nat_strides = detail::strides_of(nat_shape);
  // position of each keep entry within the natural order
  std::vector<std::size_t> stride_for_out(keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    int ax = j.axis_index(keep[k]);
    auto pos = std::find(kept_order.begin(), kept_order.end(), ax) - kept_order.begin();
    stride_for_out[k] = nat_strides[pos];
  }
  typename JointPmfT<Scalar>::Values out(natural.size());
  std::vector<int> digit(keep.size(), 0);
  for (Eigen::Index cell = 0; cell < out.size(); ++cell) {
    std::size_t src = 0;
    for (std::size_t k = 0; k < keep.size(); ++k) src += stride_for_out[k] * digit[k];
    out[cell] = natural[static_cast<Eigen::Index>(src)];
    for (int k = static_cast<int>(keep.size()) - 1; k >= 0; --k) {
      if (++digit[k] < out_shape[k]) break;
      digit[k] = 0;
    }
  }
  return JointPmfT<Scalar>::unchecked(std::move(out_axes), std::move(out));
}

// Appends the kernel's to-axes: p(base) * k(to | from).
template <typename Scalar>
JointPmfT<Scalar> compose(const JointPmfT<Scalar>& base, const CondKernelT<Scalar>& k) {
  std::vector<std::size_t> from_contrib(base.rank(), 0);
  {
    auto from_shape = detail::shape_of(k.from_axes());
    auto from_strides = detail::strides_of(from_shape);
    for (std::size_t f = 0; f < k.from_axes().size(); ++f) {
      const auto& fa = k.from_axes()[f];
      if (!base.has_axis(fa.name()))
        throw std::invalid_argument("compose: kernel conditions on '" + fa.name() + "' which the base lacks");
      int ax = base.axis_index(fa.name());
      if (base.axes()[ax].size() != fa.size())
        throw std::invalid_argument("compose: alphabet size mismatch on axis '" + fa.name() + "'");
      from_contrib[ax] = from_strides[f];
    }
  }
  for (const auto& ta : k.to_axes())
    if (base.has_axis(ta.name()))
      throw std::invalid_argument("compose: kernel output axis '" + ta.name() + "' already in base");
  if (auto issues = k.check(); !issues.empty())
    throw std::invalid_argument("compose: kernel not normalized: " + issues.front());

  const auto& shape = base.shape();
  const int rank = base.rank();
  const int nout = k.outputs();
  typename JointPmfT<Scalar>::Values out(base.values().size() * nout);
  std::vector<int> digit(rank, 0);
  std::size_t from_index = 0;
  for (Eigen::Index cell = 0; cell < base.values().size(); ++cell) {
    out.segment(cell * nout, nout) = base.values()[cell] * k.slice(static_cast<int>(from_index));
    for (int ax = rank - 1; ax >= 0; --ax) {
      if (++digit[ax] < shape[ax]) {
        from_index += from_contrib[ax];
        break;
      }
      from_index -= from_contrib[ax] * (shape[ax] - 1);
      digit[ax] = 0;
    }
  }
  auto axes = base.axes();
  axes.insert(axes.end(), k.to_axes().begin(), k.to_axes().end());
  return JointPmfT<Scalar>::unchecked(std::move(axes), std::move(out));
}

// H(target | given) in bits.
template <typename Scalar>
Scalar entropy(const JointPmfT<Scalar>& j, const AxisSet& target, const AxisSet& given = {}) {
  if (target.empty()) throw std::invalid_argument("entropy: empty target set");
  const AxisMask t = j.mask_of(target), g = j.mask_of(given);
  detail::require_disjoint(t, g, "entropy");
  Scalar h = j.joint_entropy(t | g) - j.joint_entropy(g);
  return h < Scalar(0) ? Scalar(0) : h;
}

// I(a ; b | given) in bits; tiny negative round-off is clamped to zero.
template <typename Scalar>
Scalar mutual_information(const JointPmfT<Scalar>& j, const AxisSet& a, const AxisSet& b,
                          const AxisSet& given = {}) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mutual_information: empty axis set");
  const AxisMask ma = j.mask_of(a), mb = j.mask_of(b), mg = j.mask_of(given);
  detail::require_disjoint(ma, mb, "mutual_information");
  detail::require_disjoint(ma, mg, "mutual_information");
  detail::require_disjoint(mb, mg, "mutual_information");
  Scalar i = j.joint_entropy(ma | mg) + j.joint_entropy(mb | mg) - j.joint_entropy(ma | mb | mg) -
             j.joint_entropy(mg);
  if (i < Scalar(0) && i >= Scalar(-kInfoClampTol)) i = Scalar(0);
  return i;
}

// a - b - c is a Markov chain iff I(a ; c | b) <= tol.
template <typename Scalar>
bool is_markov(const JointPmfT<Scalar>& j, const AxisSet& a, const AxisSet& b, const AxisSet& c,
               double tol) {
  if (a.empty() || b.empty() || c.empty()) throw std::invalid_argument("is_markov: empty axis set");
  return mutual_information(j, a, c, b) <= Scalar(tol);
}

}  // namespace vending
