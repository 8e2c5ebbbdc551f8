// Copyright 2026 The qhist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/**
 * @file
 * Dense complex linear algebra over labeled composite bases.
 *
 * A SystemLayout is an ordered list of named subsystems, each with an ordered
 * list of basis labels. The composite basis index is the mixed-radix encoding
 * of the per-subsystem indices, first subsystem most significant. Kets and
 * Operators always carry their layout so that subsystem bookkeeping (tensor
 * products, embedding into larger layouts) never depends on raw indices.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qhist {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

class HilbertError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Subsystem {
  std::string name;
  std::vector<std::string> labels;

  std::size_t dim() const { return labels.size(); }
  bool operator==(const Subsystem&) const = default;
};

class SystemLayout {
 public:
  SystemLayout() = default;

  explicit SystemLayout(std::vector<Subsystem> subsystems) : subsystems_(std::move(subsystems)) {
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
      const auto& s = subsystems_[i];
      if (s.name.empty()) throw HilbertError("subsystem with empty name");
      if (s.dim() < 1) throw HilbertError("subsystem '" + s.name + "' has no basis labels");
      for (std::size_t j = 0; j < i; ++j) {
        if (subsystems_[j].name == s.name) throw HilbertError("duplicate subsystem name '" + s.name + "'");
      }
      for (std::size_t a = 0; a < s.labels.size(); ++a) {
        for (std::size_t b = 0; b < a; ++b) {
          if (s.labels[a] == s.labels[b]) {
            throw HilbertError("duplicate basis label '" + s.labels[a] + "' in subsystem '" + s.name + "'");
          }
        }
      }
    }
  }

  /// Single subsystem with the given labels.
  static SystemLayout single(std::string name, std::vector<std::string> labels) {
    return SystemLayout({Subsystem{std::move(name), std::move(labels)}});
  }

  const std::vector<Subsystem>& subsystems() const { return subsystems_; }
  std::size_t size() const { return subsystems_.size(); }

  std::size_t dim() const {
    std::size_t d = 1;
    for (const auto& s : subsystems_) d *= s.dim();
    return d;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(subsystems_.size());
    for (const auto& s : subsystems_) out.push_back(s.name);
    return out;
  }

  std::optional<std::size_t> find(std::string_view name) const {
    for (std::size_t i = 0; i < subsystems_.size(); ++i) {
      if (subsystems_[i].name == name) return i;
    }
    return std::nullopt;
  }

  std::size_t index_of(std::string_view name) const {
    auto i = find(name);
    if (!i) throw HilbertError("unknown subsystem '" + std::string(name) + "'");
    return *i;
  }

  std::size_t label_index(std::size_t subsystem, std::string_view label) const {
    const auto& labels = subsystems_.at(subsystem).labels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) return i;
    }
    throw HilbertError("unknown basis label '" + std::string(label) + "' for subsystem '" +
                       subsystems_[subsystem].name + "'");
  }

  std::vector<std::size_t> digits(std::size_t index) const {
    std::vector<std::size_t> out(subsystems_.size());
    for (std::size_t k = subsystems_.size(); k-- > 0;) {
      const std::size_t d = subsystems_[k].dim();
      out[k] = index % d;
      index /= d;
    }
    return out;
  }

  std::size_t encode(std::span<const std::size_t> digits) const {
    if (digits.size() != subsystems_.size()) throw HilbertError("digit count does not match layout");
    std::size_t index = 0;
    for (std::size_t k = 0; k < subsystems_.size(); ++k) {
      if (digits[k] >= subsystems_[k].dim()) throw HilbertError("basis digit out of range");
      index = index * subsystems_[k].dim() + digits[k];
    }
    return index;
  }

  std::size_t encode_labels(std::span<const std::string> labels) const {
    if (labels.size() != subsystems_.size()) {
      throw HilbertError("basis ket has " + std::to_string(labels.size()) + " labels but layout has " +
                         std::to_string(subsystems_.size()) + " subsystems");
    }
    std::vector<std::size_t> d(labels.size());
    for (std::size_t k = 0; k < labels.size(); ++k) d[k] = label_index(k, labels[k]);
    return encode(d);
  }

  /// "|l1,l2,...>" for a composite basis index.
  std::string basis_label(std::size_t index) const {
    const auto d = digits(index);
    std::string out = "|";
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (k) out += ',';
      out += subsystems_[k].labels[d[k]];
    }
    return out + ">";
  }

  /// Layout with `other` appended; subsystem names must be disjoint.
  SystemLayout concat(const SystemLayout& other) const {
    std::vector<Subsystem> subs = subsystems_;
    for (const auto& s : other.subsystems_) {
      if (find(s.name)) throw HilbertError("subsystem name collision '" + s.name + "'");
      subs.push_back(s);
    }
    return SystemLayout(std::move(subs));
  }

  /// Sub-layout holding the named subsystems in the given order.
  SystemLayout select(std::span<const std::string> names) const {
    std::vector<Subsystem> subs;
    for (const auto& n : names) subs.push_back(subsystems_[index_of(n)]);
    return SystemLayout(std::move(subs));
  }

  bool operator==(const SystemLayout&) const = default;

 private:
  std::vector<Subsystem> subsystems_;
};

class Ket {
 public:
  Ket() = default;
  Ket(SystemLayout layout, Vector amplitudes) : layout_(std::move(layout)), amps_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amps_.size()) != layout_.dim()) {
      throw HilbertError("ket length does not match layout dimension");
    }
  }

  static Ket zero(SystemLayout layout) {
    const auto n = static_cast<Eigen::Index>(layout.dim());
    return Ket(std::move(layout), Vector::Zero(n));
  }

  static Ket basis(SystemLayout layout, std::span<const std::string> labels) {
    const std::size_t i = layout.encode_labels(labels);
    Ket k = zero(std::move(layout));
    k.amps_[static_cast<Eigen::Index>(i)] = 1.0;
    return k;
  }

  static Ket basis(SystemLayout layout, std::initializer_list<std::string> labels) {
    std::vector<std::string> v(labels);
    return basis(std::move(layout), v);
  }

  const SystemLayout& layout() const { return layout_; }
  const Vector& amplitudes() const { return amps_; }
  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }

  Complex amplitude(std::span<const std::string> labels) const {
    return amps_[static_cast<Eigen::Index>(layout_.encode_labels(labels))];
  }
  Complex amplitude(std::initializer_list<std::string> labels) const {
    std::vector<std::string> v(labels);
    return amplitude(v);
  }

  double norm() const { return amps_.norm(); }
  double squared_norm() const { return amps_.squaredNorm(); }

  /// <this|other>
  Complex inner(const Ket& other) const {
    require_same_layout(other);
    return amps_.dot(other.amps_);
  }

  Ket normalized() const {
    const double n = norm();
    if (n == 0.0) throw HilbertError("cannot normalize the zero ket");
    return Ket(layout_, amps_ / n);
  }

  Ket operator+(const Ket& o) const {
    require_same_layout(o);
    return Ket(layout_, amps_ + o.amps_);
  }
  Ket operator-(const Ket& o) const {
    require_same_layout(o);
    return Ket(layout_, amps_ - o.amps_);
  }
  Ket operator-() const { return Ket(layout_, -amps_); }
  Ket operator*(Complex s) const { return Ket(layout_, amps_ * s); }
  friend Ket operator*(Complex s, const Ket& k) { return k * s; }
  Ket operator/(double s) const { return Ket(layout_, amps_ / s); }
  Ket operator/(Complex s) const {
    if (s.imag() == 0.0) return *this / s.real();
    return Ket(layout_, amps_ / s);
  }

 private:
  void require_same_layout(const Ket& o) const {
    if (!(layout_ == o.layout_)) throw HilbertError("ket layouts differ");
  }

  SystemLayout layout_;
  Vector amps_;
};

class Operator {
 public:
  Operator() = default;
  Operator(SystemLayout layout, Matrix matrix) : layout_(std::move(layout)), m_(std::move(matrix)) {
    const auto n = static_cast<Eigen::Index>(layout_.dim());
    if (m_.rows() != n || m_.cols() != n) throw HilbertError("operator shape does not match layout dimension");
  }

  static Operator identity(SystemLayout layout) {
    const auto n = static_cast<Eigen::Index>(layout.dim());
    return Operator(std::move(layout), Matrix::Identity(n, n));
  }
  static Operator zero(SystemLayout layout) {
    const auto n = static_cast<Eigen::Index>(layout.dim());
    return Operator(std::move(layout), Matrix::Zero(n, n));
  }

  const SystemLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return m_; }
  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }

  Ket apply(const Ket& k) const {
    if (!(k.layout() == layout_)) throw HilbertError("operator and ket layouts differ");
    return Ket(layout_, m_ * k.amplitudes());
  }

  Operator adjoint() const { return Operator(layout_, m_.adjoint()); }
  Complex trace() const { return m_.trace(); }

  Operator operator*(const Operator& o) const {
    require_same_layout(o);
    // Large operators here are almost always sparse (embedded gates).
    if (m_.rows() >= 64) {
      const Eigen::SparseMatrix<Complex> a = m_.sparseView(Complex(0.0), 0.0);
      const Eigen::SparseMatrix<Complex> b = o.m_.sparseView(Complex(0.0), 0.0);
      return Operator(layout_, Matrix(a * b));
    }
    return Operator(layout_, m_ * o.m_);
  }
  Operator operator+(const Operator& o) const {
    require_same_layout(o);
    return Operator(layout_, m_ + o.m_);
  }
  Operator operator-(const Operator& o) const {
    require_same_layout(o);
    return Operator(layout_, m_ - o.m_);
  }
  Operator operator*(Complex s) const { return Operator(layout_, m_ * s); }

  /// Largest entrywise modulus.
  double max_abs() const { return m_.size() ? std::sqrt(m_.cwiseAbs2().maxCoeff()) : 0.0; }

 private:
  void require_same_layout(const Operator& o) const {
    if (!(layout_ == o.layout_)) throw HilbertError("operator layouts differ");
  }

  SystemLayout layout_;
  Matrix m_;
};

// ---------------------------------------------------------------------------
// Tensor products

inline Ket tensor(const Ket& u, const Ket& v) {
  SystemLayout layout = u.layout().concat(v.layout());
  const auto nu = static_cast<Eigen::Index>(u.dim());
  const auto nv = static_cast<Eigen::Index>(v.dim());
  Vector out(nu * nv);
  for (Eigen::Index i = 0; i < nu; ++i) out.segment(i * nv, nv) = u.amplitudes()[i] * v.amplitudes();
  return Ket(std::move(layout), std::move(out));
}

inline Ket tensor(std::initializer_list<Ket> kets) {
  if (kets.size() == 0) throw HilbertError("tensor of an empty ket list");
  auto it = kets.begin();
  Ket acc = *it++;
  for (; it != kets.end(); ++it) acc = tensor(acc, *it);
  return acc;
}

inline Operator tensor(const Operator& a, const Operator& b) {
  SystemLayout layout = a.layout().concat(b.layout());
  const auto na = static_cast<Eigen::Index>(a.dim());
  const auto nb = static_cast<Eigen::Index>(b.dim());
  Matrix out(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) out.block(i * nb, j * nb, nb, nb) = a.matrix()(i, j) * b.matrix();
  }
  return Operator(std::move(layout), std::move(out));
}

// ---------------------------------------------------------------------------
// Orthonormalization helpers

namespace detail {

// Orthogonalizes v against `basis` (assumed orthonormal) with two passes of
// modified Gram-Schmidt.
inline Vector orthogonalize(Vector v, const std::vector<Vector>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) v -= b.dot(v) * b;
  }
  return v;
}

inline constexpr double kDependentResidual = 1e-9;

// Orthonormal basis of the complement of span(basis), built from the standard
// basis vectors in index order.
inline std::vector<Vector> orthonormal_complement(const std::vector<Vector>& basis, Eigen::Index dim) {
  std::vector<Vector> all = basis;
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < dim && static_cast<Eigen::Index>(all.size()) < dim; ++i) {
    Vector e = Vector::Zero(dim);
    e[i] = 1.0;
    Vector r = orthogonalize(std::move(e), all);
    const double n = r.norm();
    if (n > kDependentResidual) {
      r /= n;
      all.push_back(r);
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline double max_orthonormality_defect(std::span<const Ket> kets) {
  double worst = 0.0;
  for (std::size_t i = 0; i < kets.size(); ++i) {
    for (std::size_t j = i; j < kets.size(); ++j) {
      const Complex g = kets[i].inner(kets[j]);
      worst = std::max(worst, std::abs(g - Complex(i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

using SparseMatrix = Eigen::SparseMatrix<Complex>;

// Operators built by embedding are mostly exact zeros; products between them
// are far cheaper in sparse form.
inline SparseMatrix sparse(const Matrix& m) { return m.sparseView(Complex(0.0), 0.0); }

/// max |a*b - subtract|, or max |a*b| when `subtract` is null.
inline double product_max_abs(const Matrix& a, const Matrix& b, const Matrix* subtract = nullptr) {
  const SparseMatrix prod = sparse(a) * sparse(b);
  Matrix dense = Matrix(prod);
  if (subtract) dense -= *subtract;
  return dense.size() ? std::sqrt(dense.cwiseAbs2().maxCoeff()) : 0.0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Projectors

/// Projector onto span(kets). Inputs are orthonormalized in order; linearly
/// dependent inputs add nothing.
inline Operator projector_from_kets(std::span<const Ket> kets) {
  if (kets.empty()) throw HilbertError("projector_from_kets needs at least one ket");
  const SystemLayout& layout = kets.front().layout();
  std::vector<Vector> basis;
  for (const auto& k : kets) {
    if (!(k.layout() == layout)) throw HilbertError("projector_from_kets: ket layouts differ");
    const double n = k.norm();
    if (n < 1e-14) throw HilbertError("projector_from_kets: zero vector input");
    Vector r = detail::orthogonalize(k.amplitudes() / n, basis);
    const double rn = r.norm();
    if (rn > detail::kDependentResidual) basis.push_back(r / rn);
  }
  const auto dim = static_cast<Eigen::Index>(layout.dim());
  Matrix p = Matrix::Zero(dim, dim);
  for (const auto& b : basis) p += b * b.adjoint();
  return Operator(layout, std::move(p));
}

inline Operator projector_from_kets(std::initializer_list<Ket> kets) {
  std::vector<Ket> v(kets);
  return projector_from_kets(std::span<const Ket>(v));
}

struct ProjectorCheck {
  bool ok = false;
  double hermiticity_deviation = 0.0;   // max |P - P^dagger|
  double idempotence_deviation = 0.0;   // max |P^2 - P|
  explicit operator bool() const { return ok; }
};

inline ProjectorCheck is_projector(const Operator& op, double tol = 1e-12) {
  ProjectorCheck c;
  const Matrix& m = op.matrix();
  c.hermiticity_deviation = m.size() ? std::sqrt((m - m.adjoint()).cwiseAbs2().maxCoeff()) : 0.0;
  c.idempotence_deviation = m.size() ? detail::product_max_abs(m, m, &m) : 0.0;
  c.ok = c.hermiticity_deviation <= tol && c.idempotence_deviation <= tol;
  return c;
}

/// Max entrywise deviation of U^dagger U from the identity.
inline double unitarity_deviation(const Operator& u) {
  const Matrix& m = u.matrix();
  if (m.size() == 0 || m.isIdentity(0.0)) return 0.0;
  const Matrix id = Matrix::Identity(m.rows(), m.cols());
  return detail::product_max_abs(m.adjoint(), m, &id);
}

inline bool is_unitary(const Operator& u, double tol = 1e-12) { return unitarity_deviation(u) <= tol; }

// ---------------------------------------------------------------------------
// Embedding

/// Pads `op` with identities on every subsystem of `full` that `op` does not
/// act on. The subsystems of `op` may appear in `full` in any order and need
/// not be adjacent.
inline Operator embed(const Operator& op, const SystemLayout& full) {
  const auto& subs = op.layout().subsystems();
  std::vector<std::size_t> where(subs.size());
  std::vector<bool> targeted(full.size(), false);
  for (std::size_t k = 0; k < subs.size(); ++k) {
    where[k] = full.index_of(subs[k].name);
    if (!(full.subsystems()[where[k]] == subs[k])) {
      throw HilbertError("embed: subsystem '" + subs[k].name + "' has a different dimension or labels");
    }
    targeted[where[k]] = true;
  }
  const std::size_t n = full.dim();
  const std::size_t sub_dim = op.dim();
  std::vector<std::size_t> sub_index(n);
  std::vector<std::size_t> rest_index(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = full.digits(i);
    std::size_t s = 0;
    for (std::size_t k = 0; k < subs.size(); ++k) s = s * subs[k].dim() + d[where[k]];
    std::size_t r = 0;
    for (std::size_t k = 0; k < full.size(); ++k) {
      if (!targeted[k]) r = r * full.subsystems()[k].dim() + d[k];
    }
    sub_index[i] = s;
    rest_index[i] = r;
  }
  // Group full indices by their untouched-subsystem coordinates.
  const std::size_t rest_dim = n / sub_dim;
  std::vector<std::vector<std::size_t>> by_rest(rest_dim, std::vector<std::size_t>(sub_dim));
  for (std::size_t i = 0; i < n; ++i) by_rest[rest_index[i]][sub_index[i]] = i;

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const Matrix& m = op.matrix();
  for (const auto& group : by_rest) {
    for (std::size_t a = 0; a < sub_dim; ++a) {
      for (std::size_t b = 0; b < sub_dim; ++b) {
        out(static_cast<Eigen::Index>(group[a]), static_cast<Eigen::Index>(group[b])) =
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
  }
  return Operator(full, std::move(out));
}

/// Ket re-expressed in a layout holding the same subsystems in another order.
inline Ket reorder(const Ket& k, const SystemLayout& target) {
  const auto& src = k.layout();
  if (src.size() != target.size()) throw HilbertError("reorder: subsystem sets differ");
  std::vector<std::size_t> where(src.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    const std::size_t i = src.index_of(target.subsystems()[j].name);
    if (!(src.subsystems()[i] == target.subsystems()[j])) throw HilbertError("reorder: subsystem mismatch");
    where[j] = i;
  }
  Vector out(k.amplitudes().size());
  std::vector<std::size_t> td(target.size());
  for (std::size_t i = 0; i < src.dim(); ++i) {
    const auto d = src.digits(i);
    for (std::size_t j = 0; j < target.size(); ++j) td[j] = d[where[j]];
    out[static_cast<Eigen::Index>(target.encode(td))] = k.amplitudes()[static_cast<Eigen::Index>(i)];
  }
  return Ket(target, std::move(out));
}

// ---------------------------------------------------------------------------
// Unitary completion

struct Rule {
  Ket input;
  Ket output;
};

/**
 * Unitary on `layout` that maps every rule input to its output exactly.
 *
 * The rules define a partial isometry. The complement of the input span is
 * sent to the complement of the output span by a canonical pairing: both
 * complements are orthonormalized from the standard basis in index order and
 * the i-th input complement vector maps to the i-th output complement vector.
 */
inline Operator complete_unitary(std::span<const Rule> rules, const SystemLayout& layout, double tol = 1e-10) {
  const auto dim = static_cast<Eigen::Index>(layout.dim());
  if (rules.empty()) return Operator::identity(layout);
  if (static_cast<Eigen::Index>(rules.size()) > dim) throw HilbertError("more rules than the space dimension");
  std::vector<Ket> ins;
  std::vector<Ket> outs;
  for (const auto& r : rules) {
    if (!(r.input.layout() == layout) || !(r.output.layout() == layout)) {
      throw HilbertError("complete_unitary: rule ket layout does not match");
    }
    ins.push_back(r.input);
    outs.push_back(r.output);
  }
  if (detail::max_orthonormality_defect(ins) > tol) throw HilbertError("complete_unitary: rule inputs are not orthonormal");
  if (detail::max_orthonormality_defect(outs) > tol) {
    throw HilbertError("complete_unitary: rule outputs are not orthonormal");
  }
  std::vector<Vector> in_basis;
  std::vector<Vector> out_basis;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    in_basis.push_back(ins[i].amplitudes());
    out_basis.push_back(outs[i].amplitudes());
  }
  const auto in_rest = detail::orthonormal_complement(in_basis, dim);
  const auto out_rest = detail::orthonormal_complement(out_basis, dim);
  if (in_rest.size() != out_rest.size()) throw HilbertError("complete_unitary: complement dimensions differ");

  Matrix u = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < rules.size(); ++i) u += out_basis[i] * in_basis[i].adjoint();
  for (std::size_t i = 0; i < in_rest.size(); ++i) u += out_rest[i] * in_rest[i].adjoint();
  return Operator(layout, std::move(u));
}

inline Operator complete_unitary(std::initializer_list<Rule> rules, const SystemLayout& layout, double tol = 1e-10) {
  std::vector<Rule> v(rules);
  return complete_unitary(std::span<const Rule>(v), layout, tol);
}

}  // namespace qhist
