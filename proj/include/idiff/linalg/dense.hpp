#pragma once

/// \file dense.hpp
/// \brief Dense column-major vectors and matrices over any differentiable scalar.
///
/// `DenseVector` / `DenseMatrix` are the double-precision instances. The
/// element type is a template parameter so that user-written optimality
/// mappings run unchanged on dual numbers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idiff/autodiff/dual.hpp"
#include "idiff/errors.hpp"

namespace idiff {

template <class T>
class BasicVector {
 public:
  using value_type = T;

  BasicVector() = default;
  explicit BasicVector(std::size_t n, T fill = T(0.0)) : data_(n, fill) {}

  /// Construction from user data; rejects NaN and Inf.
  BasicVector(std::initializer_list<T> init) : data_(init) { check_finite(); }
  explicit BasicVector(std::vector<T> data) : data_(std::move(data)) { check_finite(); }

  static BasicVector zeros(std::size_t n) { return BasicVector(n); }
  static BasicVector ones(std::size_t n) { return BasicVector(n, T(1.0)); }
  static BasicVector unit(std::size_t n, std::size_t i) {
    BasicVector e(n);
    e[i] = T(1.0);
    return e;
  }

  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  const std::vector<T>& storage() const { return data_; }

  /// Copy of entries [first, first + count).
  [[nodiscard]] BasicVector segment(std::size_t first, std::size_t count) const {
    detail::require_dims(first + count <= size(), "segment out of range");
    BasicVector out(count);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(first), count, out.data_.begin());
    return out;
  }

  void set_segment(std::size_t first, const BasicVector& v) {
    detail::require_dims(first + v.size() <= size(), "set_segment out of range");
    std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(first));
  }

  template <class U>
  BasicVector& operator+=(const BasicVector<U>& o) {
    detail::require_dims(o.size() == size(), "vector += size mismatch");
    for (std::size_t i = 0; i < size(); ++i) data_[i] += o[i];
    return *this;
  }
  template <class U>
  BasicVector& operator-=(const BasicVector<U>& o) {
    detail::require_dims(o.size() == size(), "vector -= size mismatch");
    for (std::size_t i = 0; i < size(); ++i) data_[i] -= o[i];
    return *this;
  }
  BasicVector& operator*=(double s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

 private:
  void check_finite() const {
    for (const auto& x : data_) {
      if (!std::isfinite(value_of(x))) throw DomainError("vector entry is not finite");
    }
  }

  std::vector<T> data_;
};

using DenseVector = BasicVector<double>;

/// Vector of first-order duals: value + tangent pair for one direction.
using DualVector = BasicVector<Dual1>;

template <class A, class B>
using sum_t = decltype(std::declval<A>() + std::declval<B>());
template <class A, class B>
using prod_t = decltype(std::declval<A>() * std::declval<B>());

template <class A, class B>
BasicVector<sum_t<A, B>> operator+(const BasicVector<A>& a, const BasicVector<B>& b) {
  detail::require_dims(a.size() == b.size(), "vector + size mismatch");
  BasicVector<sum_t<A, B>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <class A, class B>
BasicVector<sum_t<A, B>> operator-(const BasicVector<A>& a, const BasicVector<B>& b) {
  detail::require_dims(a.size() == b.size(), "vector - size mismatch");
  BasicVector<sum_t<A, B>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <class A>
BasicVector<A> operator-(const BasicVector<A>& a) {
  BasicVector<A> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = -a[i];
  return out;
}

/// Scalar times vector; the scalar may be a dual.
template <class S, class A>
  requires Scalar<S>
BasicVector<prod_t<S, A>> operator*(const S& s, const BasicVector<A>& a) {
  BasicVector<prod_t<S, A>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}
template <class S, class A>
  requires Scalar<S>
BasicVector<prod_t<S, A>> operator*(const BasicVector<A>& a, const S& s) {
  return s * a;
}
template <class S, class A>
  requires Scalar<S>
BasicVector<prod_t<A, S>> operator/(const BasicVector<A>& a, const S& s) {
  BasicVector<prod_t<A, S>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / s;
  return out;
}

/// Adds a scalar to every entry.
template <class S, class A>
  requires Scalar<S>
BasicVector<sum_t<A, S>> operator+(const BasicVector<A>& a, const S& s) {
  BasicVector<sum_t<A, S>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s;
  return out;
}
template <class S, class A>
  requires Scalar<S>
BasicVector<sum_t<A, S>> operator-(const BasicVector<A>& a, const S& s) {
  BasicVector<sum_t<A, S>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - s;
  return out;
}

/// Elementwise (Hadamard) product.
template <class A, class B>
BasicVector<prod_t<A, B>> cwise_mul(const BasicVector<A>& a, const BasicVector<B>& b) {
  detail::require_dims(a.size() == b.size(), "cwise_mul size mismatch");
  BasicVector<prod_t<A, B>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <class A, class B>
BasicVector<prod_t<A, B>> cwise_div(const BasicVector<A>& a, const BasicVector<B>& b) {
  detail::require_dims(a.size() == b.size(), "cwise_div size mismatch");
  BasicVector<prod_t<A, B>> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] / b[i];
  return out;
}

/// Applies `fn` to each entry.
template <class A, class Fn>
auto map(const BasicVector<A>& a, Fn&& fn) {
  using R = std::decay_t<decltype(fn(a[0]))>;
  BasicVector<R> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

template <class A, class B>
prod_t<A, B> dot(const BasicVector<A>& a, const BasicVector<B>& b) {
  detail::require_dims(a.size() == b.size(), "dot size mismatch");
  prod_t<A, B> acc(0.0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <class A>
A sum(const BasicVector<A>& a) {
  A acc(0.0);
  for (const auto& x : a) acc += x;
  return acc;
}

template <class A>
A squared_norm(const BasicVector<A>& a) {
  return dot(a, a);
}

/// Euclidean norm.
template <class A>
A norm(const BasicVector<A>& a) {
  using idiff::sqrt;
  return sqrt(squared_norm(a));
}

template <class A>
A norm1(const BasicVector<A>& a) {
  using idiff::abs;
  A acc(0.0);
  for (const auto& x : a) acc += abs(x);
  return acc;
}

template <class A>
double norm_inf(const BasicVector<A>& a) {
  double m = 0.0;
  for (const auto& x : a) m = std::max(m, std::fabs(value_of(x)));
  return m;
}

/// Lifts a double vector into scalar type S with zero tangents.
template <class S>
BasicVector<S> promote(const DenseVector& v) {
  BasicVector<S> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = S(v[i]);
  return out;
}

/// Converts entries to scalar type R (e.g. double -> Dual1 with zero tangent).
template <class R, class S>
BasicVector<R> promote_to(const BasicVector<S>& v) {
  BasicVector<R> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = R(v[i]);
  return out;
}

template <class A>
DenseVector values_of(const BasicVector<A>& v) {
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = value_of(v[i]);
  return out;
}

inline DualVector make_dual(const DenseVector& primal, const DenseVector& tangent) {
  detail::require_dims(primal.size() == tangent.size(), "dual primal/tangent size mismatch");
  DualVector out(primal.size());
  for (std::size_t i = 0; i < primal.size(); ++i) out[i] = Dual1(primal[i], tangent[i]);
  return out;
}

inline DenseVector tangents_of(const DualVector& v) {
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].eps;
  return out;
}

/// Concatenates vectors end to end.
template <class A>
BasicVector<A> concat(std::initializer_list<const BasicVector<A>*> parts) {
  std::size_t n = 0;
  for (const auto* p : parts) n += p->size();
  BasicVector<A> out(n);
  std::size_t at = 0;
  for (const auto* p : parts) {
    out.set_segment(at, *p);
    at += p->size();
  }
  return out;
}

inline bool all_finite(const DenseVector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline std::ostream& operator<<(std::ostream& os, const DenseVector& v) {
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os << ']';
}

// ---------------------------------------------------------------------------

template <class T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T(0.0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Column-major data from user input; rejects NaN and Inf.
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> col_major)
      : rows_(rows), cols_(cols), data_(std::move(col_major)) {
    detail::require_dims(data_.size() == rows_ * cols_, "matrix data length != rows*cols");
    for (const auto& x : data_) {
      if (!std::isfinite(value_of(x))) throw DomainError("matrix entry is not finite");
    }
  }

  /// Row-wise literal, e.g. `DenseMatrix::from_rows({{4, 1}, {1, 3}})`.
  static BasicMatrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<T> data(r * c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      detail::require_dims(row.size() == c, "ragged matrix literal");
      std::size_t j = 0;
      for (const auto& x : row) data[j++ * r + i] = x;
      ++i;
    }
    return BasicMatrix(r, c, std::move(data));
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1.0);
    return m;
  }

  static BasicMatrix diagonal(const BasicVector<T>& d) {
    BasicMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  /// Matrix whose columns are taken from consecutive entries of `v`.
  static BasicMatrix reshape(const BasicVector<T>& v, std::size_t rows, std::size_t cols) {
    detail::require_dims(v.size() == rows * cols, "reshape size mismatch");
    BasicMatrix m(rows, cols);
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
  }

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  const std::vector<T>& storage() const { return data_; }

  [[nodiscard]] BasicVector<T> col(std::size_t j) const {
    BasicVector<T> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }
  [[nodiscard]] BasicVector<T> row(std::size_t i) const {
    BasicVector<T> out(cols_);
    for (std::size_t j = 0; j < cols_; ++j) out[j] = (*this)(i, j);
    return out;
  }
  void set_col(std::size_t j, const BasicVector<T>& v) {
    detail::require_dims(v.size() == rows_, "set_col size mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }
  void set_row(std::size_t i, const BasicVector<T>& v) {
    detail::require_dims(v.size() == cols_, "set_row size mismatch");
    for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = v[j];
  }

  /// Column-major flattening.
  [[nodiscard]] BasicVector<T> flatten() const {
    BasicVector<T> out(data_.size());
    std::copy(data_.begin(), data_.end(), out.begin());
    return out;
  }

  [[nodiscard]] BasicMatrix transpose() const {
    BasicMatrix t(cols_, rows_);
    for (std::size_t j = 0; j < cols_; ++j)
      for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
    return t;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using DenseMatrix = BasicMatrix<double>;

template <class A, class B>
BasicVector<prod_t<A, B>> operator*(const BasicMatrix<A>& m, const BasicVector<B>& x) {
  detail::require_dims(m.cols() == x.size(), "matvec size mismatch");
  BasicVector<prod_t<A, B>> out(m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const B& xj = x[j];
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] += m(i, j) * xj;
  }
  return out;
}

/// mᵀx without forming the transpose.
template <class A, class B>
BasicVector<prod_t<A, B>> transpose_mul(const BasicMatrix<A>& m, const BasicVector<B>& x) {
  detail::require_dims(m.rows() == x.size(), "transpose_mul size mismatch");
  BasicVector<prod_t<A, B>> out(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    prod_t<A, B> acc(0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, j) * x[i];
    out[j] = acc;
  }
  return out;
}

template <class A, class B>
BasicMatrix<prod_t<A, B>> operator*(const BasicMatrix<A>& a, const BasicMatrix<B>& b) {
  detail::require_dims(a.cols() == b.rows(), "matmul size mismatch");
  BasicMatrix<prod_t<A, B>> out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const B& blj = b(l, j);
      for (std::size_t i = 0; i < a.rows(); ++i) out(i, j) += a(i, l) * blj;
    }
  return out;
}

template <class A, class B>
BasicMatrix<sum_t<A, B>> operator+(const BasicMatrix<A>& a, const BasicMatrix<B>& b) {
  detail::require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "matrix + size mismatch");
  BasicMatrix<sum_t<A, B>> out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] + b.data()[k];
  return out;
}

template <class A, class B>
BasicMatrix<sum_t<A, B>> operator-(const BasicMatrix<A>& a, const BasicMatrix<B>& b) {
  detail::require_dims(a.rows() == b.rows() && a.cols() == b.cols(), "matrix - size mismatch");
  BasicMatrix<sum_t<A, B>> out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = a.data()[k] - b.data()[k];
  return out;
}

template <class S, class A>
  requires Scalar<S>
BasicMatrix<prod_t<S, A>> operator*(const S& s, const BasicMatrix<A>& a) {
  BasicMatrix<prod_t<S, A>> out(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) out.data()[k] = s * a.data()[k];
  return out;
}

/// Frobenius norm.
template <class A>
double frobenius_norm(const BasicMatrix<A>& a) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += value_of(a.data()[k]) * value_of(a.data()[k]);
  return std::sqrt(acc);
}

inline double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::fabs(a.data()[k]));
  return m;
}

inline std::ostream& operator<<(std::ostream& os, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << (i ? "\n[" : "[");
    for (std::size_t j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << m(i, j);
    os << ']';
  }
  return os;
}

}  // namespace idiff
