#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <utility>

#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"

namespace idiff {

/// Matrix-free linear operator R^dim_in -> R^dim_out.
///
/// When no transpose is supplied, `apply_transpose` materializes the operator
/// column by column (dim_in forward applies) on first use and caches the
/// dense matrix. The cache is shared between copies.
class LinearMap {
 public:
  using Apply = std::function<DenseVector(const DenseVector&)>;

  LinearMap(std::size_t dim_out, std::size_t dim_in, Apply apply, Apply apply_transpose = {})
      : dim_out_(dim_out),
        dim_in_(dim_in),
        apply_(std::move(apply)),
        apply_transpose_(std::move(apply_transpose)),
        cache_(std::make_shared<Cache>()) {
    detail::require_dims(dim_out > 0 && dim_in > 0, "LinearMap dimensions must be positive");
  }

  static LinearMap from_matrix(DenseMatrix m) {
    auto shared = std::make_shared<const DenseMatrix>(std::move(m));
    return LinearMap(
        shared->rows(), shared->cols(), [shared](const DenseVector& v) { return *shared * v; },
        [shared](const DenseVector& w) { return transpose_mul(*shared, w); });
  }

  static LinearMap identity(std::size_t n) {
    auto id = [](const DenseVector& v) { return v; };
    return LinearMap(n, n, id, id);
  }

  [[nodiscard]] std::size_t dim_out() const { return dim_out_; }
  [[nodiscard]] std::size_t dim_in() const { return dim_in_; }
  [[nodiscard]] bool square() const { return dim_in_ == dim_out_; }
  [[nodiscard]] bool has_transpose() const { return static_cast<bool>(apply_transpose_); }

  [[nodiscard]] DenseVector apply(const DenseVector& v) const {
    detail::require_dims(v.size() == dim_in_, "LinearMap::apply input size mismatch");
    DenseVector out = apply_(v);
    detail::require_dims(out.size() == dim_out_, "LinearMap::apply output size mismatch");
    return out;
  }
  DenseVector operator()(const DenseVector& v) const { return apply(v); }

  [[nodiscard]] DenseVector apply_transpose(const DenseVector& w) const {
    detail::require_dims(w.size() == dim_out_, "LinearMap::apply_transpose input size mismatch");
    if (apply_transpose_) return apply_transpose_(w);
    return transpose_mul(materialize(), w);
  }

  /// Dense matrix of the operator, built from dim_in forward applies.
  [[nodiscard]] const DenseMatrix& materialize() const {
    std::call_once(cache_->once, [this] {
      DenseMatrix m(dim_out_, dim_in_);
      for (std::size_t j = 0; j < dim_in_; ++j) m.set_col(j, apply(DenseVector::unit(dim_in_, j)));
      cache_->matrix = std::move(m);
    });
    return cache_->matrix;
  }

  /// The adjoint operator.
  [[nodiscard]] LinearMap transposed() const {
    if (apply_transpose_) return LinearMap(dim_in_, dim_out_, apply_transpose_, apply_);
    return from_matrix(materialize().transpose());
  }

  /// Operator with every output negated.
  [[nodiscard]] LinearMap negated() const {
    Apply fwd = [f = apply_](const DenseVector& v) { return -f(v); };
    Apply bwd;
    if (apply_transpose_) bwd = [t = apply_transpose_](const DenseVector& w) { return -t(w); };
    return LinearMap(dim_out_, dim_in_, std::move(fwd), std::move(bwd));
  }

 private:
  struct Cache {
    std::once_flag once;
    DenseMatrix matrix;
  };

  std::size_t dim_out_;
  std::size_t dim_in_;
  Apply apply_;
  Apply apply_transpose_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace idiff
