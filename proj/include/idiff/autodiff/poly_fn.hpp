#pragma once

#include <functional>
#include <type_traits>

#include "idiff/autodiff/dual.hpp"
#include "idiff/linalg/dense.hpp"

namespace idiff {

/// A generic callable captured at double, Dual1 and Dual2 so it can sit
/// behind a non-template interface and still be differentiated.
template <template <class> class Sig>
struct PolyFn {
  std::function<Sig<double>> at0;
  std::function<Sig<Dual1>> at1;
  std::function<Sig<Dual2>> at2;

  template <class S>
  const std::function<Sig<S>>& at() const {
    if constexpr (std::is_same_v<S, double>) return at0;
    else if constexpr (std::is_same_v<S, Dual1>) return at1;
    else {
      static_assert(std::is_same_v<S, Dual2>, "PolyFn holds double, Dual1 and Dual2");
      return at2;
    }
  }

  explicit operator bool() const { return static_cast<bool>(at0); }
};

template <template <class> class Sig, class Fn>
PolyFn<Sig> make_poly(const Fn& fn) {
  PolyFn<Sig> p;
  p.at0 = fn;
  p.at1 = fn;
  p.at2 = fn;
  return p;
}

template <class S>
using UnaryVecSig = BasicVector<S>(const BasicVector<S>&);
template <class S>
using BinaryVecSig = BasicVector<S>(const BasicVector<S>&, const BasicVector<S>&);
template <class S>
using SteppedVecSig = BasicVector<S>(const BasicVector<S>&, const BasicVector<S>&, double);

}  // namespace idiff
