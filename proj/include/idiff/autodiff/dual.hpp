#pragma once

/// \file dual.hpp
/// \brief Forward-mode dual numbers, nestable for second-order products.
///
/// `Dual<T>` carries a value and one tangent direction. Nesting
/// `Dual<Dual<double>>` yields mixed second derivatives (Hessian-vector
/// products) without a reverse tape.
///
/// Non-differentiable points (max, clip, abs, soft-thresholding) use the
/// zero-subgradient convention: the derivative at the kink is 0.

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <type_traits>
#include <utility>

namespace idiff {

namespace detail {

inline constexpr double kKinkWindow = 1e-9;

/// Count of dual evaluations that landed within kKinkWindow of a kink on this
/// thread. Callers snapshot it before and after an evaluation.
inline std::size_t& kink_hits() {
  thread_local std::size_t hits = 0;
  return hits;
}

inline void note_kink(double distance) {
  if (std::fabs(distance) <= kKinkWindow) ++kink_hits();
}

}  // namespace detail

template <class T>
struct Dual {
  T val{};
  T eps{};

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v), eps(0.0) {}  // NOLINT(google-explicit-constructor)
  constexpr Dual(T v, T e)
    requires(!std::is_same_v<T, double>)
      : val(std::move(v)), eps(std::move(e)) {}
  constexpr Dual(double v, double e) : val(v), eps(e) {}
};

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual<double>>;

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};
template <class T>
inline constexpr bool is_dual_v = is_dual<T>::value;

/// Scalar types the library can differentiate through.
template <class S>
concept Scalar = std::is_same_v<S, double> || is_dual_v<S>;

constexpr double value_of(double x) { return x; }
template <class T>
constexpr double value_of(const Dual<T>& x) {
  return value_of(x.val);
}

// ---- arithmetic -----------------------------------------------------------

template <class T>
constexpr Dual<T> operator-(const Dual<T>& a) {
  return {-a.val, -a.eps};
}
template <class T>
constexpr Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.val + b.val, a.eps + b.eps};
}
template <class T>
constexpr Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.val - b.val, a.eps - b.eps};
}
template <class T>
constexpr Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.val * b.val, a.eps * b.val + a.val * b.eps};
}
template <class T>
constexpr Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T q = a.val / b.val;
  return {q, (a.eps - q * b.eps) / b.val};
}

template <class T>
constexpr Dual<T> operator+(const Dual<T>& a, double b) {
  return {a.val + b, a.eps};
}
template <class T>
constexpr Dual<T> operator+(double a, const Dual<T>& b) {
  return {a + b.val, b.eps};
}
template <class T>
constexpr Dual<T> operator-(const Dual<T>& a, double b) {
  return {a.val - b, a.eps};
}
template <class T>
constexpr Dual<T> operator-(double a, const Dual<T>& b) {
  return {a - b.val, -b.eps};
}
template <class T>
constexpr Dual<T> operator*(const Dual<T>& a, double b) {
  return {a.val * b, a.eps * b};
}
template <class T>
constexpr Dual<T> operator*(double a, const Dual<T>& b) {
  return {a * b.val, a * b.eps};
}
template <class T>
constexpr Dual<T> operator/(const Dual<T>& a, double b) {
  return {a.val / b, a.eps / b};
}
template <class T>
constexpr Dual<T> operator/(double a, const Dual<T>& b) {
  T q = a / b.val;
  return {q, -(q * b.eps) / b.val};
}

template <class T, class U>
constexpr Dual<T>& operator+=(Dual<T>& a, const U& b) {
  a = a + b;
  return a;
}
template <class T, class U>
constexpr Dual<T>& operator-=(Dual<T>& a, const U& b) {
  a = a - b;
  return a;
}
template <class T, class U>
constexpr Dual<T>& operator*=(Dual<T>& a, const U& b) {
  a = a * b;
  return a;
}
template <class T, class U>
constexpr Dual<T>& operator/=(Dual<T>& a, const U& b) {
  a = a / b;
  return a;
}

// ---- comparisons act on the primal value ----------------------------------

template <class A, class B>
  requires(is_dual_v<A> || is_dual_v<B>)
constexpr bool operator<(const A& a, const B& b) {
  return value_of(a) < value_of(b);
}
template <class A, class B>
  requires(is_dual_v<A> || is_dual_v<B>)
constexpr bool operator>(const A& a, const B& b) {
  return value_of(a) > value_of(b);
}
template <class A, class B>
  requires(is_dual_v<A> || is_dual_v<B>)
constexpr bool operator<=(const A& a, const B& b) {
  return value_of(a) <= value_of(b);
}
template <class A, class B>
  requires(is_dual_v<A> || is_dual_v<B>)
constexpr bool operator>=(const A& a, const B& b) {
  return value_of(a) >= value_of(b);
}

// ---- elementary functions -------------------------------------------------
//
// Overloads for double live in this namespace too, so generic code can call
// idiff::exp(x) for every scalar type.

inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double abs(double x) { return std::fabs(x); }
inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
inline double max(double a, double b) { return a > b ? a : b; }
inline double min(double a, double b) { return a < b ? a : b; }

template <class T>
Dual<T> exp(const Dual<T>& a) {
  T e = exp(a.val);
  return {e, e * a.eps};
}

template <class T>
Dual<T> log(const Dual<T>& a) {
  return {log(a.val), a.eps / a.val};
}

/// sqrt with derivative 0 at the origin.
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  T s = sqrt(a.val);
  if (value_of(s) == 0.0) return {s, T(0.0)};
  return {s, a.eps / (2.0 * s)};
}

template <class T>
Dual<T> abs(const Dual<T>& a) {
  double v = value_of(a);
  detail::note_kink(v);
  if (v > 0.0) return a;
  if (v < 0.0) return -a;
  return {abs(a.val), T(0.0)};
}

template <class T>
constexpr double sign(const Dual<T>& a) {
  return sign(value_of(a));
}

/// max(a, c) for a constant threshold; a tie takes the constant branch.
template <class T>
Dual<T> max(const Dual<T>& a, double c) {
  detail::note_kink(value_of(a) - c);
  if (value_of(a) > c) return a;
  return Dual<T>(c);
}
template <class T>
Dual<T> min(const Dual<T>& a, double c) {
  detail::note_kink(value_of(a) - c);
  if (value_of(a) < c) return a;
  return Dual<T>(c);
}
template <class T>
Dual<T> max(const Dual<T>& a, const Dual<T>& b) {
  detail::note_kink(value_of(a) - value_of(b));
  return value_of(a) > value_of(b) ? a : b;
}
template <class T>
Dual<T> min(const Dual<T>& a, const Dual<T>& b) {
  detail::note_kink(value_of(a) - value_of(b));
  return value_of(a) < value_of(b) ? a : b;
}

/// clip(x, lo, hi) = max(min(x, hi), lo); derivative 0 on and beyond the bounds.
template <class S, class L, class H>
S clip(const S& x, const L& lo, const H& hi) {
  if constexpr (is_dual_v<S>) {
    detail::note_kink(value_of(x) - value_of(lo));
    detail::note_kink(value_of(x) - value_of(hi));
  }
  if (x >= hi) return S(hi);
  if (x <= lo) return S(lo);
  return x;
}

template <class T>
std::ostream& operator<<(std::ostream& os, const Dual<T>& a) {
  return os << '(' << a.val << " + " << a.eps << "e)";
}

using Dual3 = Dual<Dual2>;

/// Tangent of a first-order dual.
inline double tangent_of(const Dual1& a) { return a.eps; }

}  // namespace idiff
