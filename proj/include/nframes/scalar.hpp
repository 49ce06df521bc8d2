// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Forward-mode scalars: Dual carries one first-order direction, HyperDual
// carries two plus their cross term. Every elementary function routes its
// value through the same libm call as the plain double path, so a scalar with
// zero perturbations reproduces double arithmetic bit for bit.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "nframes/error.hpp"

namespace nframes {

struct Dual {
  double v = 0.0;
  double d = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double value) : v(value) {}  // NOLINT: implicit constant lift
  constexpr Dual(double value, double deriv) : v(value), d(deriv) {}
};

struct HyperDual {
  double v = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
  double e12 = 0.0;

  constexpr HyperDual() = default;
  constexpr HyperDual(double value) : v(value) {}  // NOLINT: implicit constant lift
  constexpr HyperDual(double value, double a, double b, double ab)
      : v(value), e1(a), e2(b), e12(ab) {}
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }
inline double value_of(const HyperDual& x) { return x.v; }

// Chain rule for a unary function with value f0 and derivatives f1, f2 at x.v.
inline double chain(double, double f0, double, double) { return f0; }
inline Dual chain(const Dual& x, double f0, double f1, double) { return {f0, f1 * x.d}; }
inline HyperDual chain(const HyperDual& x, double f0, double f1, double f2) {
  return {f0, f1 * x.e1, f1 * x.e2, f1 * x.e12 + f2 * x.e1 * x.e2};
}

// Dual arithmetic.
inline Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
inline Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(const Dual& a, const Dual& b) {
  const double q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}
inline Dual operator+(const Dual& a, double b) { return {a.v + b, a.d}; }
inline Dual operator+(double a, const Dual& b) { return {a + b.v, b.d}; }
inline Dual operator-(const Dual& a, double b) { return {a.v - b, a.d}; }
inline Dual operator-(double a, const Dual& b) { return {a - b.v, -b.d}; }
inline Dual operator*(const Dual& a, double b) { return {a.v * b, a.d * b}; }
inline Dual operator*(double a, const Dual& b) { return {a * b.v, a * b.d}; }
inline Dual operator/(const Dual& a, double b) { return {a.v / b, a.d / b}; }
inline Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
inline Dual& operator+=(Dual& a, const Dual& b) { return a = a + b; }
inline Dual& operator-=(Dual& a, const Dual& b) { return a = a - b; }
inline Dual& operator*=(Dual& a, const Dual& b) { return a = a * b; }

// HyperDual arithmetic.
inline HyperDual operator+(const HyperDual& a, const HyperDual& b) {
  return {a.v + b.v, a.e1 + b.e1, a.e2 + b.e2, a.e12 + b.e12};
}
inline HyperDual operator-(const HyperDual& a, const HyperDual& b) {
  return {a.v - b.v, a.e1 - b.e1, a.e2 - b.e2, a.e12 - b.e12};
}
inline HyperDual operator-(const HyperDual& a) { return {-a.v, -a.e1, -a.e2, -a.e12}; }
inline HyperDual operator*(const HyperDual& a, const HyperDual& b) {
  return {a.v * b.v, a.e1 * b.v + a.v * b.e1, a.e2 * b.v + a.v * b.e2,
          a.e12 * b.v + a.e1 * b.e2 + a.e2 * b.e1 + a.v * b.e12};
}
inline HyperDual operator/(const HyperDual& a, const HyperDual& b) {
  // a * (1/b), with 1/b expanded through the chain rule.
  const double inv = 1.0 / b.v;
  const HyperDual r = chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
  HyperDual out = a * r;
  out.v = a.v / b.v;
  return out;
}
inline HyperDual operator+(const HyperDual& a, double b) { return {a.v + b, a.e1, a.e2, a.e12}; }
inline HyperDual operator+(double a, const HyperDual& b) { return {a + b.v, b.e1, b.e2, b.e12}; }
inline HyperDual operator-(const HyperDual& a, double b) { return {a.v - b, a.e1, a.e2, a.e12}; }
inline HyperDual operator-(double a, const HyperDual& b) { return {a - b.v, -b.e1, -b.e2, -b.e12}; }
inline HyperDual operator*(const HyperDual& a, double b) { return {a.v * b, a.e1 * b, a.e2 * b, a.e12 * b}; }
inline HyperDual operator*(double a, const HyperDual& b) { return b * a; }
inline HyperDual operator/(const HyperDual& a, double b) { return {a.v / b, a.e1 / b, a.e2 / b, a.e12 / b}; }
inline HyperDual operator/(double a, const HyperDual& b) { return HyperDual(a) / b; }
inline HyperDual& operator+=(HyperDual& a, const HyperDual& b) { return a = a + b; }
inline HyperDual& operator-=(HyperDual& a, const HyperDual& b) { return a = a - b; }
inline HyperDual& operator*=(HyperDual& a, const HyperDual& b) { return a = a * b; }

// Elementary functions, generic over double, Dual and HyperDual.
namespace ad {

template <class S> S sin(const S& x) {
  const double s = std::sin(value_of(x));
  return chain(x, s, std::cos(value_of(x)), -s);
}
template <class S> S cos(const S& x) {
  const double c = std::cos(value_of(x));
  return chain(x, c, -std::sin(value_of(x)), -c);
}
template <class S> S tan(const S& x) {
  const double t = std::tan(value_of(x));
  const double sec2 = 1.0 + t * t;
  return chain(x, t, sec2, 2.0 * t * sec2);
}
template <class S> S exp(const S& x) {
  const double e = std::exp(value_of(x));
  return chain(x, e, e, e);
}
template <class S> S log(const S& x) {
  const double v = value_of(x);
  return chain(x, std::log(v), 1.0 / v, -1.0 / (v * v));
}
template <class S> S sqrt(const S& x) {
  const double r = std::sqrt(value_of(x));
  return chain(x, r, 0.5 / r, -0.25 / (r * value_of(x)));
}
template <class S> S sinh(const S& x) {
  const double s = std::sinh(value_of(x));
  return chain(x, s, std::cosh(value_of(x)), s);
}
template <class S> S cosh(const S& x) {
  const double c = std::cosh(value_of(x));
  return chain(x, c, std::sinh(value_of(x)), c);
}
template <class S> S tanh(const S& x) {
  const double t = std::tanh(value_of(x));
  const double sech2 = 1.0 - t * t;
  return chain(x, t, sech2, -2.0 * t * sech2);
}
template <class S> S atan(const S& x) {
  const double v = value_of(x);
  const double q = 1.0 / (1.0 + v * v);
  return chain(x, std::atan(v), q, -2.0 * v * q * q);
}

// x^n for integer n.
template <class S> S powi(const S& x, long n) {
  const double v = value_of(x);
  const double nd = static_cast<double>(n);
  const double f0 = std::pow(v, nd);
  const double f1 = n == 0 ? 0.0 : nd * std::pow(v, nd - 1.0);
  const double f2 = (n == 0 || n == 1) ? 0.0 : nd * (nd - 1.0) * std::pow(v, nd - 2.0);
  return chain(x, f0, f1, f2);
}

// a^b for a > 0 as exp(b log a); the value component uses std::pow.
inline double powr(double a, double b) { return std::pow(a, b); }
template <class S> S powr(const S& a, const S& b) {
  S r = ad::exp(b * ad::log(a));
  r.v = std::pow(a.v, b.v);
  return r;
}

}  // namespace ad

namespace detail {
template <class Fn>
auto with_point(std::span<const double> x, Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError& e) {
    if (!e.point().empty()) throw;
    throw DomainError(e, std::vector<double>(x.begin(), x.end()));
  }
}
}  // namespace detail

// First partial derivative of f at x in direction i, f callable on span<const Dual>.
template <class F>
double derive1(F&& f, std::span<const double> x, std::size_t i) {
  return detail::with_point(x, [&] {
    std::vector<Dual> env(x.begin(), x.end());
    env[i].d = 1.0;
    return f(std::span<const Dual>(env)).d;
  });
}

// Second partial derivative d^2 f / dx_i dx_j, f callable on span<const HyperDual>.
template <class F>
double derive2(F&& f, std::span<const double> x, std::size_t i, std::size_t j) {
  return detail::with_point(x, [&] {
    std::vector<HyperDual> env(x.begin(), x.end());
    env[i].e1 = 1.0;
    env[j].e2 = 1.0;
    return f(std::span<const HyperDual>(env)).e12;
  });
}

// Central difference (f(x+h e_i) - f(x-h e_i)) / 2h, f callable on span<const double>.
template <class F>
double fd_check(F&& f, std::span<const double> x, std::size_t i, double h = 1e-5) {
  std::vector<double> p(x.begin(), x.end());
  const double xi = p[i];
  p[i] = xi + h;
  const double fp = detail::with_point(p, [&] { return f(std::span<const double>(p)); });
  p[i] = xi - h;
  const double fm = detail::with_point(p, [&] { return f(std::span<const double>(p)); });
  return (fp - fm) / (2.0 * h);
}

}  // namespace nframes
