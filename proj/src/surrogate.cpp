// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/surrogate.hpp"

#include <cmath>
#include <numbers>

namespace nframes {

namespace {

// Row m holds the monomial coefficients of T_m.
std::vector<std::vector<double>> chebyshev_to_monomial(int degree) {
  const std::size_t n = static_cast<std::size_t>(degree + 1);
  std::vector<std::vector<double>> t(n, std::vector<double>(n, 0.0));
  t[0][0] = 1.0;
  if (n > 1) t[1][1] = 1.0;
  for (std::size_t m = 2; m < n; ++m)
    for (std::size_t p = 0; p < n; ++p)
      t[m][p] = (p > 0 ? 2.0 * t[m - 1][p - 1] : 0.0) - t[m - 2][p];
  return t;
}

// Applies a (n x n) matrix along one axis of a tensor with extent n per axis.
void apply_axis(std::vector<double>& data, int dims, int axis, std::size_t n,
                const std::vector<std::vector<double>>& m) {
  std::size_t stride = 1;
  for (int a = dims - 1; a > axis; --a) stride *= n;
  const std::size_t block = stride * n;
  std::vector<double> line(n), out(n);
  for (std::size_t base = 0; base < data.size(); base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      for (std::size_t i = 0; i < n; ++i) line[i] = data[base + off + i * stride];
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * line[j];
        out[i] = acc;
      }
      for (std::size_t i = 0; i < n; ++i) data[base + off + i * stride] = out[i];
    }
  }
}

}  // namespace

std::size_t ChebyshevFit::terms() const {
  std::size_t t = 1;
  for (std::size_t a = 0; a < box_.dim(); ++a) t *= static_cast<std::size_t>(degree_ + 1);
  return t;
}

ChebyshevFit::ChebyshevFit(Box box, int degree, int outputs, const Sampler& f)
    : box_(std::move(box)), degree_(degree), outputs_(outputs) {
  box_.validate();
  const int dims = static_cast<int>(box_.dim());
  const std::size_t n = static_cast<std::size_t>(degree + 1);
  std::vector<double> nodes(n);
  for (std::size_t j = 0; j < n; ++j)
    nodes[j] = std::cos(std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(n));

  const std::size_t count = terms();
  std::vector<std::vector<double>> values(static_cast<std::size_t>(outputs), std::vector<double>(count));
  Point s(static_cast<std::size_t>(dims));
  for (std::size_t flat = 0; flat < count; ++flat) {
    std::size_t rest = flat;
    for (int a = dims - 1; a >= 0; --a) {
      const std::size_t j = rest % n;
      rest /= n;
      const double lo = box_.lo[static_cast<std::size_t>(a)], hi = box_.hi[static_cast<std::size_t>(a)];
      s[static_cast<std::size_t>(a)] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[j];
    }
    const Point y = f(s);
    for (int o = 0; o < outputs; ++o) values[static_cast<std::size_t>(o)][flat] = y[static_cast<std::size_t>(o)];
  }

  // Discrete cosine transform: c_m = (2 - [m == 0]) / n * sum_j y_j T_m(x_j).
  std::vector<std::vector<double>> dct(n, std::vector<double>(n));
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t j = 0; j < n; ++j)
      dct[m][j] = (m == 0 ? 1.0 : 2.0) / static_cast<double>(n) *
                  std::cos(std::numbers::pi * static_cast<double>(m) * (static_cast<double>(j) + 0.5) /
                           static_cast<double>(n));
  // Monomial coefficient p collects sum_m c_m [t^p] T_m.
  const auto cheb = chebyshev_to_monomial(degree);
  std::vector<std::vector<double>> to_mono(n, std::vector<double>(n));
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t m = 0; m < n; ++m) to_mono[p][m] = cheb[m][p];

  // Chebyshev coefficients below rounding level of the joint output scale are dropped
  // before the monomial conversion amplifies them.
  double scale = 0.0;
  for (auto& v : values) {
    for (int a = 0; a < dims; ++a) apply_axis(v, dims, a, n, dct);
    for (double c : v) scale = std::max(scale, std::abs(c));
  }
  for (auto& v : values) {
    for (double& c : v)
      if (std::abs(c) <= 1e-13 * scale) c = 0.0;
    for (int a = 0; a < dims; ++a) apply_axis(v, dims, a, n, to_mono);
  }
  mono_ = std::move(values);
}

double ChebyshevFit::eval(int output, std::span<const double> s) const {
  const int dims = static_cast<int>(box_.dim());
  const std::size_t n = static_cast<std::size_t>(degree_ + 1);
  std::vector<double> acc = mono_[static_cast<std::size_t>(output)];
  // Contract the last axis first.
  std::size_t len = acc.size();
  for (int a = dims - 1; a >= 0; --a) {
    const double lo = box_.lo[static_cast<std::size_t>(a)], hi = box_.hi[static_cast<std::size_t>(a)];
    const double t = (2.0 * s[static_cast<std::size_t>(a)] - lo - hi) / (hi - lo);
    const std::size_t outer = len / n;
    for (std::size_t i = 0; i < outer; ++i) {
      double h = 0.0;
      for (std::size_t p = n; p-- > 0;) h = h * t + acc[i * n + p];
      acc[i] = h;
    }
    len = outer;
  }
  return acc[0];
}

namespace {

Expression horner(const std::vector<double>& c, std::size_t offset, std::size_t axis, std::size_t n,
                  const std::vector<Expression>& t, const VariableList& vars) {
  const std::size_t dims = t.size();
  std::size_t stride = 1;
  for (std::size_t a = axis + 1; a < dims; ++a) stride *= n;
  Expression h = Expression::constant(0.0, vars);
  for (std::size_t p = n; p-- > 0;) {
    const Expression coef = axis + 1 == dims ? Expression::constant(c[offset + p], vars)
                                             : horner(c, offset + p * stride, axis + 1, n, t, vars);
    h = h * t[axis] + coef;
  }
  return h;
}

}  // namespace

Expression ChebyshevFit::to_expression(int output, const std::vector<Expression>& args) const {
  const VariableList& vars = args.front().variables();
  std::vector<Expression> t;
  for (std::size_t a = 0; a < box_.dim(); ++a) {
    const double lo = box_.lo[a], hi = box_.hi[a];
    t.push_back(Expression::constant(2.0 / (hi - lo), vars) * args[a] + Expression::constant(-(lo + hi) / (hi - lo), vars));
  }
  return horner(mono_[static_cast<std::size_t>(output)], 0, 0, static_cast<std::size_t>(degree_ + 1), t, vars);
}

}  // namespace nframes
