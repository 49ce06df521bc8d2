// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameterized maps beta: J^k -> E and charts adapted to them, in which
// x(beta(s)) = (s, t0).
//
// Chart coordinates are ordered as: the k pivot base indices, the remaining
// base indices in increasing order, then the fibre indices. The chart is again
// a bundle chart with the same (n, r).

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nframes/connection.hpp"
#include "nframes/geometry.hpp"

namespace nframes {

class ParamMap {
 public:
  ParamMap() = default;
  ParamMap(BundleShape shape, Box domain, std::vector<Expression> components);
  static ParamMap parse(BundleShape shape, Box domain, const std::vector<std::string>& components);

  int k() const { return static_cast<int>(domain_.dim()); }
  const BundleShape& shape() const { return shape_; }
  const Box& domain() const { return domain_; }
  const std::vector<Expression>& components() const { return components_; }

  Point point(std::span<const double> s) const;
  // (n+r) x k matrix d beta^I / d s^alpha.
  Matrix jacobian(std::span<const double> s) const;

  struct Regularity {
    bool regular = true;       // rank k everywhere sampled
    bool non_vertical = true;  // some base row nonzero everywhere sampled
    double min_singular_value = 0.0;
    Point worst;
    std::vector<std::vector<int>> pivots;  // per sample
  };
  Regularity regularity(const std::vector<Point>& samples) const;

 private:
  BundleShape shape_;
  Box domain_;
  std::vector<Expression> components_;
};

// Greedy maximal-volume choice of k base rows of a parameter Jacobian.
std::vector<int> select_pivots(const Matrix& jac, int n, int k);

class AdaptedChart {
 public:
  int k() const;
  const BundleShape& shape() const;
  const ParamMap& map() const;
  const Point& s0() const;
  // Chart coordinate K -> original coordinate index.
  const std::vector<int>& order() const;
  const std::vector<int>& pivots() const;
  // t0[K] = beta^{order[K]}(s0) for K >= k; entries below k are unused.
  const Point& t0() const;
  // Validity window inside the parameter box.
  const Box& window() const;
  // Whether the pivot components of beta are affine, which makes the inverse a DSL expression.
  bool pivot_affine() const;

  // Parameters s with beta^{pivots}(s) = q.
  Point pivot_solve(std::span<const double> q) const;
  template <class S> std::vector<S> pivot_solve(std::span<const S> q) const;

  template <class S> std::vector<S> to_chart(std::span<const S> u) const;
  Point to_chart(std::span<const double> u) const { return to_chart<double>(u); }
  Point from_chart(std::span<const double> x) const;

  // Chart point (s, t0).
  template <class S> std::vector<S> on_map(std::span<const S> s) const {
    std::vector<S> y(static_cast<std::size_t>(shape().dim()));
    for (int K = 0; K < shape().dim(); ++K)
      y[static_cast<std::size_t>(K)] = K < k() ? s[static_cast<std::size_t>(K)] : S(t0()[static_cast<std::size_t>(K)]);
    return y;
  }

  // u -> x; DSL components when pivot_affine().
  CoordinateChange forward_change() const;
  std::optional<std::vector<Expression>> forward_expressions() const;
  // x -> u as DSL over the chart variables.
  const std::vector<Expression>& inverse_expressions() const;

  // Connection coefficients in chart coordinates, as DSL over the chart variables.
  ConnectionCoefficients chart_coefficients(const ConnectionCoefficients& gamma) const;

  // max |x(beta(s)) - (s, t0)| over the given parameter samples.
  double invariant_residual(const std::vector<Point>& s_samples) const;

 private:
  struct State;
  friend AdaptedChart adapt_chart_to_path(const ParamMap& beta, double s0);
  friend AdaptedChart adapt_chart_to_map(const ParamMap& beta, std::span<const double> s0);
  static AdaptedChart build(const ParamMap& beta, std::span<const double> s0);
  std::shared_ptr<const State> st_;
};

AdaptedChart adapt_chart_to_path(const ParamMap& beta, double s0);
AdaptedChart adapt_chart_to_map(const ParamMap& beta, std::span<const double> s0);

// Tolerance for |x(beta(s)) - (s, t0)|.
inline constexpr double kChartTolerance = 1e-10;

}  // namespace nframes
