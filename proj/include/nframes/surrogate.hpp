// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tensor Chebyshev interpolation of vector-valued functions on a box, used to
// write numerically integrated quantities back out as DSL polynomials.

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nframes/expr.hpp"
#include "nframes/geometry.hpp"

namespace nframes {

class ChebyshevFit {
 public:
  using Sampler = std::function<Point(std::span<const double>)>;

  // Interpolates f at the first-kind Chebyshev nodes, degree per axis.
  ChebyshevFit(Box box, int degree, int outputs, const Sampler& f);

  const Box& box() const { return box_; }
  int degree() const { return degree_; }
  int outputs() const { return outputs_; }

  double eval(int output, std::span<const double> s) const;

  // Horner form in the scaled variables t = (2 s - lo - hi) / (hi - lo), where
  // args[alpha] is the expression standing for s^alpha.
  Expression to_expression(int output, const std::vector<Expression>& args) const;

 private:
  std::size_t terms() const;

  Box box_;
  int degree_;
  int outputs_;
  // Monomial coefficients in t per output; flat tensor index with axis 0 slowest.
  std::vector<std::vector<double>> mono_;
};

}  // namespace nframes
