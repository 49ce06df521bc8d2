// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "nframes/connection.hpp"
#include "nframes/geometry.hpp"

namespace nframes {

// Gauge constants g^a (default 0) and g^a_b (default identity) at a point p.
struct PointNormalSpec {
  Point p;
  std::vector<double> g;
  Matrix g_matrix;
};

// ut^mu = u^mu, ut^a = g^a + g^a_b (-Gamma^b_mu(p) (u^mu - p^mu) + (u^b - p^b)).
CoordinateChange normal_at_point(const ConnectionCoefficients& gamma, const PointNormalSpec& spec);

struct VerificationReport {
  double max_residual = 0.0;
  Point worst_point;
  std::size_t samples = 0;
  double tolerance = 0.0;
  bool pass = false;
};

// Max |Gt^a_mu| over the samples, with Gt from transform_coefficients.
VerificationReport verify_normal(const ConnectionCoefficients& gamma, const CoordinateChange& change,
                                 const std::vector<Point>& samples, double tol);

}  // namespace nframes
