// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Coordinates normal along a parameterized map. In the adapted chart x, with
// s = (x^1..x^k) and t0 the constant chart coordinates of the map,
//
//   ut^mu = u^mu,
//   ut^a  = f^a(s) + B^a_b(s) (-Gx^b_sigma(s, t0) (x^sigma - t0^sigma) + (x^{n+b} - t0^{n+b})),
//
// summed over the non-pivot base indices sigma, where Gx are the connection
// coefficients in the chart. Normality along the map reduces to
// d f^a / d s^alpha = -B^a_b Gx^b_alpha(s, t0).

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nframes/connection.hpp"
#include "nframes/normal_point.hpp"
#include "nframes/param_map.hpp"

namespace nframes {

// f^a(s) (r values) and B^a_b(s) (r x r, row major) over the parameter window.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual void eval(std::span<const double> s, double* f, double* b) const = 0;
  virtual void eval(std::span<const Dual> s, Dual* f, Dual* b) const = 0;
};

struct NormalSolution {
  AdaptedChart chart;
  ConnectionCoefficients chart_gamma;
  std::shared_ptr<const FrameSource> frame;
  CoordinateChange change;
  std::vector<Point> verify_points;
  VerificationReport report;
  // Closed-form DSL version of the change, when it could be produced and re-verified.
  std::optional<CoordinateChange> emitted;
  VerificationReport emitted_report;
  std::string emission_note;
};

CoordinateChange assemble_change(const AdaptedChart& chart, const ConnectionCoefficients& chart_gamma,
                                 std::shared_ptr<const FrameSource> frame);

// Chebyshev degree per parameter axis used for emission.
inline constexpr int kEmissionDegree = 14;

// Fills sol.emitted / emitted_report / emission_note. Emission needs a DSL
// forward chart, i.e. affine pivot components.
void emit_solution(NormalSolution& sol, const ConnectionCoefficients& gamma, double tol);

// Piecewise cubic Hermite interpolation of a vector function of one variable.
class HermiteTable {
 public:
  HermiteTable(std::vector<double> nodes, std::vector<Point> values, std::vector<Point> slopes);
  template <class S> void eval(S s, S* out) const;
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<Point>& values() const { return values_; }

 private:
  std::vector<double> nodes_;
  std::vector<Point> values_;
  std::vector<Point> slopes_;
};

struct PathOptions {
  std::optional<double> s1;           // default s0
  std::vector<std::string> frame;     // r*r entries over s1, row major; empty means identity
  double quad_step = 1e-3;
  int verify_samples = 50;
  double tolerance = 1e-6;
  bool emit = true;
};

NormalSolution normal_along_path(const ConnectionCoefficients& gamma, const ParamMap& beta, double s0,
                                 const PathOptions& options = {});

// Parameters at which a path solution is verified: interior points of the window
// offset from any regular quadrature grid.
std::vector<double> path_verify_parameters(const Box& window, int count);

}  // namespace nframes
