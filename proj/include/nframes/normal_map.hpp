// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Normal coordinates along k-dimensional maps. In the adapted chart the frame
// field B and the offsets f obey, for every parameter axis alpha,
//
//   d B / d s^alpha = -B K_alpha + d D / d s^alpha,   K_alpha[c][b] = d Gx^c_alpha / d x^{n+b},
//   d f / d s^alpha = -B Gx_alpha,
//
// evaluated on the map. They are integrable exactly when the curvature
// vanishes along the map and the fibre second-order condition holds.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nframes/normal_path.hpp"

namespace nframes {

struct IntegrabilityReport {
  int grid = 0;  // nodes per parameter axis
  std::size_t nodes = 0;
  // max |R^a_{alpha beta}| on the map, alpha < beta < k.
  double curvature_residual = 0.0;
  Point curvature_worst;
  // max |Gx^d_alpha d2 Gx^c_beta / dx^{n+b} dx^{n+d} - (alpha <-> beta)| on the map.
  double second_order_residual = 0.0;
  Point second_order_worst;
  // Effective tolerance, scaled by 1 + max |Gx| on the grid.
  double tolerance = 0.0;
  bool curvature_pass = true;
  bool second_order_pass = true;

  bool pass() const { return curvature_pass && second_order_pass; }
};

IntegrabilityReport check_integrability(const AdaptedChart& chart, const ConnectionCoefficients& chart_gamma,
                                        int grid, double tol = 1e-8);

struct FrameFieldOptions {
  Point s1;                        // start parameters, default s0
  Matrix b_start;                  // B at s1, default identity
  std::vector<std::string> d;      // r*r entries over s1..sk, row major; empty means zero
  int grid = 21;
  double ode_step = 1e-3;
  double tolerance = 1e-8;         // path independence, scaled by 1 + max |state|
};

class FrameAlongMap final : public FrameSource {
 public:
  int k() const;
  int grid() const;
  const Box& window() const;
  const Point& s1() const;
  // Parameter coordinates of node `flat`; axis 0 varies slowest.
  Point node(std::size_t flat) const;
  std::size_t node_count() const;
  Matrix b_at(std::size_t flat) const;
  Point f_at(std::size_t flat) const;
  // Largest node-wise difference between the forward and reversed axis sweeps.
  double path_independence() const;
  double min_abs_det() const;

  // Off-node values by RK4 from the nearest node along axis-ordered legs.
  void eval(std::span<const double> s, double* f, double* b) const override;
  void eval(std::span<const Dual> s, Dual* f, Dual* b) const override;

  // Integrates from s1 to s along legs in the given axis order.
  void integrate_to(std::span<const double> s, const std::vector<int>& order, double* f, double* b) const;

 private:
  struct State;
  friend FrameAlongMap solve_frame_field(const AdaptedChart&, const ConnectionCoefficients&, const FrameFieldOptions&);
  std::shared_ptr<const State> st_;
};

FrameAlongMap solve_frame_field(const AdaptedChart& chart, const ConnectionCoefficients& chart_gamma,
                                const FrameFieldOptions& options = {});

struct ObstructionReport {
  IntegrabilityReport integrability;
  std::string summary;
};

struct MapOptions {
  FrameFieldOptions frame;
  double integrability_tol = 1e-8;
  double tolerance = 1e-6;
  int random_samples = 50;
  std::uint64_t seed = 1;
  bool emit = true;
};

struct MapResult {
  IntegrabilityReport integrability;
  std::optional<NormalSolution> solution;
  std::shared_ptr<const FrameAlongMap> frame;
  std::optional<ObstructionReport> obstruction;

  bool constructed() const { return solution.has_value(); }
};

// Builds the adapted chart, checks integrability and either constructs
// coordinates normal along the map or reports the obstruction.
MapResult theorem_a1(const ConnectionCoefficients& gamma, const ParamMap& beta, std::span<const double> s0,
                     const MapOptions& options = {});

}  // namespace nframes
