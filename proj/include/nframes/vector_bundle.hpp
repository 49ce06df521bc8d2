// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Linear connections on vector bundles. Fibre coordinates are the components
// u^{n+b} = E^b in a frame {E_a} of the bundle, and the 2-index coefficients
// are Gamma^a_mu = -Gamma^a_{b mu}(x) u^{n+b} (+ G^a_mu(x) for affine connections).
// Everything here is a function of the base point x = (u1..un).

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nframes/connection.hpp"

namespace nframes {

// A matrix of expressions over the base variables u1..un.
class BaseMatrixField {
 public:
  BaseMatrixField() = default;
  BaseMatrixField(int rows, int cols, std::vector<Expression> entries);
  static BaseMatrixField parse(int n, int rows, int cols, const std::vector<std::string>& entries);
  static BaseMatrixField identity(int n, int size);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const Expression& entry(int i, int j) const { return entries_[static_cast<std::size_t>(i * cols_ + j)]; }
  Matrix eval(std::span<const double> x) const;
  // d/dx^nu of every entry.
  Matrix derivative(std::span<const double> x, int nu) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Expression> entries_;
};

class ThreeIndexCoefficients {
 public:
  ThreeIndexCoefficients() = default;
  // entries[mu] holds Gamma^a_{b mu} at a*r + b; affine is empty or r*n with G^a_mu at a*n + mu.
  ThreeIndexCoefficients(BundleShape shape, std::vector<std::vector<Expression>> entries,
                         std::vector<Expression> affine = {});
  // gamma3[mu][a][b]; affine[a][mu] may be empty.
  static ThreeIndexCoefficients parse(BundleShape shape,
                                      const std::vector<std::vector<std::vector<std::string>>>& gamma3,
                                      const std::vector<std::vector<std::string>>& affine = {});
  static ThreeIndexCoefficients zero(BundleShape shape);

  const BundleShape& shape() const { return shape_; }
  const Expression& entry(int mu, int a, int b) const {
    return entries_[static_cast<std::size_t>(mu)][static_cast<std::size_t>(a * shape_.r + b)];
  }
  bool has_affine() const { return !affine_.empty(); }
  const Expression& affine(int a, int mu) const { return affine_[static_cast<std::size_t>(a * shape_.n + mu)]; }

  // r x r matrix Gamma_mu = [Gamma^a_{b mu}] at the base point x.
  Matrix matrix(int mu, std::span<const double> x) const;

 private:
  BundleShape shape_;
  std::vector<std::vector<Expression>> entries_;
  std::vector<Expression> affine_;
};

// Components Y^a of a section over the base variables.
struct Section {
  std::vector<Expression> components;

  static Section parse(int n, const std::vector<std::string>& components);
  Point eval(std::span<const double> x) const;
};

// Gamma^a_mu(u) = -Gamma^a_{b mu}(x) u^{n+b} + G^a_mu(x).
ConnectionCoefficients two_from_three(const ThreeIndexCoefficients& g3, Box domain);

struct LinearFormReport {
  double max_residual = 0.0;  // largest second fibre derivative
  Point worst_point;
  std::size_t samples = 0;
  bool linear = false;
};

// Whether Gamma is affine in the fibre coordinates on the samples, to 1e-10.
LinearFormReport is_linear_form(const ConnectionCoefficients& gamma, const std::vector<Point>& samples);

// F^mu (d Y^a / dx^mu + Gamma^a_{b mu} Y^b) at x; f holds the n components F^mu.
Point covariant_derivative(const ThreeIndexCoefficients& g3, const Section& f, const Section& y,
                           std::span<const double> x);

// Gt_mu = Bbase_mu^nu B^-1 (Gamma_nu B + d_nu B), with Bbase(nu, mu) = Bbase_mu^nu.
std::vector<Matrix> transform_three(const ThreeIndexCoefficients& g3, const BaseMatrixField& b,
                                    const BaseMatrixField& bbase, std::span<const double> x);

// The bundle frame change induced by (B, Bbase): base block Bbase, fibre block B,
// mixed block (b, mu) = [Bbase_mu^nu d_nu B B^-1]^b_c u^{n+c}.
BlockMatrixFn linear_frame_change(const BaseMatrixField& b, const BaseMatrixField& bbase, int n, int r);

struct ParallelFrameReport {
  // max |B^-1 (xdot^mu Gamma_mu B + dB/ds)| over interior nodes, dB/ds by five-point differences.
  double max_three_index = 0.0;
  // max |xdot^mu Gt^a_mu| at r+1 fibre points over each interior node.
  double max_two_index = 0.0;
  double tolerance = 0.0;
  double min_abs_det = 0.0;
  bool pass = false;
};

struct ParallelFrame {
  std::vector<double> s;
  std::vector<Matrix> b;
  // B^-1 (xdot^mu Gamma_mu B + dB/ds) at interior nodes 2..N-2, i.e. the
  // transformed 3-index coefficients contracted with the velocity.
  std::vector<double> interior_s;
  std::vector<Matrix> transformed;
  ParallelFrameReport report;
};

// RK4 on dB/ds = -(xdot^mu Gamma_mu(x(s))) B from B(begin) = b_start.
ParallelFrame normal_frame_along_base_path(const ThreeIndexCoefficients& g3, const BasePath& curve,
                                           const Matrix& b_start, int steps, double tol = 1e-7);

struct EquivalenceReport {
  std::size_t base_points = 0;
  std::size_t fibre_points = 0;  // total over all base points
  double max_three_index = 0.0;
  double max_two_index = 0.0;
  std::size_t agreements = 0;    // base points where both sides vanish or both do not
  double tolerance = 0.0;
  bool holds = false;
};

// three[i] are transformed 3-index matrices at base point i; the 2-index side is
// -three[i][mu] * v for every fibre point v. The fibre points must span the fibre.
EquivalenceReport check_equivalence(const std::vector<std::vector<Matrix>>& three, const std::vector<Point>& fibre_points,
                                    double tol = 1e-9);

// Sampled biconditional: transformed 2-index coefficients vanish over a base point
// exactly when the transformed 3-index coefficients vanish there.
EquivalenceReport check_prop77(const ThreeIndexCoefficients& g3, const std::vector<Point>& base_samples,
                               const BaseMatrixField& b, const BaseMatrixField& bbase,
                               const std::vector<Point>& fibre_points, double tol = 1e-9);

// r+1 fibre points: the unit vectors and their sum.
std::vector<Point> spanning_fibre_points(int r);

}  // namespace nframes
