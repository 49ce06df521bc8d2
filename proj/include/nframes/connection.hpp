// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nframes/expr.hpp"
#include "nframes/geometry.hpp"

namespace nframes {

// Gamma^a_mu as an r x n grid of expressions over u1..u{n+r}.
class ConnectionCoefficients {
 public:
  ConnectionCoefficients() = default;
  ConnectionCoefficients(BundleShape shape, std::vector<Expression> entries, Box domain);
  static ConnectionCoefficients parse(BundleShape shape, const std::vector<std::vector<std::string>>& rows,
                                      Box domain);
  static ConnectionCoefficients zero(BundleShape shape, Box domain);

  const BundleShape& shape() const { return shape_; }
  const Box& domain() const { return domain_; }
  // a in [0, r), mu in [0, n)
  const Expression& entry(int a, int mu) const { return entries_[static_cast<std::size_t>(a * shape_.n + mu)]; }
  const std::vector<Expression>& entries() const { return entries_; }

  template <class S> void eval(std::span<const S> u, S* out) const {
    for (std::size_t k = 0; k < entries_.size(); ++k) out[k] = entries_[k].eval(u);
  }

  // r x n matrix of values.
  Matrix values(std::span<const double> u) const;
  // d_I Gamma for every bundle index I, each r x n.
  std::vector<Matrix> gradient(std::span<const double> u) const;

  std::vector<std::vector<std::string>> to_strings() const;

 private:
  BundleShape shape_;
  std::vector<Expression> entries_;
  Box domain_;
};

class CurvatureComponents {
 public:
  CurvatureComponents(Point p, int n, int r) : point_(std::move(p)), n_(n), r_(r), upper_(pairs(n) * r, 0.0) {}

  const Point& point() const { return point_; }
  int n() const { return n_; }
  int r() const { return r_; }
  // R^a_{mu nu}; antisymmetric, stored for mu < nu only.
  double operator()(int a, int mu, int nu) const {
    if (mu == nu) return 0.0;
    return mu < nu ? upper_[index(a, mu, nu)] : -upper_[index(a, nu, mu)];
  }
  void set(int a, int mu, int nu, double v) { upper_[index(a, mu, nu)] = v; }
  double max_abs() const;

 private:
  static std::size_t pairs(int n) { return static_cast<std::size_t>(n * (n - 1) / 2); }
  std::size_t index(int a, int mu, int nu) const {
    const std::size_t pair = static_cast<std::size_t>(mu * (2 * n_ - mu - 1) / 2 + (nu - mu - 1));
    return static_cast<std::size_t>(a) * pairs(n_) + pair;
  }

  Point point_;
  int n_;
  int r_;
  std::vector<double> upper_;
};

class AnholonomyComponents {
 public:
  AnholonomyComponents(Point p, int dim)
      : point_(std::move(p)), dim_(dim), c_(static_cast<std::size_t>(dim * dim * dim), 0.0) {}
  const Point& point() const { return point_; }
  int dim() const { return dim_; }
  // C^K_{IJ}: [X_I, X_J] = C^K_{IJ} X_K
  double operator()(int i, int j, int k) const { return c_[flat(i, j, k)]; }
  double& at(int i, int j, int k) { return c_[flat(i, j, k)]; }

 private:
  std::size_t flat(int i, int j, int k) const { return static_cast<std::size_t>((i * dim_ + j) * dim_ + k); }
  Point point_;
  int dim_;
  std::vector<double> c_;
};

// Columns X_mu = d_mu + Gamma^b_mu d_b and X_a = d_a.
Matrix adapted_frame(const ConnectionCoefficients& gamma, std::span<const double> u);

// Coefficients in the coordinates ut = change(u), evaluated at ut(u); r x n.
Matrix transform_coefficients(const ConnectionCoefficients& gamma, const CoordinateChange& change,
                              std::span<const double> u);

using BlockMatrixFn = std::function<BlockMatrix(std::span<const double>)>;

// Frame-change law: Gt = (A_fibre)^-1 (Gamma A_base - A_mixed). Requires the
// diagonal blocks of A to be constant along the fibres.
Matrix transform_coefficients_frame(const ConnectionCoefficients& gamma, const BlockMatrixFn& a,
                                    std::span<const double> u);

// Largest fibre-direction difference quotient of the diagonal blocks of a at u.
double fibre_variation(const BlockMatrixFn& a, int n, std::span<const double> u);

CurvatureComponents curvature(const ConnectionCoefficients& gamma, std::span<const double> u);

struct FlatnessReport {
  double max_curvature = 0.0;
  Point worst_point;
  std::size_t samples = 0;
  double tolerance = 0.0;
  bool flat = false;
};

FlatnessReport check_flat(const ConnectionCoefficients& gamma, const std::vector<Point>& samples, double tol);

AnholonomyComponents anholonomy_adapted(const ConnectionCoefficients& gamma, std::span<const double> u);

// A C^1 curve x(s) in the base, with its velocity.
struct BasePath {
  int n = 1;
  double begin = 0.0;
  double end = 1.0;
  std::function<void(double s, double* x, double* xdot)> eval;

  // Components are expressions over s1.
  static BasePath from_expressions(std::vector<Expression> components, double begin, double end);
  // Vertex i is reached at s = i. With smooth legs each leg follows
  // (1 - cos(pi t))/2, so the velocity vanishes at the vertices.
  static BasePath polyline(std::vector<Point> vertices, bool smooth);
};

struct LiftResult {
  std::vector<double> s;
  std::vector<Point> points;
  bool exited_domain = false;
};

// RK4 on du^a/ds = Gamma^a_mu(u) dx^mu/ds with u^mu = x^mu(s).
LiftResult horizontal_lift(const ConnectionCoefficients& gamma, const BasePath& path,
                           std::span<const double> start_fibre, int steps);

struct NormalFrameReport {
  double max_residual = 0.0;
  Point worst_point;
  std::size_t samples = 0;
  double tolerance = 0.0;
  bool pass = false;
};

using MatrixFn = std::function<Matrix(std::span<const double>)>;

struct GeneralNormalFrame {
  BlockMatrixFn transform;
  Frame frame;
  NormalFrameReport report;
};

// Every frame normal on the sample set: e~_mu = A_mu^nu (e_nu + Gamma^b_nu e_b), e~_a = A_a^b e_b.
GeneralNormalFrame general_normal_frame(const ConnectionCoefficients& gamma, MatrixFn a_base, MatrixFn a_fibre,
                                        const std::vector<Point>& samples, double tol = 1e-10);

// Max |Gt| over samples for an arbitrary block transform.
NormalFrameReport verify_frame_normal(const ConnectionCoefficients& gamma, const BlockMatrixFn& a,
                                      const std::vector<Point>& samples, double tol);

}  // namespace nframes
