// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Bundle shapes, fibre-respecting coordinate changes and block matrices.
//
// Indices are zero based in code: base indices 0..n-1, fibre indices n..n+r-1.
// Matrix rows carry the upper index, so a BlockMatrix A has
//   base(nu, mu)  = A_mu^nu,   mixed(b, mu) = A_mu^b,   fibre(a, b) = A_b^a
// and full() = [[base, 0], [mixed, fibre]].

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nframes/expr.hpp"
#include "nframes/field.hpp"
#include "nframes/linalg.hpp"

namespace nframes {

// Fibre-structure tolerance on |d ut^mu / d u^a|.
inline constexpr double kFibreTolerance = 1e-10;

struct BundleShape {
  int n = 1;
  int r = 1;

  int dim() const { return n + r; }
  VariableList variables() const { return bundle_variables(n + r); }
  void validate() const;
  bool operator==(const BundleShape&) const = default;
};

struct Box {
  Point lo;
  Point hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> p, double slack = 0.0) const;
  Point center() const;
  void validate() const;
};

// Uniform grid with per_axis nodes per axis plus random_count seeded uniform points.
std::vector<Point> sample_box(const Box& box, int per_axis, int random_count, std::uint64_t seed);

class CoordinateChange {
 public:
  CoordinateChange() = default;
  CoordinateChange(BundleShape shape, std::vector<Field> components);
  static CoordinateChange parse(BundleShape shape, const std::vector<std::string>& components);
  static CoordinateChange identity(BundleShape shape);

  const BundleShape& shape() const { return shape_; }
  const std::vector<Field>& components() const { return components_; }

  Point apply(std::span<const double> u) const;
  template <class S> std::vector<S> apply(std::span<const S> u) const {
    std::vector<S> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back(c(u));
    return out;
  }

  // F(I, J) = d ut^I / d u^J, one dual sweep per column.
  Matrix forward_jacobian(std::span<const double> u) const;

  // All components as DSL expressions, when every component has one.
  std::optional<std::vector<Expression>> expressions() const;
  std::vector<std::string> to_strings() const;

 private:
  BundleShape shape_;
  std::vector<Field> components_;
};

// p -> second(first(p)).
CoordinateChange compose(const CoordinateChange& first, const CoordinateChange& second);

struct BlockMatrix {
  Matrix base;
  Matrix mixed;
  Matrix fibre;

  int n() const { return static_cast<int>(base.rows()); }
  int r() const { return static_cast<int>(fibre.rows()); }
  Matrix full() const;
  static BlockMatrix from_full(const Matrix& m, int n, int r);
  static BlockMatrix identity(int n, int r);
};

// Throws FibreStructure when some |F(mu, a)| exceeds kFibreTolerance.
void check_fibre_structure(const Matrix& forward, int n, int r, std::span<const double> u);

// [d u^I / d ut^J] at u, by inverting the forward Jacobian.
BlockMatrix jacobian(const CoordinateChange& change, std::span<const double> u);

// Inverse of a lower block-triangular matrix.
BlockMatrix block_inverse(const BlockMatrix& a);

struct AdmissibilityReport {
  double max_fibre_dependence = 0.0;
  int worst_mu = -1;
  int worst_a = -1;
  Point worst_point;
  double min_abs_det_base = 0.0;
  double min_abs_det_fibre = 0.0;
  double max_condition = 0.0;
  std::size_t samples = 0;
  bool pass = false;
};

AdmissibilityReport validate_admissible_change(const CoordinateChange& change, const std::vector<Point>& samples);

// Frame vectors e_I as the columns of a matrix over the coordinate basis.
struct Frame {
  BundleShape shape;
  std::function<Matrix(std::span<const double>)> matrix;
};

}  // namespace nframes
