// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace nframes {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Point = std::vector<double>;

// Matrices whose estimated condition number exceeds this are treated as singular.
inline constexpr double kMaxCondition = 1e12;

// Reciprocal-condition based estimate from a partial-pivot LU; +inf when singular.
double condition_estimate(const Matrix& m);

// Inverse of a square matrix; throws DegenerateError naming `what` when the
// condition estimate exceeds max_condition.
Matrix checked_inverse(const Matrix& m, const std::string& what, double max_condition = kMaxCondition);

// Solves m x = b with the same degeneracy guard.
Vector checked_solve(const Matrix& m, const Vector& b, const std::string& what,
                     double max_condition = kMaxCondition);

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline Vector to_vector(std::span<const double> p) {
  Vector v(static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) v[static_cast<Eigen::Index>(i)] = p[i];
  return v;
}

inline Point to_point(const Vector& v) { return Point(v.data(), v.data() + v.size()); }

}  // namespace nframes
