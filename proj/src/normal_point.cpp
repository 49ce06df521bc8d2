// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/normal_point.hpp"

namespace nframes {

CoordinateChange normal_at_point(const ConnectionCoefficients& gamma, const PointNormalSpec& spec) {
  const BundleShape shape = gamma.shape();
  const int n = shape.n, r = shape.r;
  if (static_cast<int>(spec.p.size()) != n + r) throw Error(ErrorCode::Config, "point needs n+r coordinates");
  const std::vector<double> g = spec.g.empty() ? std::vector<double>(static_cast<std::size_t>(r), 0.0) : spec.g;
  const Matrix gm = spec.g_matrix.size() == 0 ? Matrix(Matrix::Identity(r, r)) : spec.g_matrix;
  if (static_cast<int>(g.size()) != r || gm.rows() != r || gm.cols() != r)
    throw Error(ErrorCode::Config, "gauge constants need r entries and an r x r matrix");
  checked_inverse(gm, "gauge matrix g^a_b");

  const VariableList vars = shape.variables();
  const Matrix gam = gamma.values(spec.p);
  auto c = [&](double v) { return Expression::constant(v, vars); };
  auto shifted = [&](int i) { return Expression::variable(i, vars) - c(spec.p[static_cast<std::size_t>(i)]); };

  // Bracketed term per fibre index b.
  std::vector<Expression> bracket;
  for (int b = 0; b < r; ++b) {
    Expression e = shifted(n + b);
    for (int mu = 0; mu < n; ++mu) e = e - c(gam(b, mu)) * shifted(mu);
    bracket.push_back(e);
  }
  std::vector<Field> comps;
  for (int mu = 0; mu < n; ++mu) comps.emplace_back(Expression::variable(mu, vars));
  for (int a = 0; a < r; ++a) {
    Expression e = c(g[static_cast<std::size_t>(a)]);
    for (int b = 0; b < r; ++b) e = e + c(gm(a, b)) * bracket[static_cast<std::size_t>(b)];
    comps.emplace_back(e);
  }
  return CoordinateChange(shape, std::move(comps));
}

VerificationReport verify_normal(const ConnectionCoefficients& gamma, const CoordinateChange& change,
                                 const std::vector<Point>& samples, double tol) {
  VerificationReport rep;
  rep.tolerance = tol;
  for (const auto& p : samples) {
    const double m = max_abs(transform_coefficients(gamma, change, p));
    if (m > rep.max_residual || rep.worst_point.empty()) {
      rep.max_residual = std::max(rep.max_residual, m);
      rep.worst_point = p;
    }
    ++rep.samples;
  }
  rep.pass = !samples.empty() && rep.max_residual < tol;
  return rep;
}

}  // namespace nframes
