// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/vector_bundle.hpp"

#include <algorithm>
#include <cmath>

namespace nframes {

BaseMatrixField::BaseMatrixField(int rows, int cols, std::vector<Expression> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (static_cast<int>(entries_.size()) != rows * cols)
    throw Error(ErrorCode::Config, "matrix field needs rows*cols entries");
}

BaseMatrixField BaseMatrixField::parse(int n, int rows, int cols, const std::vector<std::string>& entries) {
  const VariableList vars = bundle_variables(n);
  std::vector<Expression> e;
  for (const auto& t : entries) e.push_back(Expression::parse(t, vars));
  return BaseMatrixField(rows, cols, std::move(e));
}

BaseMatrixField BaseMatrixField::identity(int n, int size) {
  const VariableList vars = bundle_variables(n);
  std::vector<Expression> e;
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) e.push_back(Expression::constant(i == j ? 1.0 : 0.0, vars));
  return BaseMatrixField(size, size, std::move(e));
}

Matrix BaseMatrixField::eval(std::span<const double> x) const {
  Matrix m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = entry(i, j).eval(x);
  return m;
}

Matrix BaseMatrixField::derivative(std::span<const double> x, int nu) const {
  Matrix m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = derive1(entry(i, j), x, static_cast<std::size_t>(nu));
  return m;
}

ThreeIndexCoefficients::ThreeIndexCoefficients(BundleShape shape, std::vector<std::vector<Expression>> entries,
                                               std::vector<Expression> affine)
    : shape_(shape), entries_(std::move(entries)), affine_(std::move(affine)) {
  shape_.validate();
  if (static_cast<int>(entries_.size()) != shape_.n)
    throw Error(ErrorCode::Config, "three-index coefficients need one r x r matrix per base index");
  for (const auto& m : entries_)
    if (static_cast<int>(m.size()) != shape_.r * shape_.r)
      throw Error(ErrorCode::Config, "three-index coefficient matrices must be r x r");
  if (!affine_.empty() && static_cast<int>(affine_.size()) != shape_.r * shape_.n)
    throw Error(ErrorCode::Config, "affine term needs r x n entries");
}

ThreeIndexCoefficients ThreeIndexCoefficients::parse(BundleShape shape,
                                                     const std::vector<std::vector<std::vector<std::string>>>& gamma3,
                                                     const std::vector<std::vector<std::string>>& affine) {
  shape.validate();
  const VariableList vars = bundle_variables(shape.n);
  std::vector<std::vector<Expression>> entries;
  for (const auto& m : gamma3) {
    if (static_cast<int>(m.size()) != shape.r) throw Error(ErrorCode::Config, "three-index matrices need r rows");
    std::vector<Expression> flat;
    for (const auto& row : m) {
      if (static_cast<int>(row.size()) != shape.r) throw Error(ErrorCode::Config, "three-index matrices need r columns");
      for (const auto& t : row) flat.push_back(Expression::parse(t, vars));
    }
    entries.push_back(std::move(flat));
  }
  std::vector<Expression> g;
  if (!affine.empty()) {
    if (static_cast<int>(affine.size()) != shape.r) throw Error(ErrorCode::Config, "affine term needs r rows");
    for (const auto& row : affine) {
      if (static_cast<int>(row.size()) != shape.n) throw Error(ErrorCode::Config, "affine term needs n columns");
      for (const auto& t : row) g.push_back(Expression::parse(t, vars));
    }
  }
  return ThreeIndexCoefficients(shape, std::move(entries), std::move(g));
}

ThreeIndexCoefficients ThreeIndexCoefficients::zero(BundleShape shape) {
  const VariableList vars = bundle_variables(shape.n);
  std::vector<std::vector<Expression>> entries(static_cast<std::size_t>(shape.n),
                                               std::vector<Expression>(static_cast<std::size_t>(shape.r * shape.r),
                                                                       Expression::constant(0.0, vars)));
  return ThreeIndexCoefficients(shape, std::move(entries));
}

Matrix ThreeIndexCoefficients::matrix(int mu, std::span<const double> x) const {
  const int r = shape_.r;
  Matrix m(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) m(a, b) = entry(mu, a, b).eval(x);
  return m;
}

Section Section::parse(int n, const std::vector<std::string>& components) {
  const VariableList vars = bundle_variables(n);
  Section s;
  for (const auto& t : components) s.components.push_back(Expression::parse(t, vars));
  return s;
}

Point Section::eval(std::span<const double> x) const {
  Point out;
  for (const auto& c : components) out.push_back(c.eval(x));
  return out;
}

ConnectionCoefficients two_from_three(const ThreeIndexCoefficients& g3, Box domain) {
  const BundleShape shape = g3.shape();
  const int n = shape.n, r = shape.r;
  const VariableList vars = shape.variables();
  std::vector<Expression> base;
  for (int mu = 0; mu < n; ++mu) base.push_back(Expression::variable(mu, vars));
  std::vector<Expression> entries;
  for (int a = 0; a < r; ++a) {
    for (int mu = 0; mu < n; ++mu) {
      Expression e = g3.has_affine() ? substitute(g3.affine(a, mu), base) : Expression::constant(0.0, vars);
      for (int b = 0; b < r; ++b) {
        const Expression c = substitute(g3.entry(mu, a, b), base);
        if (c.is_zero()) continue;
        e = e - c * Expression::variable(n + b, vars);
      }
      entries.push_back(e);
    }
  }
  return ConnectionCoefficients(shape, std::move(entries), std::move(domain));
}

LinearFormReport is_linear_form(const ConnectionCoefficients& gamma, const std::vector<Point>& samples) {
  const int n = gamma.shape().n, r = gamma.shape().r;
  LinearFormReport rep;
  for (const auto& u : samples) {
    ++rep.samples;
    for (const auto& e : gamma.entries())
      for (int b = 0; b < r; ++b)
        for (int c = b; c < r; ++c) {
          const double v = std::abs(derive2(e, u, static_cast<std::size_t>(n + b), static_cast<std::size_t>(n + c)));
          if (v > rep.max_residual || rep.worst_point.empty()) {
            rep.max_residual = std::max(rep.max_residual, v);
            rep.worst_point = u;
          }
        }
  }
  rep.linear = !samples.empty() && rep.max_residual < 1e-10;
  return rep;
}

Point covariant_derivative(const ThreeIndexCoefficients& g3, const Section& f, const Section& y,
                           std::span<const double> x) {
  const int n = g3.shape().n, r = g3.shape().r;
  if (static_cast<int>(f.components.size()) != n || static_cast<int>(y.components.size()) != r)
    throw Error(ErrorCode::Config, "vector field needs n components and section r components");
  const Point fv = f.eval(x), yv = y.eval(x);
  Point out(static_cast<std::size_t>(r), 0.0);
  for (int mu = 0; mu < n; ++mu) {
    const Matrix g = g3.matrix(mu, x);
    for (int a = 0; a < r; ++a) {
      double v = derive1(y.components[static_cast<std::size_t>(a)], x, static_cast<std::size_t>(mu));
      for (int b = 0; b < r; ++b) v += g(a, b) * yv[static_cast<std::size_t>(b)];
      out[static_cast<std::size_t>(a)] += fv[static_cast<std::size_t>(mu)] * v;
    }
  }
  return out;
}

std::vector<Matrix> transform_three(const ThreeIndexCoefficients& g3, const BaseMatrixField& b,
                                    const BaseMatrixField& bbase, std::span<const double> x) {
  const int n = g3.shape().n, r = g3.shape().r;
  if (b.rows() != r || b.cols() != r || bbase.rows() != n || bbase.cols() != n)
    throw Error(ErrorCode::Config, "B must be r x r and Bbase n x n");
  const Matrix bm = b.eval(x);
  const Matrix binv = checked_inverse(bm, "fibre frame matrix B");
  const Matrix bb = bbase.eval(x);
  checked_inverse(bb, "base frame matrix");
  std::vector<Matrix> inner;
  for (int nu = 0; nu < n; ++nu) inner.push_back(binv * (g3.matrix(nu, x) * bm + b.derivative(x, nu)));
  std::vector<Matrix> out;
  for (int mu = 0; mu < n; ++mu) {
    Matrix m = Matrix::Zero(r, r);
    for (int nu = 0; nu < n; ++nu) m += bb(nu, mu) * inner[static_cast<std::size_t>(nu)];
    out.push_back(m);
  }
  return out;
}

BlockMatrixFn linear_frame_change(const BaseMatrixField& b, const BaseMatrixField& bbase, int n, int r) {
  return [b, bbase, n, r](std::span<const double> u) {
    const std::span<const double> x = u.first(static_cast<std::size_t>(n));
    BlockMatrix a;
    a.base = bbase.eval(x);
    a.fibre = b.eval(x);
    const Matrix binv = checked_inverse(a.fibre, "fibre frame matrix B");
    const Vector fibre = to_vector(u.subspan(static_cast<std::size_t>(n), static_cast<std::size_t>(r)));
    a.mixed = Matrix::Zero(r, n);
    for (int nu = 0; nu < n; ++nu) {
      const Vector w = b.derivative(x, nu) * (binv * fibre);
      for (int mu = 0; mu < n; ++mu) a.mixed.col(mu) += a.base(nu, mu) * w;
    }
    return a;
  };
}

std::vector<Point> spanning_fibre_points(int r) {
  std::vector<Point> pts;
  Point sum(static_cast<std::size_t>(r), 1.0);
  for (int a = 0; a < r; ++a) {
    Point e(static_cast<std::size_t>(r), 0.0);
    e[static_cast<std::size_t>(a)] = 1.0;
    pts.push_back(e);
  }
  pts.push_back(sum);
  return pts;
}

ParallelFrame normal_frame_along_base_path(const ThreeIndexCoefficients& g3, const BasePath& curve,
                                           const Matrix& b_start, int steps, double tol) {
  const int n = g3.shape().n, r = g3.shape().r;
  if (curve.n != n) throw Error(ErrorCode::Config, "curve dimension differs from the base dimension");
  if (steps < 4) throw Error(ErrorCode::Config, "parallel frame needs at least four steps");
  if (b_start.rows() != r || b_start.cols() != r) throw Error(ErrorCode::Config, "B at the start must be r x r");
  checked_inverse(b_start, "B at the start of the curve");

  Point x(static_cast<std::size_t>(n)), xd(static_cast<std::size_t>(n));
  auto contracted = [&](double s) {
    curve.eval(s, x.data(), xd.data());
    Matrix m = Matrix::Zero(r, r);
    for (int mu = 0; mu < n; ++mu) m += xd[static_cast<std::size_t>(mu)] * g3.matrix(mu, x);
    return m;
  };
  auto rhs = [&](double s, const Matrix& b) { return Matrix(-contracted(s) * b); };

  ParallelFrame out;
  const double h = (curve.end - curve.begin) / steps;
  Matrix b = b_start;
  out.s.push_back(curve.begin);
  out.b.push_back(b);
  for (int i = 0; i < steps; ++i) {
    const double s = curve.begin + i * h;
    const Matrix k1 = rhs(s, b);
    const Matrix k2 = rhs(s + 0.5 * h, b + 0.5 * h * k1);
    const Matrix k3 = rhs(s + 0.5 * h, b + 0.5 * h * k2);
    const Matrix k4 = rhs(s + h, b + h * k3);
    b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (condition_estimate(b) > kMaxCondition)
      throw Error(ErrorCode::DetCollapse, "parallel frame degenerates at s = " + format_point({s + h}));
    out.s.push_back(i + 1 == steps ? curve.end : curve.begin + (i + 1) * h);
    out.b.push_back(b);
  }

  ParallelFrameReport& rep = out.report;
  rep.tolerance = tol;
  rep.min_abs_det = std::numeric_limits<double>::infinity();
  for (const auto& m : out.b) rep.min_abs_det = std::min(rep.min_abs_det, std::abs(m.determinant()));
  const std::vector<Point> fibre = spanning_fibre_points(r);
  for (std::size_t j = 2; j + 2 < out.b.size(); ++j) {
    const Matrix db = (-out.b[j + 2] + 8.0 * out.b[j + 1] - 8.0 * out.b[j - 1] + out.b[j - 2]) / (12.0 * h);
    const Matrix t = out.b[j].inverse() * (contracted(out.s[j]) * out.b[j] + db);
    out.interior_s.push_back(out.s[j]);
    out.transformed.push_back(t);
    rep.max_three_index = std::max(rep.max_three_index, max_abs(t));
    for (const auto& v : fibre) rep.max_two_index = std::max(rep.max_two_index, (t * to_vector(v)).cwiseAbs().maxCoeff());
  }
  rep.pass = rep.max_three_index < tol && rep.max_two_index < tol;
  return out;
}

EquivalenceReport check_equivalence(const std::vector<std::vector<Matrix>>& three, const std::vector<Point>& fibre_points,
                                    double tol) {
  EquivalenceReport rep;
  rep.tolerance = tol;
  if (three.empty()) return rep;
  const int r = static_cast<int>(three.front().front().rows());
  Matrix span(r, static_cast<Eigen::Index>(fibre_points.size()));
  for (std::size_t i = 0; i < fibre_points.size(); ++i) {
    if (static_cast<int>(fibre_points[i].size()) != r) throw Error(ErrorCode::Config, "fibre points need r coordinates");
    span.col(static_cast<Eigen::Index>(i)) = to_vector(fibre_points[i]);
  }
  if (static_cast<int>(fibre_points.size()) < r || Eigen::FullPivLU<Matrix>(span).rank() < r)
    throw Error(ErrorCode::InsufficientSamples, "fibre sample points do not span the fibre (fewer than r independent points)");
  for (const auto& mats : three) {
    ++rep.base_points;
    double three_max = 0.0, two_max = 0.0;
    for (const auto& m : mats) {
      three_max = std::max(three_max, max_abs(m));
      for (const auto& v : fibre_points) two_max = std::max(two_max, (m * to_vector(v)).cwiseAbs().maxCoeff());
    }
    rep.fibre_points += fibre_points.size();
    rep.max_three_index = std::max(rep.max_three_index, three_max);
    rep.max_two_index = std::max(rep.max_two_index, two_max);
    if ((three_max < tol) == (two_max < tol)) ++rep.agreements;
  }
  rep.holds = rep.agreements == rep.base_points;
  return rep;
}

EquivalenceReport check_prop77(const ThreeIndexCoefficients& g3, const std::vector<Point>& base_samples,
                               const BaseMatrixField& b, const BaseMatrixField& bbase,
                               const std::vector<Point>& fibre_points, double tol) {
  std::vector<std::vector<Matrix>> three;
  for (const auto& x : base_samples) three.push_back(transform_three(g3, b, bbase, x));
  return check_equivalence(three, fibre_points, tol);
}

}  // namespace nframes
