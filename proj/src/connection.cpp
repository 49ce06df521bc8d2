// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/connection.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace nframes {

ConnectionCoefficients::ConnectionCoefficients(BundleShape shape, std::vector<Expression> entries, Box domain)
    : shape_(shape), entries_(std::move(entries)), domain_(std::move(domain)) {
  shape_.validate();
  if (entries_.size() != static_cast<std::size_t>(shape_.n * shape_.r))
    throw Error(ErrorCode::Config, "connection needs r*n = " + std::to_string(shape_.n * shape_.r) +
                                       " coefficients, got " + std::to_string(entries_.size()));
  if (domain_.dim() != static_cast<std::size_t>(shape_.dim()))
    throw Error(ErrorCode::Config, "connection domain must have n+r = " + std::to_string(shape_.dim()) + " axes");
}

ConnectionCoefficients ConnectionCoefficients::parse(BundleShape shape,
                                                     const std::vector<std::vector<std::string>>& rows, Box domain) {
  const VariableList vars = shape.variables();
  if (rows.size() != static_cast<std::size_t>(shape.r))
    throw Error(ErrorCode::Config, "gamma needs r = " + std::to_string(shape.r) + " rows");
  std::vector<Expression> entries;
  for (const auto& row : rows) {
    if (row.size() != static_cast<std::size_t>(shape.n))
      throw Error(ErrorCode::Config, "gamma rows need n = " + std::to_string(shape.n) + " entries");
    for (const auto& t : row) entries.push_back(Expression::parse(t, vars));
  }
  return ConnectionCoefficients(shape, std::move(entries), std::move(domain));
}

ConnectionCoefficients ConnectionCoefficients::zero(BundleShape shape, Box domain) {
  const VariableList vars = shape.variables();
  return ConnectionCoefficients(
      shape, std::vector<Expression>(static_cast<std::size_t>(shape.n * shape.r), Expression::constant(0.0, vars)),
      std::move(domain));
}

Matrix ConnectionCoefficients::values(std::span<const double> u) const {
  Matrix m(shape_.r, shape_.n);
  for (int a = 0; a < shape_.r; ++a)
    for (int mu = 0; mu < shape_.n; ++mu) m(a, mu) = entry(a, mu).eval(u);
  return m;
}

std::vector<Matrix> ConnectionCoefficients::gradient(std::span<const double> u) const {
  const int d = shape_.dim();
  std::vector<Matrix> g(static_cast<std::size_t>(d), Matrix(shape_.r, shape_.n));
  std::vector<Dual> env(u.begin(), u.end());
  for (int i = 0; i < d; ++i) {
    env[static_cast<std::size_t>(i)].d = 1.0;
    for (int a = 0; a < shape_.r; ++a)
      for (int mu = 0; mu < shape_.n; ++mu)
        g[static_cast<std::size_t>(i)](a, mu) = entry(a, mu).eval<Dual>(env).d;
    env[static_cast<std::size_t>(i)].d = 0.0;
  }
  return g;
}

std::vector<std::vector<std::string>> ConnectionCoefficients::to_strings() const {
  std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(shape_.r));
  for (int a = 0; a < shape_.r; ++a)
    for (int mu = 0; mu < shape_.n; ++mu) rows[static_cast<std::size_t>(a)].push_back(entry(a, mu).to_string());
  return rows;
}

double CurvatureComponents::max_abs() const {
  double m = 0.0;
  for (double v : upper_) m = std::max(m, std::abs(v));
  return m;
}

Matrix adapted_frame(const ConnectionCoefficients& gamma, std::span<const double> u) {
  const int n = gamma.shape().n, r = gamma.shape().r;
  Matrix m = Matrix::Identity(n + r, n + r);
  m.bottomLeftCorner(r, n) = gamma.values(u);
  return m;
}

Matrix transform_coefficients(const ConnectionCoefficients& gamma, const CoordinateChange& change,
                              std::span<const double> u) {
  const int n = gamma.shape().n, r = gamma.shape().r;
  const Matrix f = change.forward_jacobian(u);
  check_fibre_structure(f, n, r, u);
  checked_inverse(f.bottomRightCorner(r, r), "fibre block of the coordinate change");
  const Matrix base_inv = checked_inverse(f.topLeftCorner(n, n), "base block of the coordinate change");
  return (f.bottomRightCorner(r, r) * gamma.values(u) + f.bottomLeftCorner(r, n)) * base_inv;
}

double fibre_variation(const BlockMatrixFn& a, int n, std::span<const double> u) {
  Point p(u.begin(), u.end());
  double worst = 0.0;
  for (std::size_t k = static_cast<std::size_t>(n); k < p.size(); ++k) {
    const double x = p[k];
    const double h = 1e-3 * std::max(1.0, std::abs(x));
    p[k] = x + h;
    const BlockMatrix plus = a(p);
    p[k] = x - h;
    const BlockMatrix minus = a(p);
    p[k] = x;
    worst = std::max({worst, max_abs(plus.base - minus.base) / (2 * h), max_abs(plus.fibre - minus.fibre) / (2 * h)});
  }
  return worst;
}

Matrix transform_coefficients_frame(const ConnectionCoefficients& gamma, const BlockMatrixFn& a,
                                    std::span<const double> u) {
  const double variation = fibre_variation(a, gamma.shape().n, u);
  if (variation > kFibreTolerance) {
    std::ostringstream os;
    os.precision(3);
    os << "frame transform diagonal blocks vary along the fibre (" << variation << ") at "
       << format_point(Point(u.begin(), u.end()));
    throw Error(ErrorCode::FibreConstancy, os.str());
  }
  const BlockMatrix m = a(u);
  const Matrix fibre_inv = checked_inverse(m.fibre, "fibre block of the frame transform");
  checked_inverse(m.base, "base block of the frame transform");
  return fibre_inv * (gamma.values(u) * m.base - m.mixed);
}

CurvatureComponents curvature(const ConnectionCoefficients& gamma, std::span<const double> u) {
  const int n = gamma.shape().n, r = gamma.shape().r;
  const Matrix v = gamma.values(u);
  const std::vector<Matrix> g = gamma.gradient(u);
  CurvatureComponents out(Point(u.begin(), u.end()), n, r);
  for (int a = 0; a < r; ++a) {
    for (int mu = 0; mu < n; ++mu) {
      for (int nu = mu + 1; nu < n; ++nu) {
        double val = g[static_cast<std::size_t>(mu)](a, nu) - g[static_cast<std::size_t>(nu)](a, mu);
        for (int b = 0; b < r; ++b) {
          const Matrix& gb = g[static_cast<std::size_t>(n + b)];
          val += v(b, mu) * gb(a, nu) - v(b, nu) * gb(a, mu);
        }
        out.set(a, mu, nu, val);
      }
    }
  }
  return out;
}

FlatnessReport check_flat(const ConnectionCoefficients& gamma, const std::vector<Point>& samples, double tol) {
  FlatnessReport rep;
  rep.tolerance = tol;
  for (const auto& p : samples) {
    const double m = curvature(gamma, p).max_abs();
    if (m > rep.max_curvature || rep.worst_point.empty()) {
      rep.max_curvature = std::max(rep.max_curvature, m);
      rep.worst_point = p;
    }
    ++rep.samples;
  }
  rep.flat = !samples.empty() && rep.max_curvature < tol;
  return rep;
}

namespace {

// Adapted frame matrix entries, row major, generic in the scalar type.
template <class S>
std::vector<S> frame_entries(const ConnectionCoefficients& gamma, std::span<const S> u) {
  const int n = gamma.shape().n, r = gamma.shape().r, d = n + r;
  std::vector<S> m(static_cast<std::size_t>(d * d), S(0.0));
  for (int i = 0; i < d; ++i) m[static_cast<std::size_t>(i * d + i)] = S(1.0);
  for (int b = 0; b < r; ++b)
    for (int mu = 0; mu < n; ++mu) m[static_cast<std::size_t>((n + b) * d + mu)] = gamma.entry(b, mu).eval(u);
  return m;
}

}  // namespace

AnholonomyComponents anholonomy_adapted(const ConnectionCoefficients& gamma, std::span<const double> u) {
  const int d = gamma.shape().dim();
  const auto idx = [d](int row, int col) { return static_cast<std::size_t>(row * d + col); };
  const std::vector<double> m = frame_entries<double>(gamma, u);
  // dm[l] = d_l of the frame matrix.
  std::vector<std::vector<double>> dm(static_cast<std::size_t>(d));
  std::vector<Dual> env(u.begin(), u.end());
  for (int l = 0; l < d; ++l) {
    env[static_cast<std::size_t>(l)].d = 1.0;
    const std::vector<Dual> md = frame_entries<Dual>(gamma, env);
    env[static_cast<std::size_t>(l)].d = 0.0;
    auto& out = dm[static_cast<std::size_t>(l)];
    out.resize(md.size());
    for (std::size_t k = 0; k < md.size(); ++k) out[k] = md[k].d;
  }
  Matrix mm(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) mm(i, j) = m[idx(i, j)];
  const Matrix minv = checked_inverse(mm, "adapted frame");

  AnholonomyComponents c(Point(u.begin(), u.end()), d);
  Vector bracket(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int l = 0; l < d; ++l)
          s += m[idx(l, i)] * dm[static_cast<std::size_t>(l)][idx(k, j)] -
               m[idx(l, j)] * dm[static_cast<std::size_t>(l)][idx(k, i)];
        bracket[k] = s;
      }
      const Vector coeff = minv * bracket;
      for (int k = 0; k < d; ++k) c.at(i, j, k) = coeff[k];
    }
  }
  return c;
}

BasePath BasePath::from_expressions(std::vector<Expression> components, double begin, double end) {
  BasePath path;
  path.n = static_cast<int>(components.size());
  path.begin = begin;
  path.end = end;
  path.eval = [comps = std::move(components)](double s, double* x, double* xdot) {
    const Dual arg[1] = {Dual(s, 1.0)};
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const Dual v = comps[i].eval<Dual>(arg);
      x[i] = v.v;
      xdot[i] = v.d;
    }
  };
  return path;
}

BasePath BasePath::polyline(std::vector<Point> vertices, bool smooth) {
  if (vertices.size() < 2) throw Error(ErrorCode::Config, "polyline needs at least two vertices");
  BasePath path;
  path.n = static_cast<int>(vertices.front().size());
  path.begin = 0.0;
  path.end = static_cast<double>(vertices.size() - 1);
  path.eval = [v = std::move(vertices), smooth](double s, double* x, double* xdot) {
    const std::size_t legs = v.size() - 1;
    std::size_t leg = s <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(s));
    if (leg >= legs) leg = legs - 1;
    const double t = s - static_cast<double>(leg);
    const double sigma = smooth ? 0.5 * (1.0 - std::cos(std::numbers::pi * t)) : t;
    const double speed = smooth ? 0.5 * std::numbers::pi * std::sin(std::numbers::pi * t) : 1.0;
    for (std::size_t i = 0; i < v[leg].size(); ++i) {
      const double delta = v[leg + 1][i] - v[leg][i];
      x[i] = v[leg][i] + sigma * delta;
      xdot[i] = speed * delta;
    }
  };
  return path;
}

LiftResult horizontal_lift(const ConnectionCoefficients& gamma, const BasePath& path,
                           std::span<const double> start_fibre, int steps) {
  const int n = gamma.shape().n, r = gamma.shape().r;
  if (path.n != n) throw Error(ErrorCode::Config, "base path dimension does not match the bundle base");
  if (static_cast<int>(start_fibre.size()) != r) throw Error(ErrorCode::Config, "start fibre needs r components");
  if (steps < 1) throw Error(ErrorCode::Config, "lift needs at least one step");

  LiftResult out;
  std::vector<double> xdot(static_cast<std::size_t>(n));
  Point u(static_cast<std::size_t>(n + r));
  std::vector<double> gam(static_cast<std::size_t>(n * r));

  // Evaluates dy/ds at s, returns false if the point leaves the chart domain.
  auto rhs = [&](double s, const double* y, double* dy) {
    path.eval(s, u.data(), xdot.data());
    for (int a = 0; a < r; ++a) u[static_cast<std::size_t>(n + a)] = y[a];
    if (!gamma.domain().contains(u, 1e-12)) return false;
    gamma.eval<double>(u, gam.data());
    for (int a = 0; a < r; ++a) {
      double acc = 0.0;
      for (int mu = 0; mu < n; ++mu) acc += gam[static_cast<std::size_t>(a * n + mu)] * xdot[static_cast<std::size_t>(mu)];
      dy[a] = acc;
    }
    return true;
  };

  const double h = (path.end - path.begin) / steps;
  std::vector<double> y(start_fibre.begin(), start_fibre.end()), k1(y.size()), k2(y.size()), k3(y.size()),
      k4(y.size()), tmp(y.size());
  auto record = [&](double s) {
    Point p(static_cast<std::size_t>(n + r));
    path.eval(s, p.data(), xdot.data());
    for (int a = 0; a < r; ++a) p[static_cast<std::size_t>(n + a)] = y[static_cast<std::size_t>(a)];
    out.s.push_back(s);
    out.points.push_back(std::move(p));
  };

  const std::size_t rr = y.size();
  if (!rhs(path.begin, y.data(), k1.data())) {
    out.exited_domain = true;
    return out;
  }
  record(path.begin);
  for (int i = 0; i < steps; ++i) {
    const double s = path.begin + i * h;
    bool ok = rhs(s, y.data(), k1.data());
    for (std::size_t a = 0; a < rr; ++a) tmp[a] = y[a] + 0.5 * h * k1[a];
    ok = ok && rhs(s + 0.5 * h, tmp.data(), k2.data());
    for (std::size_t a = 0; a < rr; ++a) tmp[a] = y[a] + 0.5 * h * k2[a];
    ok = ok && rhs(s + 0.5 * h, tmp.data(), k3.data());
    for (std::size_t a = 0; a < rr; ++a) tmp[a] = y[a] + h * k3[a];
    ok = ok && rhs(s + h, tmp.data(), k4.data());
    if (!ok) {
      out.exited_domain = true;
      return out;
    }
    for (std::size_t a = 0; a < rr; ++a) y[a] += h / 6.0 * (k1[a] + 2 * k2[a] + 2 * k3[a] + k4[a]);
    const double s_next = i + 1 == steps ? path.end : path.begin + (i + 1) * h;
    Point probe(static_cast<std::size_t>(n + r));
    path.eval(s_next, probe.data(), xdot.data());
    for (int a = 0; a < r; ++a) probe[static_cast<std::size_t>(n + a)] = y[static_cast<std::size_t>(a)];
    if (!gamma.domain().contains(probe, 1e-12)) {
      out.exited_domain = true;
      return out;
    }
    record(s_next);
  }
  return out;
}

NormalFrameReport verify_frame_normal(const ConnectionCoefficients& gamma, const BlockMatrixFn& a,
                                      const std::vector<Point>& samples, double tol) {
  NormalFrameReport rep;
  rep.tolerance = tol;
  for (const auto& p : samples) {
    const double m = max_abs(transform_coefficients_frame(gamma, a, p));
    if (m > rep.max_residual || rep.worst_point.empty()) {
      rep.max_residual = std::max(rep.max_residual, m);
      rep.worst_point = p;
    }
    ++rep.samples;
  }
  rep.pass = !samples.empty() && rep.max_residual < tol;
  return rep;
}

GeneralNormalFrame general_normal_frame(const ConnectionCoefficients& gamma, MatrixFn a_base, MatrixFn a_fibre,
                                        const std::vector<Point>& samples, double tol) {
  GeneralNormalFrame out;
  out.transform = [gamma, a_base, a_fibre](std::span<const double> u) {
    BlockMatrix m;
    m.base = a_base(u);
    m.fibre = a_fibre(u);
    m.mixed = gamma.values(u) * m.base;
    return m;
  };
  out.frame.shape = gamma.shape();
  out.frame.matrix = [gamma, t = out.transform](std::span<const double> u) {
    const BlockMatrix m = t(u);
    const int n = m.n(), r = m.r();
    Matrix diag = Matrix::Zero(n + r, n + r);
    diag.topLeftCorner(n, n) = m.base;
    diag.bottomRightCorner(r, r) = m.fibre;
    return Matrix(adapted_frame(gamma, u) * diag);
  };
  out.report = verify_frame_normal(gamma, out.transform, samples, tol);
  return out;
}

}  // namespace nframes
