// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/param_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nframes {

ParamMap::ParamMap(BundleShape shape, Box domain, std::vector<Expression> components)
    : shape_(shape), domain_(std::move(domain)), components_(std::move(components)) {
  shape_.validate();
  domain_.validate();
  if (static_cast<int>(components_.size()) != shape_.dim())
    throw Error(ErrorCode::Config, "parameterized map needs n+r = " + std::to_string(shape_.dim()) + " components");
  if (k() > shape_.n) throw Error(ErrorCode::Config, "parameter count k cannot exceed the base dimension n");
}

ParamMap ParamMap::parse(BundleShape shape, Box domain, const std::vector<std::string>& components) {
  const VariableList vars = parameter_variables(static_cast<int>(domain.dim()));
  std::vector<Expression> comps;
  for (const auto& c : components) comps.push_back(Expression::parse(c, vars));
  return ParamMap(shape, std::move(domain), std::move(comps));
}

Point ParamMap::point(std::span<const double> s) const {
  Point p;
  p.reserve(components_.size());
  for (const auto& c : components_) p.push_back(c.eval(s));
  return p;
}

Matrix ParamMap::jacobian(std::span<const double> s) const {
  Matrix j(shape_.dim(), k());
  std::vector<Dual> env(s.begin(), s.end());
  for (int a = 0; a < k(); ++a) {
    env[static_cast<std::size_t>(a)].d = 1.0;
    for (int i = 0; i < shape_.dim(); ++i) j(i, a) = components_[static_cast<std::size_t>(i)].eval<Dual>(env).d;
    env[static_cast<std::size_t>(a)].d = 0.0;
  }
  return j;
}

std::vector<int> select_pivots(const Matrix& jac, int n, int k) {
  Matrix rows = jac.topRows(n);
  std::vector<int> chosen;
  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_norm = -1.0;
    for (int mu = 0; mu < n; ++mu) {
      if (std::find(chosen.begin(), chosen.end(), mu) != chosen.end()) continue;
      const double norm = rows.row(mu).norm();
      if (norm > best_norm) {
        best_norm = norm;
        best = mu;
      }
    }
    chosen.push_back(best);
    // Remove the chosen direction from the remaining rows.
    const Vector dir = rows.row(best).transpose();
    const double dn = dir.squaredNorm();
    if (dn > 0.0)
      for (int mu = 0; mu < n; ++mu) rows.row(mu) -= (rows.row(mu).dot(dir) / dn) * dir.transpose();
  }
  return chosen;
}

ParamMap::Regularity ParamMap::regularity(const std::vector<Point>& samples) const {
  Regularity rep;
  rep.min_singular_value = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const Matrix j = jacobian(s);
    const Eigen::JacobiSVD<Matrix> svd(j);
    const double smin = svd.singularValues().minCoeff();
    if (smin < rep.min_singular_value) {
      rep.min_singular_value = smin;
      rep.worst = s;
    }
    if (!(smin > 1e-12 * std::max(1.0, svd.singularValues().maxCoeff()))) rep.regular = false;
    if (max_abs(j.topRows(shape_.n)) < 1e-12) rep.non_vertical = false;
    rep.pivots.push_back(select_pivots(j, shape_.n, k()));
  }
  return rep;
}

struct AdaptedChart::State {
  ParamMap beta;
  BundleShape shape;
  int k = 1;
  Point s0;
  std::vector<int> pivots;
  std::vector<int> order;
  Point t0;
  Box window;
  bool affine = false;
  Matrix affine_inv;
  Point q0;
  // d beta^{pivots[i]} / d s^j, index i*k + j.
  std::vector<Expression> dpiv;
  std::vector<Expression> eta;
  std::optional<std::vector<Expression>> forward;

  Point pivot_values(std::span<const double> s) const {
    Point q(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      q[static_cast<std::size_t>(i)] = beta.components()[static_cast<std::size_t>(pivots[static_cast<std::size_t>(i)])].eval(s);
    return q;
  }

  Matrix pivot_jacobian(std::span<const double> s) const {
    Matrix j(k, k);
    for (int i = 0; i < k; ++i)
      for (int a = 0; a < k; ++a) j(i, a) = dpiv[static_cast<std::size_t>(i * k + a)].eval(s);
    return j;
  }

  Point solve(std::span<const double> q) const;
  Point solve_monotone(double q) const;
  Point solve_newton(std::span<const double> q) const;
};

namespace {

[[noreturn]] void inversion_failure(const std::string& why, std::span<const double> q) {
  throw Error(ErrorCode::Inversion, "adapted chart inversion failed (" + why + ") for pivot values " +
                                        format_point(Point(q.begin(), q.end())));
}

}  // namespace

Point AdaptedChart::State::solve(std::span<const double> q) const {
  if (affine) {
    Point s = s0;
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i)
        s[static_cast<std::size_t>(j)] += affine_inv(j, i) * (q[static_cast<std::size_t>(i)] - q0[static_cast<std::size_t>(i)]);
    return s;
  }
  if (k == 1) return solve_monotone(q[0]);
  return solve_newton(q);
}

// Safeguarded Newton on the monotone pivot component over the window.
Point AdaptedChart::State::solve_monotone(double q) const {
  const Expression& b = beta.components()[static_cast<std::size_t>(pivots[0])];
  const Expression& db = dpiv[0];
  auto g = [&](double s) {
    const double arg[1] = {s};
    return b.eval<double>(arg) - q;
  };
  auto dg = [&](double s) {
    const double arg[1] = {s};
    return db.eval<double>(arg);
  };
  double lo = window.lo[0], hi = window.hi[0];
  double glo = g(lo), ghi = g(hi);
  if (glo == 0.0) return {lo};
  if (ghi == 0.0) return {hi};
  if ((glo > 0.0) == (ghi > 0.0)) {
    const double qa[1] = {q};
    inversion_failure("value outside the image of the validity window", qa);
  }
  if (glo > 0.0) std::swap(lo, hi);  // g(lo) < 0 < g(hi)
  double s = s0[0] - g(s0[0]) / dg(s0[0]);
  if (!(s > std::min(lo, hi) && s < std::max(lo, hi))) s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gs = g(s);
    if (gs == 0.0) return {s};
    if (gs < 0.0) lo = s; else hi = s;
    const double ds = dg(s);
    double next = ds != 0.0 ? s - gs / ds : 0.5 * (lo + hi);
    if (!(next > std::min(lo, hi) && next < std::max(lo, hi))) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 4e-16 * (1.0 + std::abs(s))) return {next};
    if (std::abs(hi - lo) <= 4e-16 * (1.0 + std::abs(s))) return {0.5 * (lo + hi)};
    s = next;
  }
  return {s};
}

// Damped Newton from the linearization at s0.
Point AdaptedChart::State::solve_newton(std::span<const double> q) const {
  const Vector qv = to_vector(q);
  Vector s = to_vector(s0);
  {
    const Matrix j0 = pivot_jacobian(s0);
    s += checked_solve(j0, qv - to_vector(q0), "pivot Jacobian");
  }
  auto residual = [&](const Vector& x) {
    const Point p = to_point(x);
    return Vector(to_vector(pivot_values(p)) - qv);
  };
  Vector res = residual(s);
  for (int it = 0; it < 100; ++it) {
    const double rn = res.norm();
    if (rn <= 1e-15 * (1.0 + qv.norm())) break;
    const Matrix j = pivot_jacobian(to_point(s));
    const Vector step = checked_solve(j, res, "pivot Jacobian");
    double lambda = 1.0;
    Vector trial = s - step;
    Vector trial_res = residual(trial);
    while (trial_res.norm() >= rn && lambda > 1e-6) {
      lambda *= 0.5;
      trial = s - lambda * step;
      trial_res = residual(trial);
    }
    if (trial_res.norm() >= rn) break;
    const bool tiny = (trial - s).norm() <= 1e-15 * (1.0 + s.norm());
    s = trial;
    res = trial_res;
    if (tiny) break;
  }
  if (!(res.norm() <= 1e-10 * (1.0 + qv.norm()))) inversion_failure("Newton did not converge", q);
  return to_point(s);
}

int AdaptedChart::k() const { return st_->k; }
const BundleShape& AdaptedChart::shape() const { return st_->shape; }
const ParamMap& AdaptedChart::map() const { return st_->beta; }
const Point& AdaptedChart::s0() const { return st_->s0; }
const std::vector<int>& AdaptedChart::order() const { return st_->order; }
const std::vector<int>& AdaptedChart::pivots() const { return st_->pivots; }
const Point& AdaptedChart::t0() const { return st_->t0; }
const Box& AdaptedChart::window() const { return st_->window; }
bool AdaptedChart::pivot_affine() const { return st_->affine; }
std::optional<std::vector<Expression>> AdaptedChart::forward_expressions() const { return st_->forward; }
const std::vector<Expression>& AdaptedChart::inverse_expressions() const { return st_->eta; }

Point AdaptedChart::pivot_solve(std::span<const double> q) const { return st_->solve(q); }

template <class S>
std::vector<S> AdaptedChart::pivot_solve(std::span<const S> q) const {
  if constexpr (std::is_same_v<S, double>) {
    return st_->solve(q);
  } else {
    Point qv(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) qv[i] = q[i].v;
    const Point s = st_->solve(qv);
    // Implicit derivative: ds = J^-1 dq.
    Vector dq(static_cast<Eigen::Index>(q.size()));
    for (std::size_t i = 0; i < q.size(); ++i) dq[static_cast<Eigen::Index>(i)] = q[i].d;
    const Vector ds = st_->affine ? Vector(st_->affine_inv * dq)
                                  : checked_solve(st_->pivot_jacobian(s), dq, "pivot Jacobian");
    std::vector<S> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = S(s[i], ds[static_cast<Eigen::Index>(i)]);
    return out;
  }
}

template <class S>
std::vector<S> AdaptedChart::to_chart(std::span<const S> u) const {
  const State& st = *st_;
  const int d = st.shape.dim();
  std::vector<S> q(static_cast<std::size_t>(st.k));
  for (int i = 0; i < st.k; ++i) q[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(st.pivots[static_cast<std::size_t>(i)])];
  const std::vector<S> s = pivot_solve<S>(std::span<const S>(q));
  std::vector<S> x(static_cast<std::size_t>(d));
  for (int K = 0; K < d; ++K) {
    if (K < st.k) {
      x[static_cast<std::size_t>(K)] = s[static_cast<std::size_t>(K)];
    } else {
      const int I = st.order[static_cast<std::size_t>(K)];
      x[static_cast<std::size_t>(K)] = u[static_cast<std::size_t>(I)] -
                                       st.beta.components()[static_cast<std::size_t>(I)].eval(std::span<const S>(s)) +
                                       st.t0[static_cast<std::size_t>(K)];
    }
  }
  return x;
}

template std::vector<double> AdaptedChart::pivot_solve<double>(std::span<const double>) const;
template std::vector<Dual> AdaptedChart::pivot_solve<Dual>(std::span<const Dual>) const;
template std::vector<double> AdaptedChart::to_chart<double>(std::span<const double>) const;
template std::vector<Dual> AdaptedChart::to_chart<Dual>(std::span<const Dual>) const;

Point AdaptedChart::from_chart(std::span<const double> x) const {
  Point u;
  for (const auto& e : st_->eta) u.push_back(e.eval(x));
  return u;
}

CoordinateChange AdaptedChart::forward_change() const {
  if (st_->forward) {
    std::vector<Field> f(st_->forward->begin(), st_->forward->end());
    return CoordinateChange(st_->shape, std::move(f));
  }
  std::vector<Field> f;
  for (int K = 0; K < st_->shape.dim(); ++K) {
    f.push_back(Field::generic([chart = *this, K](auto u) {
      using S = typename decltype(u)::value_type;
      return chart.to_chart<S>(u)[static_cast<std::size_t>(K)];
    }));
  }
  return CoordinateChange(st_->shape, std::move(f));
}

ConnectionCoefficients AdaptedChart::chart_coefficients(const ConnectionCoefficients& gamma) const {
  const State& st = *st_;
  const int n = st.shape.n, r = st.shape.r;
  const VariableList cv = st.shape.variables();
  std::vector<Expression> sub;
  for (int a = 0; a < r; ++a)
    for (int nu = 0; nu < n; ++nu) sub.push_back(substitute(gamma.entry(a, nu), st.eta));
  std::vector<Expression> entries;
  for (int a = 0; a < r; ++a) {
    for (int K = 0; K < n; ++K) {
      Expression e = -differentiate(st.eta[static_cast<std::size_t>(n + a)], K);
      for (int nu = 0; nu < n; ++nu) {
        const Expression d = differentiate(st.eta[static_cast<std::size_t>(nu)], K);
        if (d.is_zero()) continue;
        e = sub[static_cast<std::size_t>(a * n + nu)] * d + e;
      }
      entries.push_back(e);
    }
  }
  Box box;
  box.lo.assign(static_cast<std::size_t>(st.shape.dim()), -1e300);
  box.hi.assign(static_cast<std::size_t>(st.shape.dim()), 1e300);
  for (int a = 0; a < st.k; ++a) {
    box.lo[static_cast<std::size_t>(a)] = st.window.lo[static_cast<std::size_t>(a)];
    box.hi[static_cast<std::size_t>(a)] = st.window.hi[static_cast<std::size_t>(a)];
  }
  return ConnectionCoefficients(st.shape, std::move(entries), std::move(box));
}

double AdaptedChart::invariant_residual(const std::vector<Point>& s_samples) const {
  double worst = 0.0;
  for (const auto& s : s_samples) {
    const Point x = to_chart(st_->beta.point(s));
    for (int K = 0; K < st_->shape.dim(); ++K) {
      const double want = K < st_->k ? s[static_cast<std::size_t>(K)] : st_->t0[static_cast<std::size_t>(K)];
      worst = std::max(worst, std::abs(x[static_cast<std::size_t>(K)] - want));
    }
  }
  return worst;
}

namespace {

std::vector<Point> window_samples(const Box& w, int per_axis) { return sample_box(w, per_axis, 0, 0); }

}  // namespace

AdaptedChart AdaptedChart::build(const ParamMap& beta, std::span<const double> s0) {
  auto st = std::make_shared<State>();
  st->beta = beta;
  st->shape = beta.shape();
  st->k = beta.k();
  st->s0.assign(s0.begin(), s0.end());
  const int n = st->shape.n, r = st->shape.r, k = st->k;
  if (static_cast<int>(s0.size()) != k) throw Error(ErrorCode::Config, "s0 needs k components");
  if (!beta.domain().contains(s0)) throw Error(ErrorCode::Config, "s0 lies outside the parameter box");

  const Matrix j = beta.jacobian(s0);
  const Matrix base_rows = j.topRows(n);
  if (max_abs(base_rows) < 1e-12)
    throw Error(ErrorCode::VerticalTangent, "map tangent is vertical at s0 = " + format_point(st->s0) +
                                                ": the chart would not be a bundle chart");
  const Eigen::JacobiSVD<Matrix> svd(base_rows);
  const auto sv = svd.singularValues();
  if (!(sv.minCoeff() > 1e-10 * sv.maxCoeff()))
    throw Error(k == 1 ? ErrorCode::VerticalTangent : ErrorCode::RankDeficient,
                "base rows of the parameter Jacobian have rank below k at s0 = " + format_point(st->s0));

  st->pivots = select_pivots(j, n, k);
  st->order = st->pivots;
  for (int mu = 0; mu < n; ++mu)
    if (std::find(st->pivots.begin(), st->pivots.end(), mu) == st->pivots.end()) st->order.push_back(mu);
  for (int a = 0; a < r; ++a) st->order.push_back(n + a);

  const Point b0 = beta.point(s0);
  st->t0.assign(static_cast<std::size_t>(n + r), 0.0);
  for (int K = k; K < n + r; ++K) st->t0[static_cast<std::size_t>(K)] = b0[static_cast<std::size_t>(st->order[static_cast<std::size_t>(K)])];
  st->q0 = st->pivot_values(s0);

  st->affine = true;
  for (int i = 0; i < k; ++i) {
    for (int a = 0; a < k; ++a) {
      Expression d = differentiate(beta.components()[static_cast<std::size_t>(st->pivots[static_cast<std::size_t>(i)])], a);
      if (!d.is_constant()) st->affine = false;
      st->dpiv.push_back(std::move(d));
    }
  }
  const Matrix jp0 = st->pivot_jacobian(s0);
  if (st->affine) st->affine_inv = checked_inverse(jp0, "pivot Jacobian");

  // Validity window.
  st->window = beta.domain();
  if (k == 1) {
    const double lo = beta.domain().lo[0], hi = beta.domain().hi[0];
    const double step = (hi - lo) / 1000.0;
    const double d0 = jp0(0, 0);
    auto keeps_sign = [&](double s) {
      try {
        const double arg[1] = {s};
        return st->dpiv[0].eval<double>(arg) * d0 > 0.0;
      } catch (const DomainError&) {
        return false;
      }
    };
    double up = s0[0];
    while (up < hi) {
      const double next = std::min(up + step, hi);
      if (!keeps_sign(next)) break;
      up = next;
    }
    double down = s0[0];
    while (down > lo) {
      const double next = std::max(down - step, lo);
      if (!keeps_sign(next)) break;
      down = next;
    }
    if (!(down < up)) throw Error(ErrorCode::EmptyWindow, "validity window around s0 is empty");
    st->window = Box{{down}, {up}};
  } else {
    const double det0 = jp0.determinant();
    for (int attempt = 0;; ++attempt) {
      bool ok = true;
      for (const auto& s : window_samples(st->window, 9)) {
        double det = 0.0;
        try {
          det = st->pivot_jacobian(s).determinant();
        } catch (const DomainError&) {
          ok = false;
          break;
        }
        if (!(det * det0 > 0.0) || std::abs(det) < 1e-8 * std::abs(det0)) {
          ok = false;
          break;
        }
      }
      if (ok) break;
      if (attempt == 40) throw Error(ErrorCode::EmptyWindow, "no validity window found around s0");
      for (int a = 0; a < k; ++a) {
        auto& lo = st->window.lo[static_cast<std::size_t>(a)];
        auto& hi = st->window.hi[static_cast<std::size_t>(a)];
        lo = s0[static_cast<std::size_t>(a)] - 0.5 * (s0[static_cast<std::size_t>(a)] - lo);
        hi = s0[static_cast<std::size_t>(a)] + 0.5 * (hi - s0[static_cast<std::size_t>(a)]);
      }
    }
  }

  // Inverse chart eta(x) as DSL over the chart variables.
  const VariableList cv = st->shape.variables();
  std::vector<Expression> svars;
  for (int a = 0; a < k; ++a) svars.push_back(Expression::variable(a, cv));
  st->eta.assign(static_cast<std::size_t>(n + r), Expression());
  for (int K = 0; K < n + r; ++K) {
    const int I = st->order[static_cast<std::size_t>(K)];
    const Expression b = substitute(beta.components()[static_cast<std::size_t>(I)], svars);
    st->eta[static_cast<std::size_t>(I)] =
        K < k ? b : Expression::variable(K, cv) + (b - Expression::constant(st->t0[static_cast<std::size_t>(K)], cv));
  }

  // Forward chart as DSL when the pivot inverse is affine.
  if (st->affine) {
    const VariableList uv = st->shape.variables();
    std::vector<Expression> s_of_u;
    for (int a = 0; a < k; ++a) {
      Expression e = Expression::constant(st->s0[static_cast<std::size_t>(a)], uv);
      for (int i = 0; i < k; ++i) {
        const Expression q = Expression::variable(st->pivots[static_cast<std::size_t>(i)], uv) -
                             Expression::constant(st->q0[static_cast<std::size_t>(i)], uv);
        e = e + Expression::constant(st->affine_inv(a, i), uv) * q;
      }
      s_of_u.push_back(e);
    }
    std::vector<Expression> fwd;
    for (int K = 0; K < n + r; ++K) {
      if (K < k) {
        fwd.push_back(s_of_u[static_cast<std::size_t>(K)]);
      } else {
        const int I = st->order[static_cast<std::size_t>(K)];
        const Expression b = substitute(beta.components()[static_cast<std::size_t>(I)], s_of_u);
        fwd.push_back(Expression::variable(I, uv) - b + st->t0[static_cast<std::size_t>(K)]);
      }
    }
    st->forward = std::move(fwd);
  }

  AdaptedChart chart;
  chart.st_ = std::move(st);

  const double residual = chart.invariant_residual(window_samples(chart.window(), k == 1 ? 101 : 11));
  if (!(residual <= kChartTolerance)) {
    std::ostringstream os;
    os.precision(3);
    os << "adapted chart invariant violated: max |x(beta(s)) - (s, t0)| = " << residual;
    throw Error(ErrorCode::Inversion, os.str());
  }
  return chart;
}

AdaptedChart adapt_chart_to_path(const ParamMap& beta, double s0) {
  if (beta.k() != 1) throw Error(ErrorCode::Config, "path charts need a one-parameter map");
  const double s[1] = {s0};
  return AdaptedChart::build(beta, s);
}

AdaptedChart adapt_chart_to_map(const ParamMap& beta, std::span<const double> s0) {
  return AdaptedChart::build(beta, s0);
}

}  // namespace nframes
