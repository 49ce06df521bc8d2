// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/normal_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nframes {

namespace {

std::vector<Point> grid_nodes(const Box& box, int grid) { return sample_box(box, grid, 0, 0); }

}  // namespace

IntegrabilityReport check_integrability(const AdaptedChart& chart, const ConnectionCoefficients& gx, int grid,
                                        double tol) {
  if (grid < 2) throw Error(ErrorCode::Config, "grid needs at least two nodes per axis");
  const int n = chart.shape().n, r = chart.shape().r, k = chart.k();
  IntegrabilityReport rep;
  rep.grid = grid;
  double scale = 0.0;
  for (const auto& s : grid_nodes(chart.window(), grid)) {
    ++rep.nodes;
    const Point y = chart.on_map<double>(s);
    const Matrix g = gx.values(y);
    scale = std::max(scale, max_abs(g));
    if (k < 2) continue;
    const CurvatureComponents curv = curvature(gx, y);
    for (int a = 0; a < r; ++a)
      for (int al = 0; al < k; ++al)
        for (int be = al + 1; be < k; ++be) {
          const double v = std::abs(curv(a, al, be));
          if (v > rep.curvature_residual || rep.curvature_worst.empty()) {
            rep.curvature_residual = std::max(rep.curvature_residual, v);
            rep.curvature_worst = s;
          }
        }
    for (int al = 0; al < k; ++al)
      for (int be = al + 1; be < k; ++be)
        for (int c = 0; c < r; ++c)
          for (int b = 0; b < r; ++b) {
            double v = 0.0;
            for (int d = 0; d < r; ++d) {
              const auto i = static_cast<std::size_t>(n + b), j = static_cast<std::size_t>(n + d);
              v += g(d, al) * derive2(gx.entry(c, be), y, i, j) - g(d, be) * derive2(gx.entry(c, al), y, i, j);
            }
            v = std::abs(v);
            if (v > rep.second_order_residual || rep.second_order_worst.empty()) {
              rep.second_order_residual = std::max(rep.second_order_residual, v);
              rep.second_order_worst = s;
            }
          }
  }
  rep.tolerance = tol * (1.0 + scale);
  rep.curvature_pass = rep.curvature_residual <= rep.tolerance;
  rep.second_order_pass = rep.second_order_residual <= rep.tolerance;
  return rep;
}

struct FrameAlongMap::State {
  AdaptedChart chart;
  ConnectionCoefficients gx;
  int n = 1, r = 1, k = 1, grid = 2;
  double ode_step = 1e-3;
  Box window;
  Point s1;
  Matrix b_start;
  // k_exprs[alpha][c*r + b] = d Gx^c_alpha / d x^{n+b}
  std::vector<std::vector<Expression>> k_exprs;
  // dd_exprs[alpha][a*r + c] = d D^a_c / d s^alpha; empty when D is zero.
  std::vector<std::vector<Expression>> dd_exprs;
  // Per node: B (r*r, row major) then f (r).
  std::vector<Point> states;
  double path_independence = 0.0;
  double min_abs_det = 0.0;

  std::size_t width() const { return static_cast<std::size_t>(r * r + r); }
  double coord(int axis, int i) const {
    const double lo = window.lo[static_cast<std::size_t>(axis)], hi = window.hi[static_cast<std::size_t>(axis)];
    return i == grid - 1 ? hi : lo + i * (hi - lo) / (grid - 1);
  }
  double spacing(int axis) const {
    return (window.hi[static_cast<std::size_t>(axis)] - window.lo[static_cast<std::size_t>(axis)]) / (grid - 1);
  }
  int nearest(int axis, double v) const {
    const double t = (v - window.lo[static_cast<std::size_t>(axis)]) / spacing(axis);
    return std::clamp(static_cast<int>(std::lround(t)), 0, grid - 1);
  }
  std::size_t flat(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < k; ++a) f = f * static_cast<std::size_t>(grid) + static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
    return f;
  }
  std::vector<int> unflat(std::size_t f) const {
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int a = k - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(f % static_cast<std::size_t>(grid));
      f /= static_cast<std::size_t>(grid);
    }
    return idx;
  }

  template <class S> void rhs(int axis, const std::vector<S>& s, const std::vector<S>& y, std::vector<S>& dy) const {
    const std::vector<S> p = chart.on_map<S>(std::span<const S>(s));
    const std::span<const S> ps(p);
    std::vector<S> g(static_cast<std::size_t>(r)), kk(static_cast<std::size_t>(r * r));
    for (int c = 0; c < r; ++c) g[static_cast<std::size_t>(c)] = gx.entry(c, axis).eval(ps);
    const auto& ke = k_exprs[static_cast<std::size_t>(axis)];
    for (std::size_t i = 0; i < kk.size(); ++i) kk[i] = ke[i].eval(ps);
    dy.assign(width(), S(0.0));
    for (int a = 0; a < r; ++a) {
      for (int b = 0; b < r; ++b) {
        S acc(0.0);
        for (int c = 0; c < r; ++c) acc = acc - y[static_cast<std::size_t>(a * r + c)] * kk[static_cast<std::size_t>(c * r + b)];
        if (!dd_exprs.empty()) acc = acc + dd_exprs[static_cast<std::size_t>(axis)][static_cast<std::size_t>(a * r + b)].eval(std::span<const S>(s));
        dy[static_cast<std::size_t>(a * r + b)] = acc;
      }
      S acc(0.0);
      for (int c = 0; c < r; ++c) acc = acc - y[static_cast<std::size_t>(a * r + c)] * g[static_cast<std::size_t>(c)];
      dy[static_cast<std::size_t>(r * r + a)] = acc;
    }
  }

  // RK4 along one axis from p[axis] to target; p is updated.
  template <class S> void leg(std::vector<S>& y, std::vector<S>& p, int axis, S target) const {
    const auto ax = static_cast<std::size_t>(axis);
    const double dist = value_of(target) - value_of(p[ax]);
    if constexpr (std::is_same_v<S, double>) {
      if (dist == 0.0) return;
    }
    const int m = std::max(1, static_cast<int>(std::ceil(std::abs(dist) / ode_step - 1e-9)));
    const S h = (target - p[ax]) / static_cast<double>(m);
    const S start = p[ax];
    std::vector<S> k1, k2, k3, k4, tmp(y.size());
    for (int i = 0; i < m; ++i) {
      auto at = [&](const S& offset) {
        std::vector<S> q = p;
        q[ax] = q[ax] + offset;
        return q;
      };
      p[ax] = start + h * static_cast<double>(i);
      rhs(axis, p, y, k1);
      for (std::size_t j = 0; j < y.size(); ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
      rhs(axis, at(0.5 * h), tmp, k2);
      for (std::size_t j = 0; j < y.size(); ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
      rhs(axis, at(0.5 * h), tmp, k3);
      for (std::size_t j = 0; j < y.size(); ++j) tmp[j] = y[j] + h * k3[j];
      rhs(axis, at(h), tmp, k4);
      for (std::size_t j = 0; j < y.size(); ++j) y[j] = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    p[ax] = target;
  }

  Point initial() const {
    Point y(width(), 0.0);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) y[static_cast<std::size_t>(a * r + b)] = b_start(a, b);
    return y;
  }

  Point node_coords(const std::vector<int>& idx) const {
    Point p(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) p[static_cast<std::size_t>(a)] = coord(a, idx[static_cast<std::size_t>(a)]);
    return p;
  }

  std::vector<Point> sweep(const std::vector<int>& order) const {
    std::vector<Point> out(static_cast<std::size_t>(std::pow(grid, k)));
    std::vector<int> root(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) root[static_cast<std::size_t>(a)] = nearest(a, s1[static_cast<std::size_t>(a)]);
    Point y = initial();
    Point p = s1;
    const Point rc = node_coords(root);
    for (int a : order) leg<double>(y, p, a, rc[static_cast<std::size_t>(a)]);
    out[flat(root)] = y;
    std::vector<std::vector<int>> frontier{root};
    for (int axis : order) {
      std::vector<std::vector<int>> next;
      for (const auto& start : frontier) {
        next.push_back(start);
        for (int dir : {1, -1}) {
          std::vector<int> idx = start;
          Point state = out[flat(start)];
          Point pos = node_coords(start);
          for (int i = start[static_cast<std::size_t>(axis)] + dir; i >= 0 && i < grid; i += dir) {
            idx[static_cast<std::size_t>(axis)] = i;
            leg<double>(state, pos, axis, coord(axis, i));
            out[flat(idx)] = state;
            next.push_back(idx);
          }
        }
      }
      frontier = std::move(next);
    }
    return out;
  }

  template <class S> void local(std::span<const S> s, S* f, S* b) const {
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) idx[static_cast<std::size_t>(a)] = nearest(a, value_of(s[static_cast<std::size_t>(a)]));
    const Point& node = states[flat(idx)];
    std::vector<S> y(node.begin(), node.end());
    const Point nc = node_coords(idx);
    std::vector<S> p(nc.begin(), nc.end());
    for (int a = 0; a < k; ++a) leg<S>(y, p, a, s[static_cast<std::size_t>(a)]);
    for (int i = 0; i < r * r; ++i) b[i] = y[static_cast<std::size_t>(i)];
    for (int a = 0; a < r; ++a) f[a] = y[static_cast<std::size_t>(r * r + a)];
  }
};

int FrameAlongMap::k() const { return st_->k; }
int FrameAlongMap::grid() const { return st_->grid; }
const Box& FrameAlongMap::window() const { return st_->window; }
const Point& FrameAlongMap::s1() const { return st_->s1; }
Point FrameAlongMap::node(std::size_t flat) const { return st_->node_coords(st_->unflat(flat)); }
std::size_t FrameAlongMap::node_count() const { return st_->states.size(); }
double FrameAlongMap::path_independence() const { return st_->path_independence; }
double FrameAlongMap::min_abs_det() const { return st_->min_abs_det; }

Matrix FrameAlongMap::b_at(std::size_t flat) const {
  const int r = st_->r;
  Matrix m(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) m(a, b) = st_->states[flat][static_cast<std::size_t>(a * r + b)];
  return m;
}

Point FrameAlongMap::f_at(std::size_t flat) const {
  const auto& y = st_->states[flat];
  return Point(y.end() - st_->r, y.end());
}

void FrameAlongMap::eval(std::span<const double> s, double* f, double* b) const { st_->local(s, f, b); }
void FrameAlongMap::eval(std::span<const Dual> s, Dual* f, Dual* b) const { st_->local(s, f, b); }

void FrameAlongMap::integrate_to(std::span<const double> s, const std::vector<int>& order, double* f,
                                 double* b) const {
  Point y = st_->initial();
  Point p = st_->s1;
  for (int a : order) st_->leg<double>(y, p, a, s[static_cast<std::size_t>(a)]);
  const int r = st_->r;
  for (int i = 0; i < r * r; ++i) b[i] = y[static_cast<std::size_t>(i)];
  for (int a = 0; a < r; ++a) f[a] = y[static_cast<std::size_t>(r * r + a)];
}

FrameAlongMap solve_frame_field(const AdaptedChart& chart, const ConnectionCoefficients& gx,
                                const FrameFieldOptions& options) {
  auto st = std::make_shared<FrameAlongMap::State>();
  st->chart = chart;
  st->gx = gx;
  st->n = chart.shape().n;
  st->r = chart.shape().r;
  st->k = chart.k();
  st->grid = options.grid;
  st->ode_step = options.ode_step;
  st->window = chart.window();
  const int n = st->n, r = st->r, k = st->k;
  if (options.grid < 2) throw Error(ErrorCode::Config, "grid needs at least two nodes per axis");
  if (!(options.ode_step > 0.0)) throw Error(ErrorCode::Config, "ODE step must be positive");
  st->s1 = options.s1.empty() ? chart.s0() : options.s1;
  if (static_cast<int>(st->s1.size()) != k || !st->window.contains(st->s1, 1e-12))
    throw Error(ErrorCode::Config, "s1 must be a point of the validity window");
  st->b_start = options.b_start.size() == 0 ? Matrix(Matrix::Identity(r, r)) : options.b_start;
  if (st->b_start.rows() != r || st->b_start.cols() != r) throw Error(ErrorCode::Config, "B at s1 must be r x r");
  checked_inverse(st->b_start, "B at s1");

  st->k_exprs.resize(static_cast<std::size_t>(k));
  for (int al = 0; al < k; ++al)
    for (int c = 0; c < r; ++c)
      for (int b = 0; b < r; ++b) st->k_exprs[static_cast<std::size_t>(al)].push_back(differentiate(gx.entry(c, al), n + b));
  if (!options.d.empty()) {
    if (static_cast<int>(options.d.size()) != r * r) throw Error(ErrorCode::Config, "D needs r*r entries");
    const VariableList sv = parameter_variables(k);
    std::vector<Expression> d;
    for (const auto& t : options.d) d.push_back(Expression::parse(t, sv));
    st->dd_exprs.resize(static_cast<std::size_t>(k));
    for (int al = 0; al < k; ++al)
      for (const auto& e : d) st->dd_exprs[static_cast<std::size_t>(al)].push_back(differentiate(e, al));
  }

  std::vector<int> forward(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) forward[static_cast<std::size_t>(a)] = a;
  std::vector<int> reversed(forward.rbegin(), forward.rend());
  st->states = st->sweep(forward);
  double scale = 0.0;
  st->min_abs_det = std::numeric_limits<double>::infinity();
  for (const auto& y : st->states)
    for (double v : y) scale = std::max(scale, std::abs(v));
  if (k > 1) {
    const std::vector<Point> other = st->sweep(reversed);
    for (std::size_t i = 0; i < other.size(); ++i)
      for (std::size_t j = 0; j < other[i].size(); ++j)
        st->path_independence = std::max(st->path_independence, std::abs(other[i][j] - st->states[i][j]));
  }
  FrameAlongMap out;
  out.st_ = st;
  for (std::size_t i = 0; i < st->states.size(); ++i) {
    const Matrix b = out.b_at(i);
    st->min_abs_det = std::min(st->min_abs_det, std::abs(b.determinant()));
    if (condition_estimate(b) > kMaxCondition)
      throw Error(ErrorCode::DetCollapse, "frame B degenerates at s = " + format_point(out.node(i)));
  }
  if (st->path_independence > options.tolerance * (1.0 + scale)) {
    std::ostringstream os;
    os.precision(3);
    os << "frame field depends on the integration path: sweep difference " << st->path_independence;
    throw Error(ErrorCode::PathDependence, os.str());
  }
  return out;
}

MapResult theorem_a1(const ConnectionCoefficients& gamma, const ParamMap& beta, std::span<const double> s0,
                     const MapOptions& options) {
  if (!(gamma.shape() == beta.shape())) throw Error(ErrorCode::Config, "map and connection shapes differ");
  if (!(options.tolerance > 0.0) || !(options.integrability_tol > 0.0))
    throw Error(ErrorCode::Config, "tolerances must be positive");
  MapResult res;
  AdaptedChart chart = adapt_chart_to_map(beta, s0);
  ConnectionCoefficients gx = chart.chart_coefficients(gamma);
  res.integrability = check_integrability(chart, gx, options.frame.grid, options.integrability_tol);
  if (!res.integrability.pass()) {
    std::ostringstream os;
    os.precision(6);
    os << "no coordinates normal along the map exist: curvature residual " << res.integrability.curvature_residual
       << ", fibre second-order residual " << res.integrability.second_order_residual << " (tolerance "
       << res.integrability.tolerance << ")";
    res.obstruction = ObstructionReport{res.integrability, os.str()};
    return res;
  }
  auto frame = std::make_shared<const FrameAlongMap>(solve_frame_field(chart, gx, options.frame));
  res.frame = frame;
  NormalSolution sol;
  sol.chart = chart;
  sol.chart_gamma = gx;
  sol.frame = frame;
  sol.change = assemble_change(chart, gx, frame);
  for (const auto& s : sample_box(chart.window(), options.frame.grid, options.random_samples, options.seed))
    sol.verify_points.push_back(beta.point(s));
  sol.report = verify_normal(gamma, sol.change, sol.verify_points, options.tolerance);
  if (options.emit) emit_solution(sol, gamma, options.tolerance);
  res.solution = std::move(sol);
  return res;
}

}  // namespace nframes
