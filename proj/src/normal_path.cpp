// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/normal_path.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nframes/surrogate.hpp"

namespace nframes {

CoordinateChange assemble_change(const AdaptedChart& chart, const ConnectionCoefficients& chart_gamma,
                                 std::shared_ptr<const FrameSource> frame) {
  const BundleShape shape = chart.shape();
  const int n = shape.n, r = shape.r, k = chart.k();
  const VariableList vars = shape.variables();
  std::vector<Field> comps;
  for (int mu = 0; mu < n; ++mu) comps.emplace_back(Expression::variable(mu, vars));
  for (int a = 0; a < r; ++a) {
    comps.push_back(Field::generic([chart, chart_gamma, frame, a, n, r, k](auto u) {
      using S = typename decltype(u)::value_type;
      const std::vector<S> x = chart.to_chart<S>(u);
      const std::span<const S> s(x.data(), static_cast<std::size_t>(k));
      std::vector<S> f(static_cast<std::size_t>(r)), b(static_cast<std::size_t>(r * r));
      frame->eval(s, f.data(), b.data());
      const std::vector<S> y = chart.on_map<S>(s);
      std::vector<S> gx(static_cast<std::size_t>(r * n));
      chart_gamma.eval<S>(std::span<const S>(y), gx.data());
      const Point& t0 = chart.t0();
      S out = f[static_cast<std::size_t>(a)];
      for (int c = 0; c < r; ++c) {
        S bracket = x[static_cast<std::size_t>(n + c)] - t0[static_cast<std::size_t>(n + c)];
        for (int sigma = k; sigma < n; ++sigma)
          bracket = bracket - gx[static_cast<std::size_t>(c * n + sigma)] *
                                  (x[static_cast<std::size_t>(sigma)] - t0[static_cast<std::size_t>(sigma)]);
        out = out + b[static_cast<std::size_t>(a * r + c)] * bracket;
      }
      return out;
    }));
  }
  return CoordinateChange(shape, std::move(comps));
}

void emit_solution(NormalSolution& sol, const ConnectionCoefficients& gamma, double tol) {
  sol.emitted.reset();
  const auto forward = sol.chart.forward_expressions();
  if (!forward) {
    sol.emission_note = "no closed form: the pivot components of the map are not affine";
    return;
  }
  const BundleShape shape = sol.chart.shape();
  const int n = shape.n, r = shape.r, k = sol.chart.k();
  const auto frame = sol.frame;
  const ChebyshevFit fit(sol.chart.window(), kEmissionDegree, r + r * r, [&](std::span<const double> s) {
    Point out(static_cast<std::size_t>(r + r * r));
    frame->eval(s, out.data(), out.data() + r);
    return out;
  });

  const VariableList cv = shape.variables();
  std::vector<Expression> svars, at_map;
  for (int K = 0; K < shape.dim(); ++K) {
    if (K < k) {
      svars.push_back(Expression::variable(K, cv));
      at_map.push_back(svars.back());
    } else {
      at_map.push_back(Expression::constant(sol.chart.t0()[static_cast<std::size_t>(K)], cv));
    }
  }
  const Point& t0 = sol.chart.t0();
  std::vector<Expression> bracket;
  for (int c = 0; c < r; ++c) {
    Expression e = Expression::variable(n + c, cv) + (-t0[static_cast<std::size_t>(n + c)]);
    for (int sigma = k; sigma < n; ++sigma) {
      const Expression g = substitute(sol.chart_gamma.entry(c, sigma), at_map);
      e = e - g * (Expression::variable(sigma, cv) + (-t0[static_cast<std::size_t>(sigma)]));
    }
    bracket.push_back(e);
  }
  const VariableList uv = shape.variables();
  std::vector<std::string> strings;
  for (int mu = 0; mu < n; ++mu) strings.push_back(Expression::variable(mu, uv).to_string());
  for (int a = 0; a < r; ++a) {
    Expression e = fit.to_expression(a, svars);
    for (int c = 0; c < r; ++c) e = e + fit.to_expression(r + a * r + c, svars) * bracket[static_cast<std::size_t>(c)];
    strings.push_back(substitute(e, *forward).to_string());
  }
  // Verify exactly what would be printed.
  CoordinateChange change = CoordinateChange::parse(shape, strings);
  sol.emitted_report = verify_normal(gamma, change, sol.verify_points, tol);
  if (!sol.emitted_report.pass) {
    std::ostringstream os;
    os.precision(3);
    os << "polynomial form rejected: residual " << sol.emitted_report.max_residual << " exceeds tolerance " << tol;
    sol.emission_note = os.str();
    return;
  }
  sol.emitted = std::move(change);
  sol.emission_note = "polynomial form in the chart parameters, degree " + std::to_string(kEmissionDegree) + " per axis";
}

HermiteTable::HermiteTable(std::vector<double> nodes, std::vector<Point> values, std::vector<Point> slopes)
    : nodes_(std::move(nodes)), values_(std::move(values)), slopes_(std::move(slopes)) {
  if (nodes_.size() < 2 || values_.size() != nodes_.size() || slopes_.size() != nodes_.size())
    throw Error(ErrorCode::Config, "Hermite table needs at least two nodes with values and slopes");
}

template <class S>
void HermiteTable::eval(S s, S* out) const {
  const double v = value_of(s);
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), v);
  std::size_t j = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
  j = std::min(j, nodes_.size() - 2);
  const double h = nodes_[j + 1] - nodes_[j];
  const S t = (s - nodes_[j]) / h;
  const S t2 = t * t, t3 = t2 * t;
  const S h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const S h10 = t3 - 2.0 * t2 + t;
  const S h01 = 3.0 * t2 - 2.0 * t3;
  const S h11 = t3 - t2;
  for (std::size_t a = 0; a < values_[j].size(); ++a)
    out[a] = h00 * values_[j][a] + h10 * (h * slopes_[j][a]) + h01 * values_[j + 1][a] + h11 * (h * slopes_[j + 1][a]);
}

template void HermiteTable::eval<double>(double, double*) const;
template void HermiteTable::eval<Dual>(Dual, Dual*) const;

std::vector<double> path_verify_parameters(const Box& window, int count) {
  std::vector<double> s;
  const double lo = window.lo[0], hi = window.hi[0];
  for (int i = 0; i < count; ++i) s.push_back(lo + (i + 0.381966) * (hi - lo) / count);
  return s;
}

namespace {

class PathFrame final : public FrameSource {
 public:
  PathFrame(HermiteTable f, std::vector<Expression> b) : f_(std::move(f)), b_(std::move(b)) {}
  void eval(std::span<const double> s, double* f, double* b) const override { run(s, f, b); }
  void eval(std::span<const Dual> s, Dual* f, Dual* b) const override { run(s, f, b); }

 private:
  template <class S> void run(std::span<const S> s, S* f, S* b) const {
    f_.eval(s[0], f);
    for (std::size_t i = 0; i < b_.size(); ++i) b[i] = b_[i].eval(s);
  }
  HermiteTable f_;
  std::vector<Expression> b_;
};

std::vector<Expression> frame_expressions(const std::vector<std::string>& text, int r, int k) {
  const VariableList sv = parameter_variables(k);
  std::vector<Expression> b;
  if (text.empty()) {
    for (int a = 0; a < r; ++a)
      for (int c = 0; c < r; ++c) b.push_back(Expression::constant(a == c ? 1.0 : 0.0, sv));
    return b;
  }
  if (static_cast<int>(text.size()) != r * r) throw Error(ErrorCode::Config, "frame needs r*r entries");
  for (const auto& t : text) b.push_back(Expression::parse(t, sv));
  return b;
}

Matrix frame_at(const std::vector<Expression>& b, int r, std::span<const double> s) {
  Matrix m(r, r);
  for (int a = 0; a < r; ++a)
    for (int c = 0; c < r; ++c) m(a, c) = b[static_cast<std::size_t>(a * r + c)].eval(s);
  return m;
}

}  // namespace

NormalSolution normal_along_path(const ConnectionCoefficients& gamma, const ParamMap& beta, double s0,
                                 const PathOptions& options) {
  if (!(options.quad_step > 0.0)) throw Error(ErrorCode::Config, "quadrature step must be positive");
  if (!(options.tolerance > 0.0)) throw Error(ErrorCode::Config, "tolerance must be positive");
  if (!(gamma.shape() == beta.shape())) throw Error(ErrorCode::Config, "map and connection shapes differ");
  NormalSolution sol;
  sol.chart = adapt_chart_to_path(beta, s0);
  sol.chart_gamma = sol.chart.chart_coefficients(gamma);
  const int r = gamma.shape().r;
  const double lo = sol.chart.window().lo[0], hi = sol.chart.window().hi[0];
  const double s1 = options.s1.value_or(s0);
  if (!(lo < hi)) throw Error(ErrorCode::EmptyWindow, "quadrature window is empty");
  if (s1 < lo || s1 > hi) throw Error(ErrorCode::Config, "s1 lies outside the validity window");

  const std::vector<Expression> bexpr = frame_expressions(options.frame, r, 1);
  const ConnectionCoefficients& gx = sol.chart_gamma;
  // Integrand g^a(sigma) = B^a_b(sigma) Gx^b_1(sigma, t0).
  auto integrand = [&](double sigma) {
    const double sp[1] = {sigma};
    const std::vector<double> y = sol.chart.on_map<double>(std::span<const double>(sp));
    const Matrix b = frame_at(bexpr, r, sp);
    if (condition_estimate(b) > kMaxCondition)
      throw Error(ErrorCode::DetCollapse, "frame B is degenerate at s = " + format_point({sigma}));
    Vector g(r);
    for (int c = 0; c < r; ++c) g[c] = gx.entry(c, 0).eval<double>(y);
    return to_point(b * g);
  };

  std::vector<double> nodes{s1};
  for (int j = 1;; ++j) {
    const double s = s1 + j * options.quad_step;
    if (s >= hi) break;
    nodes.push_back(s);
  }
  if (nodes.back() < hi) nodes.push_back(hi);
  std::vector<double> down;
  for (int j = 1;; ++j) {
    const double s = s1 - j * options.quad_step;
    if (s <= lo) break;
    down.push_back(s);
  }
  if (s1 > lo) down.push_back(lo);
  const std::size_t origin = down.size();
  nodes.insert(nodes.begin(), down.rbegin(), down.rend());
  if (nodes.size() < 2) throw Error(ErrorCode::EmptyWindow, "quadrature window is empty");

  std::vector<Point> g(nodes.size()), f(nodes.size(), Point(static_cast<std::size_t>(r), 0.0));
  for (std::size_t j = 0; j < nodes.size(); ++j) g[j] = integrand(nodes[j]);
  auto simpson = [&](std::size_t a, std::size_t b) {
    const Point gm = integrand(0.5 * (nodes[a] + nodes[b]));
    Point out(static_cast<std::size_t>(r));
    const double w = (nodes[b] - nodes[a]) / 6.0;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = w * (g[a][c] + 4.0 * gm[c] + g[b][c]);
    return out;
  };
  // f = -int_{s1}^{s} g.
  for (std::size_t j = origin + 1; j < nodes.size(); ++j) {
    const Point step = simpson(j - 1, j);
    for (std::size_t c = 0; c < step.size(); ++c) f[j][c] = f[j - 1][c] - step[c];
  }
  for (std::size_t j = origin; j-- > 0;) {
    const Point step = simpson(j, j + 1);
    for (std::size_t c = 0; c < step.size(); ++c) f[j][c] = f[j + 1][c] + step[c];
  }
  std::vector<Point> slopes(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    slopes[j] = g[j];
    for (double& v : slopes[j]) v = -v;
  }

  sol.frame = std::make_shared<PathFrame>(HermiteTable(std::move(nodes), std::move(f), std::move(slopes)), bexpr);
  sol.change = assemble_change(sol.chart, sol.chart_gamma, sol.frame);
  for (double s : path_verify_parameters(sol.chart.window(), options.verify_samples)) {
    const double sp[1] = {s};
    sol.verify_points.push_back(beta.point(sp));
  }
  sol.report = verify_normal(gamma, sol.change, sol.verify_points, options.tolerance);
  if (options.emit) emit_solution(sol, gamma, options.tolerance);
  return sol;
}

}  // namespace nframes
