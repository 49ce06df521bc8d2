// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/engine.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "nframes/normal_map.hpp"
#include "nframes/normal_path.hpp"
#include "nframes/normal_point.hpp"

namespace nframes {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string text_point(const Point& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + num(p[i]);
  return s + ")";
}

ojson to_json(const Point& p) {
  ojson a = ojson::array();
  for (double v : p) a.push_back(v);
  return a;
}

ojson to_json(const Matrix& m) {
  ojson a = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

ojson to_json(const std::vector<std::string>& v) {
  ojson a = ojson::array();
  for (const auto& s : v) a.push_back(s);
  return a;
}

// A position inside the config document.
class Cfg {
 public:
  Cfg(const json& j, std::string ptr) : j_(&j), ptr_(std::move(ptr)) {}

  const std::string& pointer() const { return ptr_; }

  Cfg at(const std::string& key) const {
    const auto child = find(key);
    if (!child) throw ConfigError(ptr_ + "/" + key, "missing required field");
    return *child;
  }
  std::optional<Cfg> find(const std::string& key) const {
    if (!j_->is_object()) throw ConfigError(ptr_, "expected an object");
    const auto it = j_->find(key);
    if (it == j_->end() || it->is_null()) return std::nullopt;
    return Cfg(*it, ptr_ + "/" + key);
  }
  Cfg at(std::size_t i) const {
    if (i >= size()) throw ConfigError(ptr_ + "/" + std::to_string(i), "missing entry");
    return Cfg((*j_)[i], ptr_ + "/" + std::to_string(i));
  }
  std::size_t size() const {
    if (!j_->is_array()) throw ConfigError(ptr_, "expected an array");
    return j_->size();
  }
  void expect_size(std::size_t n, const std::string& what) const {
    if (size() != n)
      throw ConfigError(ptr_, "expected " + std::to_string(n) + " " + what + ", found " + std::to_string(size()));
  }

  double number() const {
    if (!j_->is_number()) throw ConfigError(ptr_, "expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) throw ConfigError(ptr_, "expected a finite number");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) throw ConfigError(ptr_, "expected a positive number");
    return v;
  }
  int integer(int min_value) const {
    if (!j_->is_number_integer()) throw ConfigError(ptr_, "expected an integer");
    const auto v = j_->get<long long>();
    if (v < min_value || v > 1000000) throw ConfigError(ptr_, "integer out of range");
    return static_cast<int>(v);
  }
  std::uint64_t unsigned_integer() const {
    if (!j_->is_number_unsigned() && !(j_->is_number_integer() && j_->get<long long>() >= 0))
      throw ConfigError(ptr_, "expected a non-negative integer");
    return j_->get<std::uint64_t>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) throw ConfigError(ptr_, "expected true or false");
    return j_->get<bool>();
  }
  std::string string() const {
    if (!j_->is_string()) throw ConfigError(ptr_, "expected a string");
    return j_->get<std::string>();
  }

  Point numbers(std::size_t n, const std::string& what) const {
    expect_size(n, what);
    Point p;
    for (std::size_t i = 0; i < n; ++i) p.push_back(at(i).number());
    return p;
  }
  Matrix matrix(int rows, int cols) const {
    expect_size(static_cast<std::size_t>(rows), "rows");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      const Point row = at(static_cast<std::size_t>(i)).numbers(static_cast<std::size_t>(cols), "columns");
      for (int j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
    }
    return m;
  }
  Expression expression(const VariableList& vars) const {
    const std::string text = string();
    try {
      return Expression::parse(text, vars);
    } catch (const ParseError& e) {
      throw ConfigError(ptr_, e.what(), e.code());
    }
  }
  std::vector<Expression> expressions(std::size_t n, const VariableList& vars, const std::string& what) const {
    expect_size(n, what);
    std::vector<Expression> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(at(i).expression(vars));
    return out;
  }
  std::vector<std::string> strings(std::size_t n, const std::string& what) const {
    expect_size(n, what);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
      const Cfg c = at(i);
      out.push_back(c.string());
    }
    return out;
  }
  // Flat row-major string matrix given either as rows or as a flat list.
  std::vector<std::string> string_matrix(int rows, int cols, const VariableList& vars) const {
    std::vector<std::string> out;
    if (size() == static_cast<std::size_t>(rows) && rows > 0 && (*j_)[0].is_array()) {
      for (int i = 0; i < rows; ++i)
        for (const auto& s : at(static_cast<std::size_t>(i)).strings(static_cast<std::size_t>(cols), "columns"))
          out.push_back(s);
    } else {
      out = strings(static_cast<std::size_t>(rows * cols), "entries");
    }
    // Validate here so errors point into the config.
    for (std::size_t i = 0; i < out.size(); ++i) {
      try {
        Expression::parse(out[i], vars);
      } catch (const ParseError& e) {
        throw ConfigError(ptr_, "entry " + std::to_string(i) + ": " + e.what(), e.code());
      }
    }
    return out;
  }
  Box box(std::size_t dim) const {
    Box b;
    b.lo = at("lo").numbers(dim, "bounds");
    b.hi = at("hi").numbers(dim, "bounds");
    for (std::size_t i = 0; i < dim; ++i)
      if (!(b.lo[i] < b.hi[i])) throw ConfigError(ptr_, "lo must be below hi on every axis");
    return b;
  }

 private:
  const json* j_;
  std::string ptr_;
};

struct Out {
  std::string status = "pass";
  int exit = kExitPass;
  ojson residuals = ojson::object();
  ojson constructed = ojson::object();
  ojson details = ojson::object();
  std::vector<std::string> lines;

  void fail(const std::string& s) {
    if (exit == kExitPass) {
      status = s;
      exit = kExitFail;
    }
  }
};

const ConnectionCoefficients& need_gamma(const EngineConfig& cfg) {
  if (!cfg.gamma) throw ConfigError("/gamma", "missing required field");
  return *cfg.gamma;
}

std::vector<Point> config_points(const EngineConfig& cfg, const Cfg& root) {
  std::vector<Point> pts;
  if (const auto p = root.find("points")) {
    for (std::size_t i = 0; i < p->size(); ++i)
      pts.push_back(p->at(i).numbers(static_cast<std::size_t>(cfg.shape.dim()), "coordinates"));
  } else {
    pts.push_back(cfg.domain.center());
  }
  return pts;
}

std::vector<Point> domain_samples(const EngineConfig& cfg) {
  return sample_box(cfg.domain, cfg.num.samples, cfg.num.random_samples, cfg.seed);
}

std::string index_label(int i) { return "u" + std::to_string(i + 1); }

void cmd_curvature(const EngineConfig& cfg, const RunOptions&, Out& out) {
  const auto& gamma = need_gamma(cfg);
  const Cfg root(cfg.raw, "");
  const int n = cfg.shape.n, r = cfg.shape.r;
  double worst = 0.0;
  ojson pts = ojson::array();
  for (const auto& p : config_points(cfg, root)) {
    const CurvatureComponents c = curvature(gamma, p);
    ojson comps = ojson::array();
    std::string line = "R at " + text_point(p) + ":";
    for (int a = 0; a < r; ++a)
      for (int mu = 0; mu < n; ++mu)
        for (int nu = mu + 1; nu < n; ++nu) {
          const double v = c(a, mu, nu);
          worst = std::max(worst, std::abs(v));
          comps.push_back(ojson{{"a", n + a + 1}, {"mu", mu + 1}, {"nu", nu + 1}, {"value", v}});
          line += " R^" + std::to_string(n + a + 1) + "_" + std::to_string(mu + 1) + std::to_string(nu + 1) + " = " + num(v);
        }
    if (n < 2) line += " (no base pairs)";
    pts.push_back(ojson{{"point", to_json(p)}, {"components", comps}});
    out.lines.push_back(line);
  }
  out.residuals["max_abs_curvature"] = worst;
  out.details["points"] = pts;
}

void cmd_flatness(const EngineConfig& cfg, const RunOptions& opts, Out& out) {
  const auto& gamma = need_gamma(cfg);
  const double tol = opts.tol.value_or(cfg.tol.flat);
  const FlatnessReport rep = check_flat(gamma, domain_samples(cfg), tol);
  out.residuals["max_curvature"] = rep.max_curvature;
  out.details = ojson{{"samples", rep.samples}, {"tolerance", tol}, {"worst_point", to_json(rep.worst_point)},
                      {"flat", rep.flat}};
  out.lines.push_back("max |R| = " + sci(rep.max_curvature) + " over " + std::to_string(rep.samples) +
                      " samples (tolerance " + sci(tol) + "), worst at " + text_point(rep.worst_point));
  out.lines.push_back(rep.flat ? "connection is flat on the domain" : "connection is not flat");
  if (!rep.flat) out.fail("fail");
}

ojson change_entry(const std::string& label, const std::vector<std::string>& change, const std::vector<Point>& points,
                   double tol) {
  ojson pts = ojson::array();
  for (const auto& p : points) pts.push_back(to_json(p));
  return ojson{{"label", label}, {"change", to_json(change)}, {"verify", ojson{{"points", pts}, {"tolerance", tol}}}};
}

void add_change(Out& out, ojson entry) {
  if (!out.constructed.contains("changes")) out.constructed["changes"] = ojson::array();
  out.constructed["changes"].push_back(std::move(entry));
}

void cmd_normal_point(const EngineConfig& cfg, const RunOptions& opts, Out& out) {
  const auto& gamma = need_gamma(cfg);
  const Cfg root(cfg.raw, "");
  const int r = cfg.shape.r;
  const double tol = opts.tol.value_or(cfg.tol.point);
  PointNormalSpec spec;
  if (const auto g = root.find("gauge")) {
    if (const auto c = g->find("g")) spec.g = c->numbers(static_cast<std::size_t>(r), "constants");
    if (const auto m = g->find("matrix")) spec.g_matrix = m->matrix(r, r);
  }
  double worst = 0.0;
  ojson results = ojson::array();
  int index = 0;
  for (const auto& p : config_points(cfg, root)) {
    ++index;
    spec.p = p;
    const CoordinateChange change = normal_at_point(gamma, spec);
    const VerificationReport rep = verify_normal(gamma, change, {p}, tol);
    worst = std::max(worst, rep.max_residual);
    // Residual a short step away, which vanishes only for flat connections.
    std::vector<Point> near;
    for (int i = 0; i < cfg.shape.n; ++i) {
      Point q = p;
      q[static_cast<std::size_t>(i)] += 0.1 * (cfg.domain.hi[static_cast<std::size_t>(i)] - cfg.domain.lo[static_cast<std::size_t>(i)]);
      if (cfg.domain.contains(q)) near.push_back(q);
    }
    const double near_residual = near.empty() ? 0.0 : verify_normal(gamma, change, near, tol).max_residual;
    const auto strings = change.to_strings();
    results.push_back(ojson{{"label", "point " + std::to_string(index)}, {"point", to_json(p)},
                            {"residual", rep.max_residual}, {"pass", rep.pass}, {"nearby_residual", near_residual}});
    add_change(out, change_entry("point " + std::to_string(index), strings, {p}, tol));
    out.lines.push_back("point " + std::to_string(index) + " " + text_point(p) + ": residual " + sci(rep.max_residual) +
                        (rep.pass ? " pass" : " FAIL") + ", residual one step away " + sci(near_residual));
    for (int a = 0; a < r; ++a)
      out.lines.push_back("  ut" + std::to_string(cfg.shape.n + a + 1) + " = " +
                          strings[static_cast<std::size_t>(cfg.shape.n + a)]);
    if (!rep.pass) out.fail("fail");
  }
  out.residuals["max_residual"] = worst;
  out.details["points"] = results;
  if (out.exit == kExitPass) out.status = "constructed";
}

void print_change(Out& out, const BundleShape& shape, const std::vector<std::string>& strings) {
  for (int a = 0; a < shape.r; ++a)
    out.lines.push_back("  ut" + std::to_string(shape.n + a + 1) + " = " + strings[static_cast<std::size_t>(shape.n + a)]);
}

void cmd_normal_path(const EngineConfig& cfg, const RunOptions& opts, Out& out) {
  const auto& gamma = need_gamma(cfg);
  const Cfg paths = Cfg(cfg.raw, "").at("paths");
  if (paths.size() == 0) throw ConfigError(paths.pointer(), "expected at least one path");
  const double tol = opts.tol.value_or(cfg.tol.normal);
  const int r = cfg.shape.r;
  double worst = 0.0;
  ojson results = ojson::array();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Cfg p = paths.at(i);
    const std::string label = "path " + std::to_string(i + 1);
    const Box dom = p.at("domain").box(1);
    const std::vector<Expression> comps =
        p.at("components").expressions(static_cast<std::size_t>(cfg.shape.dim()), parameter_variables(1), "components");
    const ParamMap beta(cfg.shape, dom, comps);
    const double s0 = p.find("s0") ? p.at("s0").number() : dom.center()[0];
    if (!dom.contains(Point{s0})) throw ConfigError(p.pointer() + "/s0", "s0 lies outside the path domain");
    PathOptions po;
    if (const auto s1 = p.find("s1")) po.s1 = s1->number();
    if (const auto f = p.find("frame")) po.frame = f->string_matrix(r, r, parameter_variables(1));
    po.quad_step = cfg.num.quad_step;
    po.tolerance = tol;
    const NormalSolution sol = normal_along_path(gamma, beta, s0, po);
    worst = std::max(worst, sol.report.max_residual);
    const int pivot = sol.chart.pivots()[0];
    ojson rec{{"label", label},
              {"pivot", index_label(pivot)},
              {"window", to_json(Point{sol.chart.window().lo[0], sol.chart.window().hi[0]})},
              {"s0", s0},
              {"s1", po.s1.value_or(s0)},
              {"quad_step", po.quad_step},
              {"samples", sol.report.samples},
              {"residual", sol.report.max_residual},
              {"worst_point", to_json(sol.report.worst_point)},
              {"pass", sol.report.pass},
              {"closed_form", sol.emitted.has_value()},
              {"emission", sol.emission_note}};
    if (sol.emitted) rec["closed_form_residual"] = sol.emitted_report.max_residual;
    results.push_back(rec);
    out.lines.push_back(label + ": pivot " + index_label(pivot) + ", window [" + num(sol.chart.window().lo[0]) + ", " +
                        num(sol.chart.window().hi[0]) + "], residual " + sci(sol.report.max_residual) + " over " +
                        std::to_string(sol.report.samples) + " points (tolerance " + sci(tol) + ")" +
                        (sol.report.pass ? " pass" : " FAIL"));
    if (sol.emitted) {
      const auto strings = sol.emitted->to_strings();
      add_change(out, change_entry(label, strings, sol.verify_points, tol));
      out.lines.push_back("  closed form re-verified, residual " + sci(sol.emitted_report.max_residual));
      print_change(out, cfg.shape, strings);
    } else {
      out.lines.push_back("  " + sol.emission_note);
    }
    if (!sol.report.pass) out.fail("fail");
  }
  out.residuals["max_residual"] = worst;
  out.details["paths"] = results;
  if (out.exit == kExitPass) out.status = "constructed";
}

ojson integrability_json(const IntegrabilityReport& rep) {
  return ojson{{"grid", rep.grid},
               {"nodes", rep.nodes},
               {"curvature_residual", rep.curvature_residual},
               {"second_order_residual", rep.second_order_residual},
               {"tolerance", rep.tolerance},
               {"curvature_pass", rep.curvature_pass},
               {"second_order_pass", rep.second_order_pass}};
}

void cmd_normal_map(const EngineConfig& cfg, const RunOptions& opts, Out& out) {
  const auto& gamma = need_gamma(cfg);
  const Cfg maps = Cfg(cfg.raw, "").at("maps");
  if (maps.size() == 0) throw ConfigError(maps.pointer(), "expected at least one map");
  const double tol = opts.tol.value_or(cfg.tol.normal);
  const int r = cfg.shape.r;
  double worst = 0.0, worst_curv = 0.0, worst_second = 0.0;
  bool obstructed = false;
  ojson results = ojson::array();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const Cfg m = maps.at(i);
    const std::string label = "map " + std::to_string(i + 1);
    const Cfg dcfg = m.at("domain");
    const std::size_t k = dcfg.at("lo").size();
    if (k == 0 || static_cast<int>(k) > cfg.shape.n)
      throw ConfigError(dcfg.pointer() + "/lo", "parameter count must be between 1 and n");
    const Box dom = dcfg.box(k);
    const auto comps = m.at("components").expressions(static_cast<std::size_t>(cfg.shape.dim()),
                                                      parameter_variables(static_cast<int>(k)), "components");
    const ParamMap beta(cfg.shape, dom, comps);
    const Point s0 = m.find("s0") ? m.at("s0").numbers(k, "parameters") : dom.center();
    if (!dom.contains(s0)) throw ConfigError(m.pointer() + "/s0", "s0 lies outside the map domain");
    MapOptions mo;
    if (const auto s1 = m.find("s1")) mo.frame.s1 = s1->numbers(k, "parameters");
    if (const auto b = m.find("b_start")) mo.frame.b_start = b->matrix(r, r);
    if (const auto d = m.find("d")) mo.frame.d = d->string_matrix(r, r, parameter_variables(static_cast<int>(k)));
    mo.frame.grid = cfg.num.grid;
    mo.frame.ode_step = cfg.num.ode_step;
    mo.frame.tolerance = cfg.tol.integrability;
    mo.integrability_tol = cfg.tol.integrability;
    mo.tolerance = tol;
    mo.seed = cfg.seed;
    const MapResult res = theorem_a1(gamma, beta, s0, mo);
    worst_curv = std::max(worst_curv, res.integrability.curvature_residual);
    worst_second = std::max(worst_second, res.integrability.second_order_residual);
    ojson rec{{"label", label}, {"k", k}, {"integrability", integrability_json(res.integrability)}};
    out.lines.push_back(label + " (k = " + std::to_string(k) + "): curvature residual " +
                        sci(res.integrability.curvature_residual) + ", fibre second-order residual " +
                        sci(res.integrability.second_order_residual) + " (tolerance " +
                        sci(res.integrability.tolerance) + ")");
    if (res.obstruction) {
      obstructed = true;
      rec["result"] = "obstruction";
      rec["summary"] = res.obstruction->summary;
      out.lines.push_back("  obstruction: " + res.obstruction->summary);
    } else {
      const NormalSolution& sol = *res.solution;
      worst = std::max(worst, sol.report.max_residual);
      rec["result"] = sol.report.pass ? "constructed" : "failed";
      rec["pivots"] = ojson::array();
      for (int pv : sol.chart.pivots()) rec["pivots"].push_back(index_label(pv));
      rec["window"] = ojson{{"lo", to_json(sol.chart.window().lo)}, {"hi", to_json(sol.chart.window().hi)}};
      rec["path_independence"] = res.frame->path_independence();
      rec["min_abs_det_b"] = res.frame->min_abs_det();
      rec["samples"] = sol.report.samples;
      rec["residual"] = sol.report.max_residual;
      rec["worst_point"] = to_json(sol.report.worst_point);
      rec["pass"] = sol.report.pass;
      rec["closed_form"] = sol.emitted.has_value();
      rec["emission"] = sol.emission_note;
      if (sol.emitted) rec["closed_form_residual"] = sol.emitted_report.max_residual;
      out.lines.push_back("  constructed: residual " + sci(sol.report.max_residual) + " over " +
                          std::to_string(sol.report.samples) + " points (tolerance " + sci(tol) + ")" +
                          (sol.report.pass ? " pass" : " FAIL") + ", sweep difference " +
                          sci(res.frame->path_independence()));
      if (sol.emitted) {
        const auto strings = sol.emitted->to_strings();
        add_change(out, change_entry(label, strings, sol.verify_points, tol));
        out.lines.push_back("  closed form re-verified, residual " + sci(sol.emitted_report.max_residual));
        print_change(out, cfg.shape, strings);
      } else {
        out.lines.push_back("  " + sol.emission_note);
      }
      if (!sol.report.pass) out.fail("fail");
    }
    results.push_back(rec);
  }
  out.residuals["curvature"] = worst_curv;
  out.residuals["fibre_second_order"] = worst_second;
  out.residuals["max_residual"] = worst;
  out.details["maps"] = results;
  if (obstructed) {
    out.status = "obstruction";
    out.exit = kExitFail;
  } else if (out.exit == kExitPass) {
    out.status = "constructed";
  }
}

BasePath read_curve(const Cfg& c, int n) {
  const auto comps = c.at("components").expressions(static_cast<std::size_t>(n), parameter_variables(1), "components");
  const double begin = c.find("begin") ? c.at("begin").number() : 0.0;
  const double end = c.find("end") ? c.at("end").number() : 1.0;
  if (!(begin < end)) throw ConfigError(c.pointer(), "begin must be below end");
  return BasePath::from_expressions(comps, begin, end);
}

void cmd_vb_normal(const EngineConfig& cfg, const RunOptions& opts, Out& out) {
  if (!cfg.gamma3) throw ConfigError("/gamma3", "missing required field");
  const Cfg root(cfg.raw, "");
  const int n = cfg.shape.n, r = cfg.shape.r;
  const BasePath curve = read_curve(root.at("curve"), n);
  const Matrix b_start = root.find("b_start") ? root.at("b_start").matrix(r, r) : Matrix(Matrix::Identity(r, r));
  const double tol = opts.tol.value_or(cfg.tol.parallel);
  const int steps = std::max(4, static_cast<int>(std::ceil((curve.end - curve.begin) / cfg.num.ode_step - 1e-9)));
  const ParallelFrame pf = normal_frame_along_base_path(*cfg.gamma3, curve, b_start, steps, tol);

  // Equivalence on about 100 base points with r+1 fibre points each.
  std::vector<std::vector<Matrix>> three;
  const std::size_t count = std::min<std::size_t>(100, pf.transformed.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = count == 1 ? 0 : i * (pf.transformed.size() - 1) / (count - 1);
    three.push_back({pf.transformed[j]});
  }
  const EquivalenceReport eq = check_equivalence(three, spanning_fibre_points(r), cfg.tol.equivalence);

  ojson frames = ojson::array();
  const std::size_t fstride = std::max<std::size_t>(1, pf.s.size() / 10);
  for (std::size_t j = 0; j < pf.s.size(); j += fstride)
    frames.push_back(ojson{{"s", pf.s[j]}, {"b", to_json(pf.b[j])}});
  out.residuals["three_index"] = pf.report.max_three_index;
  out.residuals["two_index"] = pf.report.max_two_index;
  out.details = ojson{{"steps", steps},
                      {"tolerance", tol},
                      {"min_abs_det_b", pf.report.min_abs_det},
                      {"b_end", to_json(pf.b.back())},
                      {"frames", frames},
                      {"equivalence", ojson{{"base_points", eq.base_points},
                                            {"fibre_points", eq.fibre_points},
                                            {"max_three_index", eq.max_three_index},
                                            {"max_two_index", eq.max_two_index},
                                            {"agreements", eq.agreements},
                                            {"tolerance", eq.tolerance},
                                            {"holds", eq.holds}}}};
  out.lines.push_back("parallel frame over " + std::to_string(steps) + " RK4 steps: 3-index residual " +
                      sci(pf.report.max_three_index) + ", 2-index residual " + sci(pf.report.max_two_index) +
                      " (tolerance " + sci(tol) + ")" + (pf.report.pass ? " pass" : " FAIL"));
  out.lines.push_back("B at s = " + num(curve.end) + ": " + text_point(Point(pf.b.back().data(), pf.b.back().data() + r * r)));
  out.lines.push_back("equivalence on " + std::to_string(eq.base_points) + " base points, " +
                      std::to_string(eq.fibre_points) + " fibre points: " + (eq.holds ? "holds" : "VIOLATED"));
  if (!pf.report.pass || !eq.holds) out.fail("fail");
}

void cmd_lift(const EngineConfig& cfg, const RunOptions&, Out& out) {
  const auto& gamma = need_gamma(cfg);
  const Cfg lift = Cfg(cfg.raw, "").at("lift");
  const int n = cfg.shape.n, r = cfg.shape.r;
  BasePath path;
  if (const auto v = lift.find("vertices")) {
    std::vector<Point> vertices;
    for (std::size_t i = 0; i < v->size(); ++i) vertices.push_back(v->at(i).numbers(static_cast<std::size_t>(n), "coordinates"));
    if (vertices.size() < 2) throw ConfigError(v->pointer(), "expected at least two vertices");
    const bool smooth = lift.find("smooth") ? lift.at("smooth").boolean() : true;
    path = BasePath::polyline(vertices, smooth);
  } else {
    path = read_curve(lift.at("path"), n);
  }
  const Point start = lift.at("start_fibre").numbers(static_cast<std::size_t>(r), "fibre coordinates");
  const int steps = std::max(1, static_cast<int>(std::ceil((path.end - path.begin) / cfg.num.ode_step - 1e-9)));
  const LiftResult res = horizontal_lift(gamma, path, start, steps);
  const Point& last = res.points.back();
  Point disp(static_cast<std::size_t>(r));
  double max_disp = 0.0;
  for (int a = 0; a < r; ++a) {
    disp[static_cast<std::size_t>(a)] = last[static_cast<std::size_t>(n + a)] - start[static_cast<std::size_t>(a)];
    max_disp = std::max(max_disp, std::abs(disp[static_cast<std::size_t>(a)]));
  }
  ojson samples = ojson::array();
  const std::size_t stride = std::max<std::size_t>(1, res.points.size() / 10);
  for (std::size_t j = 0; j < res.points.size(); j += stride)
    samples.push_back(ojson{{"s", res.s[j]}, {"u", to_json(res.points[j])}});
  out.residuals["max_abs_fibre_displacement"] = max_disp;
  out.details = ojson{{"steps", steps},
                      {"end_point", to_json(last)},
                      {"fibre_displacement", to_json(disp)},
                      {"exited_domain", res.exited_domain},
                      {"samples", samples}};
  out.lines.push_back("lift over " + std::to_string(steps) + " RK4 steps ends at " + text_point(last) +
                      ", fibre displacement " + text_point(disp));
  if (res.exited_domain) {
    out.lines.push_back("lift left the chart domain at s = " + num(res.s.back()));
    out.fail("fail");
  }
}

void cmd_verify(const EngineConfig& cfg, const RunOptions& opts, Out& out) {
  const auto& gamma = need_gamma(cfg);
  const Cfg v = Cfg(cfg.raw, "").at("verify");
  const int dim = cfg.shape.dim();
  std::vector<Field> comps;
  for (const auto& e : v.at("change").expressions(static_cast<std::size_t>(dim), cfg.shape.variables(), "components"))
    comps.emplace_back(e);
  const CoordinateChange change(cfg.shape, std::move(comps));
  std::vector<Point> points;
  const Cfg pc = v.at("points");
  for (std::size_t i = 0; i < pc.size(); ++i) points.push_back(pc.at(i).numbers(static_cast<std::size_t>(dim), "coordinates"));
  if (points.empty()) throw ConfigError(pc.pointer(), "expected at least one point");
  const double tol = opts.tol ? *opts.tol : (v.find("tolerance") ? v.at("tolerance").positive() : cfg.tol.normal);
  const AdmissibilityReport adm = validate_admissible_change(change, points);
  out.details["admissible"] = adm.pass;
  out.details["max_fibre_dependence"] = adm.max_fibre_dependence;
  if (!adm.pass) {
    out.lines.push_back("change is not admissible: max |d ut^mu / d u^a| = " + sci(adm.max_fibre_dependence));
    out.fail("fail");
    return;
  }
  const VerificationReport rep = verify_normal(gamma, change, points, tol);
  out.residuals["max_residual"] = rep.max_residual;
  out.details["samples"] = rep.samples;
  out.details["tolerance"] = tol;
  out.details["worst_point"] = to_json(rep.worst_point);
  out.lines.push_back("max |Gt| = " + sci(rep.max_residual) + " over " + std::to_string(rep.samples) +
                      " points (tolerance " + sci(tol) + ")" + (rep.pass ? " pass" : " FAIL"));
  if (!rep.pass) out.fail("fail");
}

using Command = std::function<void(const EngineConfig&, const RunOptions&, Out&)>;

const std::map<std::string, Command>& dispatch() {
  static const std::map<std::string, Command> table{
      {"curvature", cmd_curvature}, {"flatness", cmd_flatness}, {"normal-point", cmd_normal_point},
      {"normal-path", cmd_normal_path}, {"normal-map", cmd_normal_map}, {"vb-normal", cmd_vb_normal},
      {"lift", cmd_lift}, {"verify", cmd_verify}};
  return table;
}

bool input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::Degenerate:
    case ErrorCode::Inversion:
    case ErrorCode::DetCollapse:
    case ErrorCode::PathDependence:
    case ErrorCode::FibreConstancy:
      return false;
    default:
      return true;
  }
}

Report finish(const std::string& command, Out& out, const ojson& error, const RunOptions& opts, double ms) {
  Report rep;
  rep.exit_code = out.exit;
  rep.doc["command"] = command;
  rep.doc["status"] = out.status;
  rep.doc["exit_code"] = out.exit;
  rep.doc["residuals"] = out.residuals;
  rep.doc["constructed"] = out.constructed;
  rep.doc["details"] = out.details;
  if (!error.is_null()) rep.doc["error"] = error;
  rep.doc["timing_ms"] = opts.timing ? ojson(std::round(ms * 1000.0) / 1000.0) : ojson(nullptr);
  std::string text = "nframes " + command + ": " + out.status + "\n";
  for (const auto& l : out.lines) text += "  " + l + "\n";
  if (opts.timing) text += "  time " + num(ms) + " ms\n";
  rep.text = std::move(text);
  return rep;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : dispatch()) v.push_back(name);
    return v;
  }();
  return names;
}

EngineConfig parse_config(const json& doc, const RunOptions& options) {
  EngineConfig cfg;
  cfg.raw = doc;
  const Cfg root(cfg.raw, "");
  if (!doc.is_object()) throw ConfigError("", "config must be an object");
  const Cfg bundle = root.at("bundle");
  cfg.shape.n = bundle.at("n").integer(1);
  cfg.shape.r = bundle.at("r").integer(1);
  const int n = cfg.shape.n, r = cfg.shape.r;
  cfg.domain = root.at("domain").box(static_cast<std::size_t>(n + r));

  if (const auto g = root.find("gamma")) {
    g->expect_size(static_cast<std::size_t>(r), "rows (one per fibre index)");
    std::vector<Expression> entries;
    for (int a = 0; a < r; ++a)
      for (auto& e : g->at(static_cast<std::size_t>(a)).expressions(static_cast<std::size_t>(n), cfg.shape.variables(),
                                                                   "entries (one per base index)"))
        entries.push_back(std::move(e));
    cfg.gamma = ConnectionCoefficients(cfg.shape, std::move(entries), cfg.domain);
  }
  if (const auto g3 = root.find("gamma3")) {
    g3->expect_size(static_cast<std::size_t>(n), "matrices (one per base index)");
    const VariableList base = bundle_variables(n);
    std::vector<std::vector<Expression>> mats;
    for (int mu = 0; mu < n; ++mu) {
      const Cfg m = g3->at(static_cast<std::size_t>(mu));
      m.expect_size(static_cast<std::size_t>(r), "rows");
      std::vector<Expression> flat;
      for (int a = 0; a < r; ++a)
        for (auto& e : m.at(static_cast<std::size_t>(a)).expressions(static_cast<std::size_t>(r), base, "columns"))
          flat.push_back(std::move(e));
      mats.push_back(std::move(flat));
    }
    std::vector<Expression> affine;
    if (const auto ga = root.find("gamma3_affine")) {
      ga->expect_size(static_cast<std::size_t>(r), "rows");
      for (int a = 0; a < r; ++a)
        for (auto& e : ga->at(static_cast<std::size_t>(a)).expressions(static_cast<std::size_t>(n), base, "columns"))
          affine.push_back(std::move(e));
    }
    cfg.gamma3 = ThreeIndexCoefficients(cfg.shape, std::move(mats), std::move(affine));
    if (!cfg.gamma) cfg.gamma = two_from_three(*cfg.gamma3, cfg.domain);
  }

  if (const auto t = root.find("tolerances")) {
    const std::pair<const char*, double*> fields[] = {
        {"normal", &cfg.tol.normal}, {"integrability", &cfg.tol.integrability}, {"flat", &cfg.tol.flat},
        {"point", &cfg.tol.point},   {"parallel", &cfg.tol.parallel},           {"equivalence", &cfg.tol.equivalence}};
    for (const auto& [key, dst] : fields)
      if (const auto v = t->find(key)) *dst = v->positive();
  }
  if (const auto nm = root.find("numerics")) {
    if (const auto v = nm->find("ode_step")) cfg.num.ode_step = v->positive();
    if (const auto v = nm->find("quad_step")) cfg.num.quad_step = v->positive();
    if (const auto v = nm->find("grid")) cfg.num.grid = v->integer(2);
    if (const auto v = nm->find("samples")) cfg.num.samples = v->integer(1);
    if (const auto v = nm->find("random_samples")) cfg.num.random_samples = v->integer(0);
  }
  if (const auto s = root.find("seed")) cfg.seed = s->unsigned_integer();

  if (options.grid) {
    if (*options.grid < 2) throw ConfigError("--grid", "expected at least 2");
    cfg.num.grid = *options.grid;
  }
  if (options.step) {
    if (!(*options.step > 0.0)) throw ConfigError("--step", "expected a positive number");
    cfg.num.ode_step = cfg.num.quad_step = *options.step;
  }
  if (options.seed) cfg.seed = *options.seed;
  if (options.tol && !(*options.tol > 0.0)) throw ConfigError("--tol", "expected a positive number");
  return cfg;
}

Report run(const std::string& command, const json& config, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  Out out;
  ojson error;
  auto fail_input = [&](const std::string& code, const std::string& message, const std::string& pointer) {
    out.status = "error";
    out.exit = kExitInput;
    error = ojson{{"code", code}, {"message", message}};
    if (!pointer.empty()) error["pointer"] = pointer;
    out.lines.push_back("error: " + message);
  };
  try {
    const auto it = dispatch().find(command);
    if (it == dispatch().end()) throw ConfigError("", "unknown command '" + command + "'");
    const EngineConfig cfg = parse_config(config, options);
    it->second(cfg, options, out);
  } catch (const ConfigError& e) {
    fail_input(to_string(e.code()), e.what(), e.pointer().empty() ? "/" : e.pointer());
  } catch (const DomainError& e) {
    fail_input(to_string(e.code()), e.what(), "");
    if (!e.point().empty()) error["point"] = to_json(e.point());
  } catch (const Error& e) {
    if (input_error(e.code())) {
      fail_input(to_string(e.code()), e.what(), "");
    } else {
      out.status = "fail";
      out.exit = kExitFail;
      error = ojson{{"code", to_string(e.code())}, {"message", e.what()}};
      out.lines.push_back("failed: " + std::string(e.what()));
    }
  } catch (const std::exception& e) {
    fail_input("internal", e.what(), "");
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return finish(command, out, error, options, ms);
}

Report run_text(const std::string& command, const std::string& config_text, const RunOptions& options) {
  json doc;
  try {
    doc = json::parse(config_text);
  } catch (const json::parse_error& e) {
    Out out;
    out.status = "error";
    out.exit = kExitInput;
    out.lines.push_back(std::string("error: config is not valid JSON: ") + e.what());
    const ojson error{{"code", "config"}, {"message", std::string("config is not valid JSON: ") + e.what()},
                      {"byte", e.byte}};
    return finish(command, out, error, options, 0.0);
  }
  return run(command, doc, options);
}

Report run_file(const std::string& command, const std::string& path, const RunOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    Out out;
    out.status = "error";
    out.exit = kExitInput;
    out.lines.push_back("error: cannot read config file " + path);
    return finish(command, out, ojson{{"code", "config"}, {"message", "cannot read config file " + path}}, options, 0.0);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return run_text(command, ss.str(), options);
}

}  // namespace nframes
