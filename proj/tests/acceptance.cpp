// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nframes/normal_map.hpp"
#include "nframes/normal_path.hpp"
#include "nframes/normal_point.hpp"
#include "nframes/vector_bundle.hpp"
#include "support/corpus.hpp"
#include "support/fuzz.hpp"

namespace nframes {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

// Fourth-order central difference.
double central4(const Expression& e, std::vector<double> x, std::size_t i, double h) {
  auto at = [&](double d) {
    std::vector<double> p = x;
    p[i] += d;
    return e(p);
  };
  return (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
}

// Steps shrink geometrically; the estimate where two successive steps agree
// best balances truncation against cancellation.
double fd_derivative(const Expression& e, const std::vector<double>& x, std::size_t i) {
  double prev = central4(e, x, i, 1e-2), best = prev, gap = 1e300;
  for (double h = 1e-2 / 2; h > 1e-6; h /= 2) {
    const double cur = central4(e, x, i, h);
    if (std::abs(cur - prev) < gap) {
      gap = std::abs(cur - prev);
      best = cur;
    }
    prev = cur;
  }
  return best;
}

Outcome ad_soundness() {
  double worst_rel = 0.0, worst_sym = 0.0;
  int count = 0;
  for (int vars = 2; vars <= 5; ++vars) {
    testing::ExprFuzzer fuzz(vars, 1000 + static_cast<std::uint64_t>(vars));
    for (int k = 0; k < 125; ++k, ++count) {
      std::vector<double> x;
      const Expression e = fuzz.expression(6, x);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double ad = derive1(e, x, i);
        const double fd = fd_derivative(e, x, i);
        worst_rel = std::max(worst_rel, std::abs(ad - fd) / std::max(1.0, std::abs(ad)));
        for (std::size_t j = i + 1; j < x.size(); ++j)
          worst_sym = std::max(worst_sym, std::abs(derive2(e, x, i, j) - derive2(e, x, j, i)));
      }
    }
  }
  return {worst_rel < 1e-6 && worst_sym < 1e-10,
          fmt("%d expressions, max relative derive1 error %.2e (< 1e-6), max derive2 asymmetry %.2e (< 1e-10)", count,
              worst_rel, worst_sym)};
}

Outcome groupoid() {
  const BundleShape shape{3, 2};
  const auto g = testing::parse_connection(shape, {{"u4*cos(u2)", "u1*u5", "sin(u3)*u4"}, {"u5^2 - u1", "atan(u2*u4)", "u3"}}, 2);
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = testing::random_change(shape, rng);
    const auto v = testing::random_change(shape, rng).change();
    const auto gt = testing::symbolic_transform(g, u, testing::unit_box(5, 10));
    const auto uc = u.change();
    const auto composed = compose(uc, v);
    for (int i = 0; i < 20; ++i) {
      const Point p = testing::random_point(rng, 5, 0.8);
      const Matrix twice = transform_coefficients(gt, v, uc.apply(p));
      worst = std::max(worst, max_abs(twice - transform_coefficients(g, composed, p)));
    }
  }
  return {worst < 1e-9, fmt("100 changes x 20 points on a 3+2 bundle, max difference %.2e (< 1e-9)", worst)};
}

Outcome curvature_identity() {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  int entries = 0;
  for (const auto& e : testing::corpus_entries()) {
    const auto g = testing::make_connection(e);
    const int n = e.shape.n, dim = e.shape.dim();
    ++entries;
    for (int i = 0; i < 100; ++i) {
      const Point p = testing::random_point(rng, dim, 0.9);
      const auto c = anholonomy_adapted(g, p);
      const auto r = curvature(g, p);
      for (int mu = 0; mu < n; ++mu)
        for (int nu = 0; nu < n; ++nu)
          for (int k = 0; k < dim; ++k)
            worst = std::max(worst, std::abs(c(mu, nu, k) - (k < n ? 0.0 : r(k - n, mu, nu))));
    }
  }
  return {worst < 1e-9, fmt("%d corpus connections x 100 points, max |C - R| %.2e (< 1e-9)", entries, worst)};
}

Outcome point_normality() {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto entries = testing::corpus_entries();
  double worst = 0.0;
  int checks = 0;
  for (std::size_t k = 1; k <= 5; ++k) {
    const auto g = testing::make_connection(entries[k]);
    const int r = entries[k].shape.r;
    for (int i = 0; i < 20; ++i) {
      PointNormalSpec spec;
      spec.p = testing::random_point(rng, entries[k].shape.dim(), 0.9);
      for (int j = 0; j < 20; ++j) {
        spec.g.assign(static_cast<std::size_t>(r), 0.0);
        for (auto& v : spec.g) v = u(rng);
        spec.g_matrix = Matrix::Identity(r, r) * 2.0;
        for (int a = 0; a < r; ++a)
          for (int b = 0; b < r; ++b) spec.g_matrix(a, b) += 0.5 * u(rng);
        const auto rep = verify_normal(g, normal_at_point(g, spec), {spec.p}, 1e-10);
        worst = std::max(worst, rep.max_residual);
        ++checks;
      }
    }
  }
  return {worst < 1e-10, fmt("%d constructions, max residual at p %.2e (< 1e-10)", checks, worst)};
}

Outcome path_normality() {
  const auto flat = ConnectionCoefficients::parse({1, 1}, {{"u2"}}, Box{{-1, 0.1}, {1, 4}});
  const auto flat_path = ParamMap::parse({1, 1}, Box{{-1}, {1}}, {"s1", "exp(s1)"});
  const auto twisted = ConnectionCoefficients::parse({2, 1}, {{"0", "u1"}}, Box{{-1.5, -1, -1.5}, {1.5, 2.5, 1.5}});
  const auto twisted_path = ParamMap::parse({2, 1}, Box{{-1}, {1}}, {"s1", "s1^2", "sin(s1)"});
  PathOptions opts;
  opts.emit = false;
  const double r_flat = normal_along_path(flat, flat_path, 0.0, opts).report.max_residual;
  const double r_twisted = normal_along_path(twisted, twisted_path, 0.0, opts).report.max_residual;
  std::string ratios;
  double min_ratio = 1e300;
  for (const auto* pair : {&flat, &twisted}) {
    const auto& beta = pair == &flat ? flat_path : twisted_path;
    double prev = -1.0;
    for (double h = 0.2; h > 1e-3; h /= 2) {
      opts.quad_step = h;
      const double res = normal_along_path(*pair, beta, 0.0, opts).report.max_residual;
      if (prev > 1e-10) {
        min_ratio = std::min(min_ratio, prev / res);
        ratios += fmt("%.1f ", prev / res);
      }
      prev = res;
      if (res < 1e-10) break;
    }
  }
  if (ratios.empty()) ratios = "none above floor ";
  return {r_flat < 1e-6 && r_twisted < 1e-6 && min_ratio >= 4.0,
          fmt("residual at step 1e-3: flat %.2e, non-flat %.2e (< 1e-6); halving ratios above the 1e-10 floor: %s(>= 4)",
              r_flat, r_twisted, ratios.c_str())};
}

Outcome theorem_a1_both() {
  const auto g = ConnectionCoefficients::parse({2, 1}, {{"-0.3*u3", "0.7*u3"}}, Box{{-1.5, -1.5, 0.05}, {1.5, 1.5, 5.0}});
  const auto beta = ParamMap::parse({2, 1}, Box{{-1, -1}, {1, 1}}, {"s1", "s2", "exp(-0.3*s1 + 0.7*s2)"});
  const Point s0{0.0, 0.0};
  MapOptions opts;
  opts.frame.grid = 21;
  const auto res = theorem_a1(g, beta, s0, opts);
  double residual = 1e300, b_err = 1e300;
  if (res.constructed()) {
    residual = res.solution->report.max_residual;
    b_err = 0.0;
    for (std::size_t i = 0; i < res.frame->node_count(); ++i) {
      const Point s = res.frame->node(i);
      b_err = std::max(b_err, std::abs(res.frame->b_at(i)(0, 0) - std::exp(0.3 * s[0] - 0.7 * s[1])));
    }
  }
  const auto twisted = testing::parse_connection({2, 1}, {{"0", "u1"}}, 2);
  const auto sheet = ParamMap::parse({2, 1}, Box{{-1, -1}, {1, 1}}, {"s1", "s2", "0"});
  const auto obs = theorem_a1(twisted, sheet, s0, opts);
  const double a12a = obs.obstruction ? obs.obstruction->integrability.curvature_residual : -1.0;
  const bool pass = res.constructed() && residual < 1e-6 && b_err < 1e-8 && obs.obstruction &&
                    std::abs(a12a - 1.0) < 1e-9;
  return {pass, fmt("(a) %s, residual %.2e (< 1e-6), B vs closed form %.2e (< 1e-8); (b) %s, curvature residual %.12f",
                    res.constructed() ? "constructed" : "NOT constructed", residual, b_err,
                    obs.obstruction ? "obstruction" : "NO obstruction", a12a)};
}

Outcome holonomy() {
  const auto g = testing::parse_connection({2, 1}, {{"0", "u1"}}, 3);
  const auto loop = BasePath::polyline({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0, 0}}, true);
  const Point start{0.0};
  const double fine = std::abs(horizontal_lift(g, loop, start, 4000).points.back()[2] - 1.0);
  std::vector<double> err;
  for (int steps : {8, 16, 32, 64}) err.push_back(std::abs(horizontal_lift(g, loop, start, steps).points.back()[2] - 1.0));
  double min_order = 1e300;
  std::string orders;
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    const double o = std::log2(err[i] / err[i + 1]);
    min_order = std::min(min_order, o);
    orders += fmt("%.2f ", o);
  }
  return {fine < 1e-6 && min_order >= 3.8,
          fmt("defect error %.2e at step 1e-3 (< 1e-6); observed orders %s(>= 3.8)", fine, orders.c_str())};
}

Outcome vector_bundle_equivalence() {
  const auto g3 = ThreeIndexCoefficients::parse({1, 1}, {{{"0.5"}}});
  const auto curve = BasePath::from_expressions({Expression::parse("s1", parameter_variables(1))}, 0.0, 1.0);
  const auto pf = normal_frame_along_base_path(g3, curve, Matrix::Constant(1, 1, 1.0), 1000);
  double err = 0.0;
  for (std::size_t i = 0; i < pf.s.size(); ++i) err = std::max(err, std::abs(pf.b[i](0, 0) - std::exp(-0.5 * pf.s[i])));
  std::vector<std::vector<Matrix>> three;
  const std::size_t m = pf.transformed.size();
  for (std::size_t i = 0; i < 100; ++i) three.push_back({pf.transformed[i * (m - 1) / 99]});
  const auto eq = check_equivalence(three, spanning_fibre_points(1), 1e-9);
  return {err < 1e-8 && eq.holds && eq.fibre_points == 200,
          fmt("B vs exp(-cs) %.2e (< 1e-8); equivalence on %zu fibre points %s (3-index %.2e, 2-index %.2e)", err,
              eq.fibre_points, eq.holds ? "holds" : "VIOLATED", eq.max_three_index, eq.max_two_index)};
}

Outcome cross_layer() {
  const auto g3 = ThreeIndexCoefficients::parse({2, 2}, {{{"sin(u1)", "u2"}, {"0.5", "u1*u2"}},
                                                         {{"cos(u2)", "-0.3"}, {"u1^2", "exp(0.2*u1)"}}});
  const auto g = two_from_three(g3, testing::unit_box(4, 3));
  const auto b = BaseMatrixField::parse(2, 2, 2, {"2 + sin(u1)", "0.3*u2", "u1*u2", "1.5 + cos(u2)"});
  const auto bb = BaseMatrixField::parse(2, 2, 2, {"1 + 0.2*u2", "0.1*u1", "-0.3", "1.2 + 0.1*sin(u1)"});
  const BlockMatrixFn a = linear_frame_change(b, bb, 2, 2);
  std::mt19937_64 rng(91);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Point u = testing::random_point(rng, 4, 0.9);
    const Point x{u[0], u[1]};
    const auto t3 = transform_three(g3, b, bb, x);
    const Vector ut = b.eval(x).inverse() * Vector(Eigen::Vector2d(u[2], u[3]));
    const Matrix frame = transform_coefficients_frame(g, a, u);
    for (int c = 0; c < 2; ++c)
      for (int mu = 0; mu < 2; ++mu)
        worst = std::max(worst, std::abs(frame(c, mu) + t3[static_cast<std::size_t>(mu)].row(c).dot(ut)));
  }
  return {worst < 1e-8, fmt("50 points, max difference %.2e (< 1e-8)", worst)};
}

int shell(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
#ifdef WEXITSTATUS
  return WEXITSTATUS(rc);
#else
  return rc;
#endif
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome round_trip() {
  const fs::path dir = fs::temp_directory_path() / ("nframes-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = NFRAMES_CLI;
  const std::string configs = NFRAMES_CONFIG_DIR;
  const std::vector<std::pair<std::string, std::string>> runs{{"normal-point", "normal_point.json"},
                                                              {"normal-path", "path_flat.json"},
                                                              {"normal-path", "path_nonflat.json"},
                                                              {"normal-map", "map_horizontal.json"},
                                                              {"vb-normal", "vb_parallel.json"},
                                                              {"flatness", "flat_zero.json"}};
  int changes = 0, verified = 0, deterministic = 0, runs_ok = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& [cmd, cfg] = runs[k];
    const fs::path r1 = dir / (std::to_string(k) + "a.json"), r2 = dir / (std::to_string(k) + "b.json");
    const std::string base = cli + " " + cmd + " --config " + configs + "/" + cfg + " --format machine --seed 5";
    const int e1 = shell(base + " --report " + r1.string() + " > /dev/null");
    const int e2 = shell(base + " --report " + r2.string() + " > /dev/null");
    if (e1 == 0 && e2 == 0) ++runs_ok;
    if (slurp(r1) == slurp(r2) && !slurp(r1).empty()) ++deterministic;
    const json doc = json::parse(slurp(r1), nullptr, false);
    if (doc.is_discarded() || !doc["constructed"].contains("changes")) continue;
    std::ifstream in(configs + "/" + cfg);
    const json source = json::parse(in);
    for (const auto& c : doc["constructed"]["changes"]) {
      ++changes;
      json vcfg = source;
      vcfg["verify"] = json{{"change", c["change"]}, {"points", c["verify"]["points"]},
                            {"tolerance", c["verify"]["tolerance"]}};
      const fs::path vin = dir / ("verify" + std::to_string(changes) + ".json");
      const fs::path vout = dir / ("verify" + std::to_string(changes) + "-report.json");
      std::ofstream(vin) << vcfg.dump(2);
      const int ev = shell(cli + " verify --config " + vin.string() + " --format machine --report " + vout.string() +
                           " > /dev/null");
      const json vdoc = json::parse(slurp(vout), nullptr, false);
      if (ev == 0 && !vdoc.is_discarded() && vdoc["status"] == "pass") ++verified;
    }
  }
  fs::remove_all(dir);
  const int total = static_cast<int>(runs.size());
  return {changes > 0 && verified == changes && deterministic == total && runs_ok == total,
          fmt("%d/%d emitted changes re-verify through the verify command; %d/%d reports byte-identical across runs",
              verified, changes, deterministic, total)};
}

struct Criterion {
  const char* name;
  double budget_s;  // 0 means no runtime bound
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace nframes

int main() {
  using namespace nframes;
  const std::vector<Criterion> criteria{
      {"AD soundness", 5.0, ad_soundness},
      {"Transformation groupoid", 10.0, groupoid},
      {"Curvature identity", 0.0, curvature_identity},
      {"Point normality", 5.0, point_normality},
      {"Path normality", 10.0, path_normality},
      {"Construct-or-obstruct along a surface", 30.0, theorem_a1_both},
      {"Holonomy and curvature", 0.0, holonomy},
      {"Vector-bundle equivalence", 0.0, vector_bundle_equivalence},
      {"Cross-layer consistency", 0.0, cross_layer},
      {"Report round-trip", 0.0, round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    std::string time = fmt("%.2f s", secs);
    if (c.budget_s > 0.0) {
      time += fmt(" (< %.0f s)", c.budget_s);
      pass = pass && secs < c.budget_s;
    }
    if (!pass) ++failed;
    std::printf("%s %2zu. %s: %s [%s]\n", pass ? "PASS" : "FAIL", i + 1, c.name, o.detail.c_str(), time.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
