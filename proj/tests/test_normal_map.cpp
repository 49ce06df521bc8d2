// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "nframes/normal_map.hpp"
#include "support/corpus.hpp"

namespace nframes {
namespace {

const Box kSquare{{-1.0, -1.0}, {1.0, 1.0}};

ConnectionCoefficients exponential() {
  return ConnectionCoefficients::parse({2, 1}, {{"-0.3*u3", "0.7*u3"}}, Box{{-1.5, -1.5, 0.05}, {1.5, 1.5, 5.0}});
}

ParamMap horizontal_surface() {
  return ParamMap::parse({2, 1}, kSquare, {"s1", "s2", "exp(-0.3*s1 + 0.7*s2)"});
}

TEST_SUITE("normal_map") {

TEST_CASE("translation chart for a flat sheet") {
  const auto beta = ParamMap::parse({2, 1}, kSquare, {"s1", "s2", "0.5"});
  const Point s0{0.0, 0.0};
  const auto chart = adapt_chart_to_map(beta, s0);
  const Point x = chart.to_chart(beta.point(std::vector<double>{0.3, -0.4}));
  CHECK(x[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(-0.4).epsilon(1e-15));
  CHECK(x[2] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("Newton inversion of a cubic sheet") {
  const auto beta = ParamMap::parse({2, 1}, Box{{-0.5, -0.5}, {0.5, 0.5}}, {"s1 + s2^3", "s2", "1"});
  const Point s0{0.0, 0.0};
  const auto chart = adapt_chart_to_map(beta, s0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const Point s{chart.window().lo[0] + (chart.window().hi[0] - chart.window().lo[0]) * (i + 0.5) / 20.0,
                    chart.window().lo[1] + (chart.window().hi[1] - chart.window().lo[1]) * (j + 0.5) / 20.0};
      const Point x = chart.to_chart(beta.point(s));
      worst = std::max({worst, std::abs(x[0] - s[0]), std::abs(x[1] - s[1]), std::abs(x[2] - 1.0)});
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("rank-deficient base rows are rejected") {
  const auto beta = ParamMap::parse({2, 1}, kSquare, {"s1 + s2", "2*(s1 + s2)", "s1"});
  const Point s0{0.0, 0.0};
  try {
    (void)adapt_chart_to_map(beta, s0);
    FAIL("expected a rank-deficiency error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
  }
}

TEST_CASE("integrability residuals") {
  const Point s0{0.0, 0.0};
  const auto flat_sheet = ParamMap::parse({2, 1}, kSquare, {"s1", "s2", "0"});
  const auto zero = ConnectionCoefficients::zero({2, 1}, testing::unit_box(3, 2));
  const auto c0 = adapt_chart_to_map(flat_sheet, s0);
  const auto r0 = check_integrability(c0, c0.chart_coefficients(zero), 21);
  CHECK(r0.curvature_residual == 0.0);
  CHECK(r0.second_order_residual == 0.0);
  CHECK(r0.nodes == 441);

  const auto ce = adapt_chart_to_map(horizontal_surface(), s0);
  const auto re = check_integrability(ce, ce.chart_coefficients(exponential()), 21);
  CHECK(re.pass());
  CHECK(re.curvature_residual < 1e-8);
  CHECK(re.second_order_residual < 1e-10);

  const auto twisted = testing::parse_connection({2, 1}, {{"0", "u1"}}, 2);
  const auto rt = check_integrability(c0, c0.chart_coefficients(twisted), 21);
  CHECK_FALSE(rt.curvature_pass);
  CHECK(rt.curvature_residual == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("second-order condition detects fibre-nonlinear coefficients") {
  // Gamma_1 = 0, Gamma_2 = (u3)^2: flat along u3 = 0, yet A.12b fails where Gamma_1 is nonzero.
  const auto g = testing::parse_connection({2, 1}, {{"u3", "u3^2"}}, 2);
  const auto beta = ParamMap::parse({2, 1}, Box{{-0.5, -0.5}, {0.5, 0.5}}, {"s1", "s2", "0"});
  const Point s0{0.0, 0.0};
  const auto chart = adapt_chart_to_map(beta, s0);
  const auto rep = check_integrability(chart, chart.chart_coefficients(g), 11);
  CHECK(rep.curvature_residual < 1e-14);
  CHECK(rep.second_order_residual == 0.0);

  const auto shifted = ParamMap::parse({2, 1}, Box{{-0.5, -0.5}, {0.5, 0.5}}, {"s1", "s2", "0.5"});
  const auto cs = adapt_chart_to_map(shifted, s0);
  const auto rs = check_integrability(cs, cs.chart_coefficients(g), 11);
  CHECK_FALSE(rs.pass());
}

TEST_CASE("frame field is constant when the coefficients ignore the fibre") {
  const auto g = testing::parse_connection({2, 1}, {{"sin(u1)", "u2"}}, 2);
  const auto beta = ParamMap::parse({2, 1}, kSquare, {"s1", "s2", "0"});
  const Point s0{0.0, 0.0};
  const auto chart = adapt_chart_to_map(beta, s0);
  FrameFieldOptions opts;
  opts.b_start = Matrix::Constant(1, 1, 2.5);
  const auto frame = solve_frame_field(chart, chart.chart_coefficients(g), opts);
  for (std::size_t i = 0; i < frame.node_count(); ++i) CHECK(std::abs(frame.b_at(i)(0, 0) - 2.5) < 1e-13);
}

TEST_CASE("frame field matches the exponential closed form") {
  const auto beta = horizontal_surface();
  const Point s0{0.0, 0.0};
  const auto chart = adapt_chart_to_map(beta, s0);
  FrameFieldOptions opts;
  opts.s1 = {0.2, -0.1};
  const auto frame = solve_frame_field(chart, chart.chart_coefficients(exponential()), opts);
  CHECK(frame.grid() == 21);
  CHECK(frame.path_independence() < 1e-8);
  double worst = 0.0;
  for (std::size_t i = 0; i < frame.node_count(); ++i) {
    const Point s = frame.node(i);
    worst = std::max(worst, std::abs(frame.b_at(i)(0, 0) - std::exp(0.3 * (s[0] - 0.2) - 0.7 * (s[1] + 0.1))));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("assembled f satisfies its defining equation") {
  // Flat connection on a sheet that is not horizontal, so f is far from trivial.
  const auto beta = ParamMap::parse({2, 1}, kSquare, {"s1", "s2", "1 + 0.2*s1*s2"});
  const Point s0{0.0, 0.0};
  const auto chart = adapt_chart_to_map(beta, s0);
  const auto cg = chart.chart_coefficients(exponential());
  REQUIRE(check_integrability(chart, cg, 11).pass());
  const auto frame = solve_frame_field(chart, cg);
  const double h = 1e-4;
  for (std::size_t i = 0; i < frame.node_count(); i += 37) {
    const Point s = frame.node(i);
    for (int al = 0; al < 2; ++al) {
      Point sp = s, sm = s;
      sp[static_cast<std::size_t>(al)] += h;
      sm[static_cast<std::size_t>(al)] -= h;
      if (!chart.window().contains(sp) || !chart.window().contains(sm)) continue;
      double fp, fm, bp, bm, f0, b0;
      frame.eval(std::span<const double>(sp), &fp, &bp);
      frame.eval(std::span<const double>(sm), &fm, &bm);
      frame.eval(std::span<const double>(s), &f0, &b0);
      const Point u = chart.on_map<double>(s);
      CHECK(std::abs((fp - fm) / (2 * h) + b0 * cg.entry(0, al)(u)) < 1e-7);
    }
  }
}

TEST_CASE("theorem_a1 on the zero connection") {
  const auto zero = ConnectionCoefficients::zero({2, 1}, testing::unit_box(3, 2));
  const auto beta = ParamMap::parse({2, 1}, kSquare, {"s1", "s2", "0.3*s1*s2"});
  const Point s0{0.0, 0.0};
  const auto res = theorem_a1(zero, beta, s0);
  REQUIRE(res.constructed());
  CHECK(res.solution->report.max_residual < 1e-10);
}

TEST_CASE("theorem_a1 constructs along the horizontal surface") {
  const Point s0{0.0, 0.0};
  const auto res = theorem_a1(exponential(), horizontal_surface(), s0);
  REQUIRE(res.constructed());
  CHECK(res.solution->report.pass);
  CHECK(res.solution->report.max_residual < 1e-6);
  REQUIRE(res.solution->emitted.has_value());
  CHECK(res.solution->emitted_report.pass);
  const auto reparsed = CoordinateChange::parse({2, 1}, res.solution->emitted->to_strings());
  CHECK(verify_normal(exponential(), reparsed, res.solution->verify_points, 1e-6).pass);
}

TEST_CASE("theorem_a1 reports the obstruction for a twisted connection") {
  const auto g = testing::parse_connection({2, 1}, {{"0", "u1"}}, 2);
  const auto beta = ParamMap::parse({2, 1}, kSquare, {"s1", "s2", "0"});
  const Point s0{0.0, 0.0};
  const auto res = theorem_a1(g, beta, s0);
  CHECK_FALSE(res.constructed());
  REQUIRE(res.obstruction.has_value());
  CHECK(std::abs(res.obstruction->integrability.curvature_residual - 1.0) < 1e-9);
  CHECK_FALSE(res.obstruction->summary.empty());
}

TEST_CASE("k = 1 reduces to the path construction") {
  const auto g = ConnectionCoefficients::parse({2, 1}, {{"0", "u1"}}, Box{{-1.5, -1, -1.5}, {1.5, 2.5, 1.5}});
  const auto beta = ParamMap::parse({2, 1}, Box{{-1}, {1}}, {"s1", "s1^2", "sin(s1)"});
  const Point s0{0.0};
  const auto map = theorem_a1(g, beta, s0);
  REQUIRE(map.constructed());
  const auto path = normal_along_path(g, beta, 0.0);
  CHECK(std::abs(map.solution->report.max_residual - path.report.max_residual) < 1e-8);
  CHECK(map.solution->report.max_residual < 1e-6);
}

TEST_CASE("user supplied D changes B but keeps normality") {
  const Point s0{0.0, 0.0};
  MapOptions opts;
  // D must depend on s through -0.3 s1 + 0.7 s2 to keep the frame equation integrable.
  opts.frame.d = {"0.5*sin(-0.3*s1 + 0.7*s2)"};
  opts.emit = false;
  const auto res = theorem_a1(exponential(), horizontal_surface(), s0, opts);
  REQUIRE(res.constructed());
  CHECK(res.solution->report.max_residual < 1e-6);
  const Point corner = res.frame->node(0);
  CHECK(std::abs(res.frame->b_at(0)(0, 0) - std::exp(0.3 * corner[0] - 0.7 * corner[1])) > 1e-3);
}

}  // TEST_SUITE

}  // namespace
}  // namespace nframes
