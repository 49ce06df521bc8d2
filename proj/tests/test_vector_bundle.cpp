// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "nframes/vector_bundle.hpp"
#include "support/corpus.hpp"

namespace nframes {
namespace {

ThreeIndexCoefficients sample_three() {
  // n = 2, r = 2
  return ThreeIndexCoefficients::parse({2, 2},
                                       {{{"sin(u1)", "u2"}, {"0.5", "u1*u2"}},
                                        {{"cos(u2)", "-0.3"}, {"u1^2", "exp(0.2*u1)"}}});
}

BaseMatrixField frame_b() { return BaseMatrixField::parse(2, 2, 2, {"2 + sin(u1)", "0.3*u2", "u1*u2", "1.5 + cos(u2)"}); }
BaseMatrixField frame_base() { return BaseMatrixField::parse(2, 2, 2, {"1 + 0.2*u2", "0.1*u1", "-0.3", "1.2 + 0.1*sin(u1)"}); }

TEST_SUITE("vector_bundle") {

TEST_CASE("two_from_three examples") {
  const Box box = testing::unit_box(2, 2);
  const auto zero = two_from_three(ThreeIndexCoefficients::zero({1, 1}), box);
  const Point p{0.3, 0.7};
  CHECK(zero.values(p)(0, 0) == 0.0);

  const auto c = two_from_three(ThreeIndexCoefficients::parse({1, 1}, {{{"0.5"}}}), box);
  CHECK(c.values(p)(0, 0) == doctest::Approx(-0.35).epsilon(1e-15));
  CHECK(curvature(c, p).max_abs() == 0.0);

  const auto g = two_from_three(ThreeIndexCoefficients::parse({1, 1}, {{{"0.5"}}}, {{"1"}}), box);
  CHECK(g.values(p)(0, 0) == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(is_linear_form(g, sample_box(box, 4, 10, 2)).linear);
}

TEST_CASE("is_linear_form examples") {
  const auto samples = sample_box(testing::unit_box(3), 3, 10, 2);
  CHECK(is_linear_form(two_from_three(sample_three(), testing::unit_box(4)), sample_box(testing::unit_box(4), 3, 10, 2)).linear);
  CHECK_FALSE(is_linear_form(testing::parse_connection({1, 1}, {{"u2^2"}}), sample_box(testing::unit_box(2), 3, 5, 1)).linear);
  CHECK(is_linear_form(testing::parse_connection({2, 1}, {{"0", "u1*u3"}}), samples).linear);
}

TEST_CASE("curvature of a linear connection is affine in the fibre") {
  const auto g = two_from_three(sample_three(), testing::unit_box(4, 2));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const Point x = testing::random_point(rng, 2);
    const Point y1 = testing::random_point(rng, 2), y2 = testing::random_point(rng, 2);
    auto at = [&](const Point& y, double t) {
      Point u = x;
      for (int a = 0; a < 2; ++a) u.push_back((1 - t) * y[static_cast<std::size_t>(a)] + t * y2[static_cast<std::size_t>(a)]);
      return curvature(g, u)(0, 0, 1) + 2.0 * curvature(g, u)(1, 0, 1);
    };
    // Affine along every fibre segment: midpoint equals the mean of the ends.
    CHECK(std::abs(at(y1, 0.5) - 0.5 * (at(y1, 0.0) + at(y1, 1.0))) < 1e-9);
  }
}

TEST_CASE("covariant derivative examples and Leibniz rule") {
  const auto flat = ThreeIndexCoefficients::zero({2, 1});
  const auto ycon = Section::parse(2, {"0.7"});
  const auto f = Section::parse(2, {"1 + u2", "sin(u1)"});
  const Point x{0.2, -0.4};
  CHECK(covariant_derivative(flat, f, ycon, x)[0] == 0.0);

  const auto c = ThreeIndexCoefficients::parse({1, 1}, {{{"0.5"}}});
  const Point x1{0.3};
  CHECK(covariant_derivative(c, Section::parse(1, {"1"}), Section::parse(1, {"2"}), x1)[0] == doctest::Approx(1.0));

  const auto g3 = sample_three();
  const auto y = Section::parse(2, {"u1*u2 + 1", "cos(u1)"});
  const auto phi = Expression::parse("exp(0.3*u1) + u2^2", bundle_variables(2));
  Section phiy;
  for (const auto& e : y.components) phiy.components.push_back(phi * e);
  Section phif;
  for (const auto& e : f.components) phif.components.push_back(phi * e);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Point p = testing::random_point(rng, 2);
    const Point fv = f.eval(p);
    // F(phi) from central differences.
    double fphi = 0.0;
    for (int mu = 0; mu < 2; ++mu) {
      Point a = p, b = p;
      a[static_cast<std::size_t>(mu)] += 1e-6;
      b[static_cast<std::size_t>(mu)] -= 1e-6;
      fphi += fv[static_cast<std::size_t>(mu)] * (phi(a) - phi(b)) / 2e-6;
    }
    const Point lhs = covariant_derivative(g3, f, phiy, p);
    const Point dy = covariant_derivative(g3, f, y, p);
    const Point yv = y.eval(p);
    const Point homo = covariant_derivative(g3, phif, y, p);
    for (int a = 0; a < 2; ++a) {
      const std::size_t i_a = static_cast<std::size_t>(a);
      CHECK(std::abs(lhs[i_a] - fphi * yv[i_a] - phi(p) * dy[i_a]) < 1e-8);
      CHECK(std::abs(homo[i_a] - phi(p) * dy[i_a]) < 1e-10);
    }
    // Additivity in Y.
    Section sum;
    for (int a = 0; a < 2; ++a) sum.components.push_back(y.components[static_cast<std::size_t>(a)] + phiy.components[static_cast<std::size_t>(a)]);
    const Point s = covariant_derivative(g3, f, sum, p);
    for (int a = 0; a < 2; ++a)
      CHECK(std::abs(s[static_cast<std::size_t>(a)] - dy[static_cast<std::size_t>(a)] - lhs[static_cast<std::size_t>(a)]) < 1e-10);
  }
}

TEST_CASE("transform_three with identities is the identity") {
  const auto g3 = sample_three();
  const Point x{0.3, -0.2};
  const auto t = transform_three(g3, BaseMatrixField::identity(2, 2), BaseMatrixField::identity(2, 2), x);
  for (int mu = 0; mu < 2; ++mu) CHECK(max_abs(t[static_cast<std::size_t>(mu)] - g3.matrix(mu, x)) < 1e-15);
}

TEST_CASE("transform_three composes as a groupoid") {
  const auto g3 = sample_three();
  const auto b1 = frame_b(), bb1 = frame_base();
  const auto b2 = BaseMatrixField::parse(2, 2, 2, {"1 + 0.3*u1", "0.2", "-0.1*u2", "0.8 + 0.1*u1*u2"});
  const auto bb2 = BaseMatrixField::parse(2, 2, 2, {"1", "0.2*u2", "0.1*sin(u1)", "1 + 0.1*u1"});
  const std::vector<std::string> prod_b = {
      "(2 + sin(u1))*(1 + 0.3*u1) + 0.3*u2*(-0.1*u2)", "(2 + sin(u1))*0.2 + 0.3*u2*(0.8 + 0.1*u1*u2)",
      "u1*u2*(1 + 0.3*u1) + (1.5 + cos(u2))*(-0.1*u2)", "u1*u2*0.2 + (1.5 + cos(u2))*(0.8 + 0.1*u1*u2)"};
  const std::vector<std::string> prod_bb = {
      "(1 + 0.2*u2)*1 + 0.1*u1*0.1*sin(u1)", "(1 + 0.2*u2)*0.2*u2 + 0.1*u1*(1 + 0.1*u1)",
      "-0.3*1 + (1.2 + 0.1*sin(u1))*0.1*sin(u1)", "-0.3*0.2*u2 + (1.2 + 0.1*sin(u1))*(1 + 0.1*u1)"};
  const auto b12 = BaseMatrixField::parse(2, 2, 2, prod_b);
  const auto bb12 = BaseMatrixField::parse(2, 2, 2, prod_bb);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const Point x = testing::random_point(rng, 2, 0.8);
    const auto first = transform_three(g3, b1, bb1, x);
    // Second step differentiates along the first transformed base frame.
    const Matrix base1 = bb1.eval(x), base2 = bb2.eval(x), m2 = b2.eval(x);
    const Matrix m2inv = m2.inverse();
    const auto direct = transform_three(g3, b12, bb12, x);
    for (int mu = 0; mu < 2; ++mu) {
      Matrix expect = Matrix::Zero(2, 2);
      for (int nu = 0; nu < 2; ++nu) {
        Matrix e_b2 = Matrix::Zero(2, 2);
        for (int la = 0; la < 2; ++la) e_b2 += base1(la, nu) * b2.derivative(x, la);
        expect += base2(nu, mu) * m2inv * (first[static_cast<std::size_t>(nu)] * m2 + e_b2);
      }
      CHECK(max_abs(direct[static_cast<std::size_t>(mu)] - expect) < 1e-9);
    }
  }
}

TEST_CASE("two-index and three-index laws agree") {
  const auto g3 = ThreeIndexCoefficients::parse({2, 2},
                                                {{{"sin(u1)", "u2"}, {"0.5", "u1*u2"}},
                                                 {{"cos(u2)", "-0.3"}, {"u1^2", "exp(0.2*u1)"}}},
                                                {{"u1", "0.2"}, {"0", "sin(u2)"}});
  const auto g = two_from_three(g3, testing::unit_box(4, 3));
  const auto b = frame_b(), bb = frame_base();
  const BlockMatrixFn a = linear_frame_change(b, bb, 2, 2);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const Point u = testing::random_point(rng, 4, 0.9);
    const Point x{u[0], u[1]};
    const auto t3 = transform_three(g3, b, bb, x);
    const Matrix binv = b.eval(x).inverse();
    const Vector ut = binv * Vector(Eigen::Vector2d(u[2], u[3]));
    Matrix gaff(2, 2);
    for (int c = 0; c < 2; ++c)
      for (int mu = 0; mu < 2; ++mu) gaff(c, mu) = g3.affine(c, mu)(x);
    const Matrix gaff_t = binv * gaff * bb.eval(x);
    const Matrix frame = transform_coefficients_frame(g, a, u);
    for (int c = 0; c < 2; ++c)
      for (int mu = 0; mu < 2; ++mu) {
        const double expected = -(t3[static_cast<std::size_t>(mu)].row(c).dot(ut)) + gaff_t(c, mu);
        CHECK(std::abs(frame(c, mu) - expected) < 1e-8);
      }
  }
}

TEST_CASE("parallel frame along a base path") {
  const auto zero = normal_frame_along_base_path(
      ThreeIndexCoefficients::zero({1, 2}),
      BasePath::from_expressions({Expression::parse("s1^2", parameter_variables(1))}, 0.0, 1.0),
      Matrix::Identity(2, 2) * 3.0, 100);
  for (const auto& m : zero.b) CHECK(max_abs(m - Matrix::Identity(2, 2) * 3.0) == 0.0);

  const auto g3 = ThreeIndexCoefficients::parse({1, 1}, {{{"0.5"}}});
  const auto curve = BasePath::from_expressions({Expression::parse("s1", parameter_variables(1))}, 0.0, 1.0);
  const auto pf = normal_frame_along_base_path(g3, curve, Matrix::Constant(1, 1, 1.0), 1000);
  double worst = 0.0;
  for (std::size_t i = 0; i < pf.s.size(); ++i) worst = std::max(worst, std::abs(pf.b[i](0, 0) - std::exp(-0.5 * pf.s[i])));
  CHECK(worst < 1e-8);
  CHECK(pf.report.pass);
  CHECK(pf.report.max_three_index < 1e-7);
  CHECK(pf.report.max_two_index < 1e-7);
}

TEST_CASE("equivalence of three-index and two-index vanishing") {
  const auto pts = spanning_fibre_points(2);
  CHECK(pts.size() == 3);
  const auto zero = check_prop77(ThreeIndexCoefficients::zero({2, 2}), sample_box(testing::unit_box(2), 3, 5, 1),
                                 frame_b(), frame_base(), pts, 1e-9);
  // Zero coefficients with a non-parallel frame: both sides nonzero, still equivalent.
  CHECK(zero.holds);

  const auto id = check_prop77(ThreeIndexCoefficients::zero({2, 2}), sample_box(testing::unit_box(2), 3, 5, 1),
                               BaseMatrixField::identity(2, 2), BaseMatrixField::identity(2, 2), pts, 1e-9);
  CHECK(id.holds);
  CHECK(id.max_three_index == 0.0);
  CHECK(id.max_two_index == 0.0);
  CHECK(id.agreements == id.base_points);

  const auto generic = check_prop77(sample_three(), sample_box(testing::unit_box(2), 3, 5, 1), frame_b(), frame_base(),
                                    pts, 1e-9);
  CHECK(generic.holds);
  CHECK(generic.max_three_index > 1e-3);
  CHECK(generic.max_two_index > 1e-3);

  const auto g3 = ThreeIndexCoefficients::parse({1, 1}, {{{"0.5"}}});
  const auto curve = BasePath::from_expressions({Expression::parse("s1", parameter_variables(1))}, 0.0, 1.0);
  const auto pf = normal_frame_along_base_path(g3, curve, Matrix::Constant(1, 1, 1.0), 1000);
  std::vector<std::vector<Matrix>> three;
  for (const auto& m : pf.transformed) three.push_back({m});
  const auto along = check_equivalence(three, spanning_fibre_points(1), 1e-9);
  CHECK(along.holds);
  CHECK(along.max_three_index < 1e-9);
  CHECK(along.max_two_index < 1e-9);
}

TEST_CASE("too few fibre points are rejected") {
  try {
    (void)check_prop77(sample_three(), {{0.0, 0.0}}, frame_b(), frame_base(), {{1.0, 0.0}}, 1e-9);
    FAIL("expected an insufficient-samples error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientSamples);
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace nframes
