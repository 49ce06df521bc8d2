// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "nframes/expr.hpp"
#include "nframes/scalar.hpp"
#include "support/fuzz.hpp"

namespace nframes {
namespace {

double nested_central(const Expression& e, std::vector<double> x, std::size_t i, std::size_t j, double h) {
  auto at = [&](double di, double dj) {
    std::vector<double> p = x;
    p[i] += di;
    p[j] += dj;
    return e(p);
  };
  return (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
}

TEST_SUITE("scalar_ad") {

TEST_CASE("derive1 on small polynomials and products") {
  // f = u1^2, f' = 2 u1
  const auto v1 = bundle_variables(1);
  const std::vector<double> x1{3.0};
  CHECK(derive1(Expression::parse("u1^2", v1), x1, 0) == 6.0);

  // f = sin(u1) u2, df/du1 = cos(u1) u2
  const auto v2 = bundle_variables(2);
  const std::vector<double> x2{0.0, 2.0};
  CHECK(derive1(Expression::parse("sin(u1)*u2", v2), x2, 0) == 2.0);
}

TEST_CASE("derive1 of constants and seeded variable is exact") {
  const auto v = bundle_variables(3);
  const std::vector<double> x{0.3, -1.2, 7.0};
  CHECK(derive1(Expression::parse("4.5", v), x, 1) == 0.0);
  CHECK(derive1(Expression::parse("u2", v), x, 1) == 1.0);
  CHECK(derive1(Expression::parse("u2", v), x, 0) == 0.0);
}

TEST_CASE("derive2 mixed and pure partials") {
  const auto v2 = bundle_variables(2);
  const std::vector<double> x{1.7, -0.4};
  CHECK(derive2(Expression::parse("u1*u2", v2), x, 0, 1) == 1.0);
  const auto v1 = bundle_variables(1);
  const std::vector<double> x1{2.0};
  CHECK(derive2(Expression::parse("u1^3", v1), x1, 0, 0) == doctest::Approx(12.0).epsilon(1e-15));
}

TEST_CASE("fd_check on analytic functions") {
  const auto v = bundle_variables(1);
  const std::vector<double> three{3.0}, zero{0.0};
  CHECK(std::abs(fd_check(Expression::parse("u1^2", v), three, 0, 1e-5) - 6.0) < 1e-9);
  CHECK(std::abs(fd_check(Expression::parse("exp(u1)", v), zero, 0, 1e-5) - 1.0) < 1e-9);
}

TEST_CASE("derive1 agrees with central differences on a random corpus") {
  testing::ExprFuzzer fuzz(4, 17);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x;
    const Expression e = fuzz.expression(5, x);
    const double f = e(x);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double ad = derive1(e, x, i);
      const double fd = fd_check(e, x, i, 1e-5);
      INFO(e.to_string());
      CHECK(std::abs(ad - fd) < 1e-6 * (1.0 + std::abs(f) + std::abs(fd)));
    }
  }
}

TEST_CASE("derive2 is symmetric and matches nested central differences") {
  testing::ExprFuzzer fuzz(3, 99);
  for (int k = 0; k < 60; ++k) {
    std::vector<double> x;
    const Expression e = fuzz.expression(4, x, 1e2);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double hij = derive2(e, x, i, j);
        const double hji = derive2(e, x, j, i);
        INFO(e.to_string());
        CHECK(std::abs(hij - hji) < 1e-10);
        const double fd = nested_central(e, x, i, j, 1e-4);
        CHECK(std::abs(hij - fd) < 1e-4 * (1.0 + std::abs(e(x)) + std::abs(fd)));
      }
    }
  }
}

TEST_CASE("zero perturbations reproduce double arithmetic bit for bit") {
  testing::ExprFuzzer fuzz(4, 5);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> x;
    const Expression e = fuzz.expression(6, x);
    std::vector<Dual> dx(x.begin(), x.end());
    std::vector<HyperDual> hx(x.begin(), x.end());
    const double plain = e(x);
    CHECK(e.eval<Dual>(dx).v == plain);
    CHECK(e.eval<HyperDual>(hx).v == plain);
  }
}

TEST_CASE("value component obeys the ring axioms exactly on sampled triples") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  for (int k = 0; k < 500; ++k) {
    const double a = d(rng), b = d(rng), c = d(rng);
    const Dual x(a, d(rng)), y(b, d(rng)), z(c, d(rng));
    CHECK((x + y).v == (y + x).v);
    CHECK((x * y).v == (y * x).v);
    CHECK((x * (y + z)).v == a * (b + c));
    CHECK(((x + y) + z).v == (a + b) + c);
    CHECK((x - x).v == 0.0);
    CHECK((x * Dual(1.0)).v == a);
  }
}

TEST_CASE("domain errors carry the offending point") {
  const auto v = bundle_variables(2);
  const Expression e = Expression::parse("log(u1)", v);
  const std::vector<double> x{-1.0, 0.5};
  try {
    derive1(e, x, 0);
    FAIL("expected a domain error");
  } catch (const DomainError& err) {
    REQUIRE(err.point().size() == 2);
    CHECK(err.point()[0] == -1.0);
    CHECK(err.offset() == 0);
  }
}

}  // TEST_SUITE

}  // namespace
}  // namespace nframes
