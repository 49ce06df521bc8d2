// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "nframes/normal_point.hpp"
#include "support/corpus.hpp"

namespace nframes {
namespace {

using testing::parse_connection;

TEST_SUITE("normal_point") {

TEST_CASE("zero connection gives an affine shift") {
  const auto g = ConnectionCoefficients::zero({2, 1}, testing::unit_box(3));
  PointNormalSpec spec;
  spec.p = {0.1, 0.2, 0.3};
  const auto c = normal_at_point(g, spec);
  const Point q{0.5, -0.5, 0.9};
  CHECK(c.apply(q)[2] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(verify_normal(g, c, {spec.p, q}, 1e-12).max_residual == 0.0);
}

TEST_CASE("line connection at (0, 1)") {
  const auto g = parse_connection({1, 1}, {{"u2"}}, 2);
  PointNormalSpec spec;
  spec.p = {0.0, 1.0};
  const auto c = normal_at_point(g, spec);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Point q = testing::random_point(rng, 2);
    CHECK(c.apply(q)[1] == doctest::Approx((q[1] - 1.0) - q[0]).epsilon(1e-14));
  }
  const auto rep = verify_normal(g, c, {spec.p}, 1e-10);
  CHECK(rep.pass);
  CHECK(rep.max_residual < 1e-15);
}

TEST_CASE("non-flat connection is normal only at the point") {
  const auto g = parse_connection({2, 1}, {{"0", "u1"}});
  PointNormalSpec spec;
  spec.p = {0.0, 0.0, 0.0};
  const auto c = normal_at_point(g, spec);
  const Point q{0.5, -0.2, 0.7};
  CHECK(c.apply(q)[2] == q[2]);
  CHECK(verify_normal(g, c, {spec.p}, 1e-10).pass);
  const auto near = verify_normal(g, c, sample_box(testing::unit_box(3, 0.5), 3, 0, 1), 1e-10);
  CHECK_FALSE(near.pass);
  CHECK(near.max_residual == doctest::Approx(0.5));
}

TEST_CASE("identity change fails where the coefficients do not vanish") {
  const auto g = parse_connection({1, 1}, {{"u2"}}, 2);
  const auto rep = verify_normal(g, CoordinateChange::identity({1, 1}), {{0.0, 1.0}}, 1e-10);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_residual == doctest::Approx(1.0));
  CHECK(verify_normal(ConnectionCoefficients::zero({1, 1}, testing::unit_box(2)), CoordinateChange::identity({1, 1}),
                      sample_box(testing::unit_box(2), 3, 5, 2), 1e-12)
            .max_residual == 0.0);
}

TEST_CASE("every corpus connection is normal at every grid point under random gauges") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& e : testing::corpus_entries()) {
    const auto g = testing::make_connection(e);
    const int r = e.shape.r;
    for (const auto& p : sample_box(testing::unit_box(e.shape.dim(), 0.9), 2, 6, 4)) {
      PointNormalSpec spec;
      spec.p = p;
      CHECK(verify_normal(g, normal_at_point(g, spec), {p}, 1e-10).pass);
      for (int trial = 0; trial < 5; ++trial) {
        spec.g.assign(static_cast<std::size_t>(r), 0.0);
        for (auto& v : spec.g) v = u(rng);
        spec.g_matrix = Matrix::Identity(r, r) * 2.0;
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j) spec.g_matrix(i, j) += 0.5 * u(rng);
        const auto c = normal_at_point(g, spec);
        CHECK(validate_admissible_change(c, {p}).pass);
        CHECK(verify_normal(g, c, {p}, 1e-10).pass);
      }
    }
  }
}

TEST_CASE("singular gauge matrix is rejected") {
  const auto g = parse_connection({2, 2}, {{"u3", "0"}, {"0", "u4"}});
  PointNormalSpec spec;
  spec.p = {0, 0, 0, 0};
  spec.g_matrix = Matrix::Ones(2, 2);
  CHECK_THROWS_AS((void)normal_at_point(g, spec), DegenerateError);
}

}  // TEST_SUITE

}  // namespace
}  // namespace nframes
