// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/linalg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "nframes/error.hpp"

namespace nframes {

double condition_estimate(const Matrix& m) {
  if (m.rows() == 0) return 1.0;
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  const Eigen::PartialPivLU<Matrix> lu(m);
  const double rc = lu.rcond();
  if (!(rc > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / rc;
}

namespace {

[[noreturn]] void degenerate(const std::string& what, double cond) {
  std::ostringstream os;
  os.precision(3);
  os << "degenerate " << what << ": condition estimate " << cond << " exceeds " << kMaxCondition;
  throw DegenerateError(os.str(), cond);
}

}  // namespace

Matrix checked_inverse(const Matrix& m, const std::string& what, double max_condition) {
  if (m.rows() == 0) return m;
  const double cond = condition_estimate(m);
  if (!(cond <= max_condition)) degenerate(what, cond);
  return Eigen::PartialPivLU<Matrix>(m).inverse();
}

Vector checked_solve(const Matrix& m, const Vector& b, const std::string& what, double max_condition) {
  const double cond = condition_estimate(m);
  if (!(cond <= max_condition)) degenerate(what, cond);
  return Eigen::PartialPivLU<Matrix>(m).solve(b);
}

}  // namespace nframes
