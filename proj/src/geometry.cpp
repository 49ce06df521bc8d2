// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/geometry.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace nframes {

namespace {

class ExprFieldImpl final : public FieldImpl {
 public:
  explicit ExprFieldImpl(Expression e) : e_(std::move(e)) {}
  double eval(std::span<const double> u) const override { return e_.eval(u); }
  Dual eval(std::span<const Dual> u) const override { return e_.eval(u); }
  const Expression* expression() const override { return &e_; }

 private:
  Expression e_;
};

}  // namespace

Field::Field(Expression e) : impl_(std::make_shared<const ExprFieldImpl>(std::move(e))) {}

void BundleShape::validate() const {
  if (n < 1 || r < 1)
    throw Error(ErrorCode::Config, "bundle shape needs n >= 1 and r >= 1, got n=" + std::to_string(n) +
                                       " r=" + std::to_string(r));
}

bool Box::contains(std::span<const double> p, double slack) const {
  if (p.size() < lo.size()) return false;
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(p[i] >= lo[i] - slack && p[i] <= hi[i] + slack)) return false;
  return true;
}

Point Box::center() const {
  Point c(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

void Box::validate() const {
  if (lo.size() != hi.size() || lo.empty()) throw Error(ErrorCode::Config, "box bounds must have equal, nonzero length");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] < hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
      throw Error(ErrorCode::Config, "degenerate box along axis " + std::to_string(i + 1));
}

std::vector<Point> sample_box(const Box& box, int per_axis, int random_count, std::uint64_t seed) {
  std::vector<Point> out;
  const std::size_t d = box.dim();
  if (per_axis > 0) {
    std::vector<int> idx(d, 0);
    for (;;) {
      Point p(d);
      for (std::size_t i = 0; i < d; ++i) {
        p[i] = per_axis == 1 ? 0.5 * (box.lo[i] + box.hi[i])
                             : box.lo[i] + (box.hi[i] - box.lo[i]) * idx[i] / (per_axis - 1);
      }
      out.push_back(std::move(p));
      std::size_t k = 0;
      while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
      if (k == d) break;
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int j = 0; j < random_count; ++j) {
    Point p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
    out.push_back(std::move(p));
  }
  return out;
}

CoordinateChange::CoordinateChange(BundleShape shape, std::vector<Field> components)
    : shape_(shape), components_(std::move(components)) {
  shape_.validate();
  if (static_cast<int>(components_.size()) != shape_.dim())
    throw Error(ErrorCode::Config, "coordinate change needs " + std::to_string(shape_.dim()) + " components, got " +
                                       std::to_string(components_.size()));
}

CoordinateChange CoordinateChange::parse(BundleShape shape, const std::vector<std::string>& components) {
  const VariableList vars = shape.variables();
  std::vector<Field> fields;
  for (const auto& c : components) fields.emplace_back(Expression::parse(c, vars));
  return CoordinateChange(shape, std::move(fields));
}

CoordinateChange CoordinateChange::identity(BundleShape shape) {
  const VariableList vars = shape.variables();
  std::vector<Field> fields;
  for (int i = 0; i < shape.dim(); ++i) fields.emplace_back(Expression::variable(i, vars));
  return CoordinateChange(shape, std::move(fields));
}

Point CoordinateChange::apply(std::span<const double> u) const { return apply<double>(u); }

Matrix CoordinateChange::forward_jacobian(std::span<const double> u) const {
  const int d = shape_.dim();
  Matrix f(d, d);
  std::vector<Dual> env(u.begin(), u.end());
  for (int j = 0; j < d; ++j) {
    env[static_cast<std::size_t>(j)].d = 1.0;
    for (int i = 0; i < d; ++i) f(i, j) = components_[static_cast<std::size_t>(i)](std::span<const Dual>(env)).d;
    env[static_cast<std::size_t>(j)].d = 0.0;
  }
  return f;
}

std::optional<std::vector<Expression>> CoordinateChange::expressions() const {
  std::vector<Expression> out;
  for (const auto& c : components_) {
    if (!c.expression()) return std::nullopt;
    out.push_back(*c.expression());
  }
  return out;
}

std::vector<std::string> CoordinateChange::to_strings() const {
  std::vector<std::string> out;
  const auto exprs = expressions();
  if (!exprs) return out;
  for (const auto& e : *exprs) out.push_back(e.to_string());
  return out;
}

CoordinateChange compose(const CoordinateChange& first, const CoordinateChange& second) {
  if (!(first.shape() == second.shape())) throw Error(ErrorCode::Config, "composing changes of different shapes");
  const auto a = first.expressions();
  const auto b = second.expressions();
  std::vector<Field> out;
  if (a && b) {
    for (const auto& e : *b) out.emplace_back(substitute(e, *a));
    return CoordinateChange(first.shape(), std::move(out));
  }
  for (std::size_t i = 0; i < second.components().size(); ++i) {
    out.push_back(Field::generic([first, second, i](auto u) {
      using S = typename decltype(u)::value_type;
      const std::vector<S> mid = first.apply<S>(u);
      return second.components()[i](std::span<const S>(mid));
    }));
  }
  return CoordinateChange(first.shape(), std::move(out));
}

Matrix BlockMatrix::full() const {
  const int nn = n(), rr = r();
  Matrix m = Matrix::Zero(nn + rr, nn + rr);
  m.topLeftCorner(nn, nn) = base;
  m.bottomLeftCorner(rr, nn) = mixed;
  m.bottomRightCorner(rr, rr) = fibre;
  return m;
}

BlockMatrix BlockMatrix::from_full(const Matrix& m, int n, int r) {
  return {m.topLeftCorner(n, n), m.bottomLeftCorner(r, n), m.bottomRightCorner(r, r)};
}

BlockMatrix BlockMatrix::identity(int n, int r) {
  return {Matrix::Identity(n, n), Matrix::Zero(r, n), Matrix::Identity(r, r)};
}

BlockMatrix block_inverse(const BlockMatrix& a) {
  BlockMatrix inv;
  inv.base = checked_inverse(a.base, "base block");
  inv.fibre = checked_inverse(a.fibre, "fibre block");
  inv.mixed = -inv.fibre * a.mixed * inv.base;
  return inv;
}

void check_fibre_structure(const Matrix& f, int n, int r, std::span<const double> u) {
  for (int mu = 0; mu < n; ++mu) {
    for (int a = 0; a < r; ++a) {
      const double v = std::abs(f(mu, n + a));
      if (v > kFibreTolerance) {
        std::ostringstream os;
        os.precision(3);
        os << "coordinate change violates the fibre structure: |d ut" << mu + 1 << "/d u" << n + a + 1
           << "| = " << v << " at " << format_point(Point(u.begin(), u.end()));
        throw Error(ErrorCode::FibreStructure, os.str());
      }
    }
  }
}

BlockMatrix jacobian(const CoordinateChange& change, std::span<const double> u) {
  const int n = change.shape().n, r = change.shape().r;
  const Matrix f = change.forward_jacobian(u);
  check_fibre_structure(f, n, r, u);
  return block_inverse(BlockMatrix::from_full(f, n, r));
}

AdmissibilityReport validate_admissible_change(const CoordinateChange& change, const std::vector<Point>& samples) {
  AdmissibilityReport rep;
  const int n = change.shape().n, r = change.shape().r;
  rep.min_abs_det_base = std::numeric_limits<double>::infinity();
  rep.min_abs_det_fibre = std::numeric_limits<double>::infinity();
  for (const auto& p : samples) {
    const Matrix f = change.forward_jacobian(p);
    for (int mu = 0; mu < n; ++mu) {
      for (int a = 0; a < r; ++a) {
        const double v = std::abs(f(mu, n + a));
        if (v > rep.max_fibre_dependence) {
          rep.max_fibre_dependence = v;
          rep.worst_mu = mu;
          rep.worst_a = n + a;
          rep.worst_point = p;
        }
      }
    }
    const Matrix fb = f.topLeftCorner(n, n), ff = f.bottomRightCorner(r, r);
    rep.min_abs_det_base = std::min(rep.min_abs_det_base, std::abs(fb.determinant()));
    rep.min_abs_det_fibre = std::min(rep.min_abs_det_fibre, std::abs(ff.determinant()));
    rep.max_condition = std::max({rep.max_condition, condition_estimate(fb), condition_estimate(ff)});
    ++rep.samples;
  }
  rep.pass = !samples.empty() && rep.max_fibre_dependence < kFibreTolerance && rep.max_condition <= kMaxCondition &&
             rep.min_abs_det_base > 0.0 && rep.min_abs_det_fibre > 0.0;
  return rep;
}

}  // namespace nframes
