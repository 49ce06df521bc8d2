// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// A scalar function of bundle coordinates that can be evaluated on plain and
// dual scalars. Either backed by a DSL expression or by engine code (inverse
// functions, tabulated quadratures) that has no closed form.

#pragma once

#include <memory>
#include <span>
#include <utility>

#include "nframes/expr.hpp"
#include "nframes/scalar.hpp"

namespace nframes {

class FieldImpl {
 public:
  virtual ~FieldImpl() = default;
  virtual double eval(std::span<const double> u) const = 0;
  virtual Dual eval(std::span<const Dual> u) const = 0;
  virtual const Expression* expression() const { return nullptr; }
};

class Field {
 public:
  Field() : Field(Expression()) {}
  Field(Expression e);  // NOLINT: expressions are fields

  // Wraps a generic callable invocable with span<const double> and span<const Dual>.
  template <class F>
  static Field generic(F f) {
    struct Impl final : FieldImpl {
      explicit Impl(F fn) : fn_(std::move(fn)) {}
      double eval(std::span<const double> u) const override { return fn_(u); }
      Dual eval(std::span<const Dual> u) const override { return fn_(u); }
      F fn_;
    };
    return Field(std::make_shared<const Impl>(std::move(f)));
  }

  double operator()(std::span<const double> u) const { return impl_->eval(u); }
  Dual operator()(std::span<const Dual> u) const { return impl_->eval(u); }

  template <class S> S eval(std::span<const S> u) const { return (*this)(u); }

  // The DSL form when one exists.
  const Expression* expression() const { return impl_->expression(); }

 private:
  explicit Field(std::shared_ptr<const FieldImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const FieldImpl> impl_;
};

}  // namespace nframes
