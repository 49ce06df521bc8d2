// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Expression language used for connection coefficients, coordinate changes and
// parameterized maps.
//
//   expr   := term (("+"|"-") term)* ;
//   term   := factor (("*"|"/") factor)* ;
//   factor := "-" factor | power ;
//   power  := atom ("^" factor)? ;
//   atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nframes/error.hpp"
#include "nframes/scalar.hpp"

namespace nframes {

enum class NodeKind : std::uint8_t { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Call };
enum class Function : std::uint8_t { Sin, Cos, Tan, Exp, Log, Sqrt, Sinh, Cosh, Tanh, Atan };

const char* function_name(Function f);

struct Node {
  NodeKind kind = NodeKind::Number;
  Function fn = Function::Sin;
  // Integer exponent of a Pow node whose exponent subtree is a constant integer.
  bool int_exponent = false;
  std::int32_t lhs = -1;
  std::int32_t rhs = -1;
  std::int32_t var = -1;
  long exponent = 0;
  double number = 0.0;
  std::size_t offset = kNoOffset;
  std::size_t length = 0;
};

using VariableList = std::shared_ptr<const std::vector<std::string>>;

VariableList make_variables(std::vector<std::string> names);
// u1..u{count}
VariableList bundle_variables(int count);
// s1..s{count}
VariableList parameter_variables(int count);

class Expression {
 public:
  Expression();  // literal 0 over no variables

  static Expression parse(std::string_view text, const VariableList& vars);
  static Expression constant(double value, const VariableList& vars);
  static Expression variable(int index, const VariableList& vars);

  template <class S> S eval(std::span<const S> env) const { return eval_node<S>(root_, env); }
  double operator()(std::span<const double> env) const { return eval<double>(env); }
  Dual operator()(std::span<const Dual> env) const { return eval<Dual>(env); }
  HyperDual operator()(std::span<const HyperDual> env) const { return eval<HyperDual>(env); }

  std::string to_string() const;
  const VariableList& variables() const { return vars_; }
  const std::string& source() const { return *source_; }

  bool structurally_equal(const Expression& other) const;
  bool is_constant() const;  // no variable references
  bool is_zero() const;      // literal zero
  bool uses_variable(int index) const;
  std::size_t node_count() const { return nodes_->size(); }

  const Node& root() const { return (*nodes_)[root_]; }
  const Node& node(std::int32_t i) const { return (*nodes_)[i]; }

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  friend Expression call(Function f, const Expression& a);
  friend Expression powi(const Expression& a, long n);
  friend Expression pow(const Expression& a, const Expression& b);
  friend Expression differentiate(const Expression& e, int var);
  friend Expression substitute(const Expression& e, const std::vector<Expression>& repl);

 private:
  friend class ExprBuilder;
  Expression(std::shared_ptr<const std::vector<Node>> nodes, std::int32_t root, VariableList vars,
             std::shared_ptr<const std::string> source);

  template <class S> S eval_node(std::int32_t i, std::span<const S> env) const;
  [[noreturn]] void domain_failure(const char* what, const Node& n) const;

  std::shared_ptr<const std::vector<Node>> nodes_;
  std::int32_t root_ = 0;
  VariableList vars_;
  std::shared_ptr<const std::string> source_;
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator*(const Expression& a, const Expression& b);
Expression operator/(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression operator+(const Expression& a, double b);
Expression operator*(double a, const Expression& b);
Expression call(Function f, const Expression& a);
Expression powi(const Expression& a, long n);
Expression pow(const Expression& a, const Expression& b);

// Symbolic partial derivative with respect to variable slot var.
Expression differentiate(const Expression& e, int var);
// Replace variable slot i by repl[i]; the result lives over repl's variable list.
Expression substitute(const Expression& e, const std::vector<Expression>& repl);

template <class S>
S Expression::eval_node(std::int32_t i, std::span<const S> env) const {
  const Node& n = (*nodes_)[i];
  switch (n.kind) {
    case NodeKind::Number:
      return S(n.number);
    case NodeKind::Variable:
      return env[static_cast<std::size_t>(n.var)];
    case NodeKind::Add:
      return eval_node<S>(n.lhs, env) + eval_node<S>(n.rhs, env);
    case NodeKind::Sub:
      return eval_node<S>(n.lhs, env) - eval_node<S>(n.rhs, env);
    case NodeKind::Mul:
      return eval_node<S>(n.lhs, env) * eval_node<S>(n.rhs, env);
    case NodeKind::Div: {
      const S a = eval_node<S>(n.lhs, env);
      const S b = eval_node<S>(n.rhs, env);
      if (value_of(b) == 0.0) domain_failure("division by zero", n);
      return a / b;
    }
    case NodeKind::Neg:
      return -eval_node<S>(n.lhs, env);
    case NodeKind::Pow: {
      const S a = eval_node<S>(n.lhs, env);
      if (n.int_exponent) {
        if (n.exponent < 0 && value_of(a) == 0.0) domain_failure("division by zero", n);
        return ad::powi(a, n.exponent);
      }
      const S b = eval_node<S>(n.rhs, env);
      if (!(value_of(a) > 0.0)) domain_failure("non-positive base with non-integer exponent", n);
      return ad::powr(a, b);
    }
    case NodeKind::Call: {
      const S a = eval_node<S>(n.lhs, env);
      switch (n.fn) {
        case Function::Sin: return ad::sin(a);
        case Function::Cos: return ad::cos(a);
        case Function::Tan: return ad::tan(a);
        case Function::Exp: return ad::exp(a);
        case Function::Log:
          if (!(value_of(a) > 0.0)) domain_failure("log of non-positive value", n);
          return ad::log(a);
        case Function::Sqrt:
          if (value_of(a) < 0.0) domain_failure("sqrt of negative value", n);
          return ad::sqrt(a);
        case Function::Sinh: return ad::sinh(a);
        case Function::Cosh: return ad::cosh(a);
        case Function::Tanh: return ad::tanh(a);
        case Function::Atan: return ad::atan(a);
      }
      break;
    }
  }
  return S(0.0);
}

// Convenience wrappers around the scalar_ad kernels for a single expression.
double derive1(const Expression& e, std::span<const double> x, std::size_t i);
double derive2(const Expression& e, std::span<const double> x, std::size_t i, std::size_t j);
double fd_check(const Expression& e, std::span<const double> x, std::size_t i, double h = 1e-5);

}  // namespace nframes
