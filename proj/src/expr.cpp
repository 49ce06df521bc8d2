// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace nframes {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Syntax: return "syntax";
    case ErrorCode::UnknownVariable: return "unknown-variable";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::FibreStructure: return "fibre-structure";
    case ErrorCode::FibreConstancy: return "fibre-constancy";
    case ErrorCode::VerticalTangent: return "vertical-tangent";
    case ErrorCode::RankDeficient: return "rank-deficient";
    case ErrorCode::Inversion: return "inversion";
    case ErrorCode::EmptyWindow: return "empty-window";
    case ErrorCode::DetCollapse: return "det-collapse";
    case ErrorCode::PathDependence: return "path-dependence";
    case ErrorCode::InsufficientSamples: return "insufficient-samples";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

std::string format_point(const std::vector<double>& p) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

DomainError::DomainError(const DomainError& base, std::vector<double> point)
    : Error(ErrorCode::Domain, base.reason() + " at point " + format_point(point)),
      reason_(base.reason()),
      offset_(base.offset()),
      length_(base.length()),
      point_(std::move(point)) {}

namespace {

constexpr std::array<std::pair<const char*, Function>, 10> kFunctions{{
    {"sin", Function::Sin},
    {"cos", Function::Cos},
    {"tan", Function::Tan},
    {"exp", Function::Exp},
    {"log", Function::Log},
    {"sqrt", Function::Sqrt},
    {"sinh", Function::Sinh},
    {"cosh", Function::Cosh},
    {"tanh", Function::Tanh},
    {"atan", Function::Atan},
}};

std::optional<Function> lookup_function(std::string_view name) {
  for (const auto& [n, f] : kFunctions)
    if (name == n) return f;
  return std::nullopt;
}

VariableList numbered(char prefix, int count) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(count));
  for (int i = 1; i <= count; ++i) names.push_back(prefix + std::to_string(i));
  return make_variables(std::move(names));
}

bool same_variables(const VariableList& a, const VariableList& b) {
  return a == b || (a && b && *a == *b);
}

std::string format_number(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::Domain, "cannot print non-finite literal");
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

  std::vector<Node> run(std::int32_t& root) {
    root = expr();
    skip_ws();
    if (pos_ < text_.size())
      fail(pos_, "expected operator or end of input", {"+", "-", "*", "/", "^", "end of input"});
    return std::move(nodes_);
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& msg, std::vector<std::string> expected) {
    throw ParseError(ErrorCode::Syntax, "syntax error at offset " + std::to_string(at) + ": " + msg, at,
                     std::move(expected));
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                   text_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::int32_t push(Node n) {
    nodes_.push_back(n);
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::int32_t binary(NodeKind k, std::int32_t l, std::int32_t r, std::size_t start) {
    Node n;
    n.kind = k;
    n.lhs = l;
    n.rhs = r;
    n.offset = start;
    n.length = pos_ - start;
    return push(n);
  }

  std::int32_t expr() {
    skip_ws();
    const std::size_t start = pos_;
    std::int32_t lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(NodeKind::Add, lhs, term(), start);
      } else if (accept('-')) {
        lhs = binary(NodeKind::Sub, lhs, term(), start);
      } else {
        return lhs;
      }
    }
  }

  std::int32_t term() {
    skip_ws();
    const std::size_t start = pos_;
    std::int32_t lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = binary(NodeKind::Mul, lhs, factor(), start);
      } else if (accept('/')) {
        lhs = binary(NodeKind::Div, lhs, factor(), start);
      } else {
        return lhs;
      }
    }
  }

  std::int32_t factor() {
    skip_ws();
    const std::size_t start = pos_;
    if (accept('-')) {
      Node n;
      n.kind = NodeKind::Neg;
      n.lhs = factor();
      n.offset = start;
      n.length = pos_ - start;
      return push(n);
    }
    return power();
  }

  std::int32_t power() {
    skip_ws();
    const std::size_t start = pos_;
    const std::int32_t base = atom();
    if (!accept('^')) return base;
    const std::int32_t ex = factor();
    Node n;
    n.kind = NodeKind::Pow;
    n.lhs = base;
    n.rhs = ex;
    n.offset = start;
    n.length = pos_ - start;
    mark_integer_exponent(n);
    return push(n);
  }

  void mark_integer_exponent(Node& n) {
    // Only literal subtrees qualify, so the choice never depends on a variable.
    if (!constant_subtree(nodes_, n.rhs)) return;
    try {
      const double v = eval_constant(nodes_, n.rhs);
      if (std::isfinite(v) && std::floor(v) == v && std::abs(v) < 2147483647.0) {
        n.int_exponent = true;
        n.exponent = static_cast<long>(v);
      }
    } catch (const DomainError&) {
    }
  }

  static bool constant_subtree(const std::vector<Node>& nodes, std::int32_t i) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    if (n.kind == NodeKind::Variable) return false;
    if (n.lhs >= 0 && !constant_subtree(nodes, n.lhs)) return false;
    return n.rhs < 0 || constant_subtree(nodes, n.rhs);
  }

  static double eval_constant(const std::vector<Node>& nodes, std::int32_t i);

  std::int32_t atom() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) fail(pos_, "expected operand", {"number", "identifier", "(", "-"});
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      const std::int32_t inner = expr();
      if (!accept(')')) {
        skip_ws();
        fail(pos_, "expected ')'", {")"});
      }
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number(start);
    if (c >= 'a' && c <= 'z') return identifier(start);
    fail(pos_, "expected operand", {"number", "identifier", "(", "-"});
  }

  std::int32_t number(std::size_t start) {
    std::size_t p = pos_;
    auto digits = [&] {
      const std::size_t s = p;
      while (p < text_.size() && text_[p] >= '0' && text_[p] <= '9') ++p;
      return p - s;
    };
    std::size_t count = digits();
    if (p < text_.size() && text_[p] == '.') {
      ++p;
      count += digits();
    }
    if (count == 0) fail(start, "malformed number", {"number"});
    if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
      std::size_t q = p + 1;
      if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
      if (q < text_.size() && text_[q] >= '0' && text_[q] <= '9') {
        p = q;
        digits();
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(text_.data() + start, text_.data() + p, v);
    if (res.ec != std::errc() || res.ptr != text_.data() + p) fail(start, "malformed number", {"number"});
    pos_ = p;
    Node n;
    n.kind = NodeKind::Number;
    n.number = v;
    n.offset = start;
    n.length = p - start;
    return push(n);
  }

  std::int32_t identifier(std::size_t start) {
    std::size_t p = pos_;
    while (p < text_.size() && ((text_[p] >= 'a' && text_[p] <= 'z') || (text_[p] >= '0' && text_[p] <= '9')))
      ++p;
    const std::string_view name = text_.substr(start, p - start);
    pos_ = p;
    if (const auto fn = lookup_function(name)) {
      if (!accept('(')) {
        skip_ws();
        fail(pos_, "expected '(' after function name '" + std::string(name) + "'", {"("});
      }
      const std::int32_t arg = expr();
      if (!accept(')')) {
        skip_ws();
        fail(pos_, "expected ')'", {")"});
      }
      Node n;
      n.kind = NodeKind::Call;
      n.fn = *fn;
      n.lhs = arg;
      n.offset = start;
      n.length = pos_ - start;
      return push(n);
    }
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(')
          throw ParseError(ErrorCode::Syntax,
                           "syntax error at offset " + std::to_string(start) + ": unknown function '" +
                               std::string(name) + "'",
                           start, {"function name"});
        Node n;
        n.kind = NodeKind::Variable;
        n.var = static_cast<std::int32_t>(i);
        n.offset = start;
        n.length = name.size();
        return push(n);
      }
    }
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(')
      throw ParseError(ErrorCode::Syntax,
                       "syntax error at offset " + std::to_string(start) + ": unknown function '" +
                           std::string(name) + "'",
                       start, {"function name"});
    throw ParseError(ErrorCode::UnknownVariable,
                     "unknown variable '" + std::string(name) + "' at offset " + std::to_string(start), start);
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  std::vector<Node> nodes_;
  std::size_t pos_ = 0;
};

}  // namespace

// Evaluates a literal-only subtree while parsing.
double Parser::eval_constant(const std::vector<Node>& nodes, std::int32_t i) {
  struct Eval {
    const std::vector<Node>& n;
    double run(std::int32_t k) const {
      const Node& x = n[static_cast<std::size_t>(k)];
      switch (x.kind) {
        case NodeKind::Number: return x.number;
        case NodeKind::Variable: return 0.0;
        case NodeKind::Add: return run(x.lhs) + run(x.rhs);
        case NodeKind::Sub: return run(x.lhs) - run(x.rhs);
        case NodeKind::Mul: return run(x.lhs) * run(x.rhs);
        case NodeKind::Div: {
          const double b = run(x.rhs);
          if (b == 0.0) throw DomainError("division by zero", x.offset, x.length);
          return run(x.lhs) / b;
        }
        case NodeKind::Neg: return -run(x.lhs);
        case NodeKind::Pow: {
          const double a = run(x.lhs);
          if (x.int_exponent) return std::pow(a, static_cast<double>(x.exponent));
          if (!(a > 0.0)) throw DomainError("non-positive base", x.offset, x.length);
          return std::pow(a, run(x.rhs));
        }
        case NodeKind::Call: {
          const double a = run(x.lhs);
          switch (x.fn) {
            case Function::Sin: return std::sin(a);
            case Function::Cos: return std::cos(a);
            case Function::Tan: return std::tan(a);
            case Function::Exp: return std::exp(a);
            case Function::Log:
              if (!(a > 0.0)) throw DomainError("log", x.offset, x.length);
              return std::log(a);
            case Function::Sqrt:
              if (a < 0.0) throw DomainError("sqrt", x.offset, x.length);
              return std::sqrt(a);
            case Function::Sinh: return std::sinh(a);
            case Function::Cosh: return std::cosh(a);
            case Function::Tanh: return std::tanh(a);
            case Function::Atan: return std::atan(a);
          }
        }
      }
      return 0.0;
    }
  };
  return Eval{nodes}.run(i);
}

const char* function_name(Function f) {
  for (const auto& [n, fn] : kFunctions)
    if (fn == f) return n;
  return "?";
}

VariableList make_variables(std::vector<std::string> names) {
  return std::make_shared<const std::vector<std::string>>(std::move(names));
}

VariableList bundle_variables(int count) { return numbered('u', count); }
VariableList parameter_variables(int count) { return numbered('s', count); }

// Tree surgery for the builder operators, differentiate and substitute.
class ExprBuilder {
 public:
  static std::int32_t append(std::vector<Node>& out, const Expression& e, std::int32_t i,
                             const std::vector<Expression>* repl = nullptr) {
    const Node& src = e.node(i);
    if (repl && src.kind == NodeKind::Variable) {
      const Expression& r = (*repl)[static_cast<std::size_t>(src.var)];
      return append(out, r, r.root_);
    }
    Node n = src;
    n.offset = kNoOffset;
    n.length = 0;
    if (src.lhs >= 0) n.lhs = append(out, e, src.lhs, repl);
    if (src.rhs >= 0) n.rhs = append(out, e, src.rhs, repl);
    out.push_back(n);
    return static_cast<std::int32_t>(out.size() - 1);
  }

  static Expression make(std::vector<Node> nodes, VariableList vars) {
    const auto root = static_cast<std::int32_t>(nodes.size() - 1);
    return Expression(std::make_shared<const std::vector<Node>>(std::move(nodes)), root, std::move(vars),
                      nullptr);
  }

  static Expression unary(NodeKind k, const Expression& a, Function fn = Function::Sin) {
    std::vector<Node> nodes;
    nodes.reserve(a.node_count() + 1);
    Node n;
    n.kind = k;
    n.fn = fn;
    n.lhs = append(nodes, a, a.root_);
    nodes.push_back(n);
    return make(std::move(nodes), a.vars_);
  }

  static Expression binary(NodeKind k, const Expression& a, const Expression& b) {
    if (!same_variables(a.vars_, b.vars_))
      throw Error(ErrorCode::Config, "cannot combine expressions over different variable lists");
    std::vector<Node> nodes;
    nodes.reserve(a.node_count() + b.node_count() + 1);
    Node n;
    n.kind = k;
    n.lhs = append(nodes, a, a.root_);
    n.rhs = append(nodes, b, b.root_);
    nodes.push_back(n);
    return make(std::move(nodes), a.vars_);
  }

  static Expression int_pow(const Expression& a, long k) {
    std::vector<Node> nodes;
    Node n;
    n.kind = NodeKind::Pow;
    n.int_exponent = true;
    n.exponent = k;
    n.lhs = append(nodes, a, a.root_);
    const Expression ex = Expression::constant(static_cast<double>(k), a.vars_);
    n.rhs = append(nodes, ex, ex.root_);
    nodes.push_back(n);
    return make(std::move(nodes), a.vars_);
  }

  static Expression subst(const Expression& e, const std::vector<Expression>& repl) {
    std::vector<Node> nodes;
    append(nodes, e, e.root_, &repl);
    return make(std::move(nodes), repl.front().vars_);
  }

  static std::optional<double> literal(const Expression& e) {
    const Node& r = e.root();
    if (r.kind == NodeKind::Number) return r.number;
    if (r.kind == NodeKind::Neg && e.node(r.lhs).kind == NodeKind::Number) return -e.node(r.lhs).number;
    return std::nullopt;
  }

  static Expression child(const Expression& e, std::int32_t i) {
    return Expression(e.nodes_, i, e.vars_, nullptr);
  }
};

Expression::Expression()
    : nodes_(std::make_shared<const std::vector<Node>>(1, Node{})), root_(0), vars_(make_variables({})) {}

Expression::Expression(std::shared_ptr<const std::vector<Node>> nodes, std::int32_t root, VariableList vars,
                       std::shared_ptr<const std::string> source)
    : nodes_(std::move(nodes)), root_(root), vars_(std::move(vars)), source_(std::move(source)) {
  if (!source_) source_ = std::make_shared<const std::string>();
}

Expression Expression::parse(std::string_view text, const VariableList& vars) {
  std::int32_t root = 0;
  Parser p(text, *vars);
  std::vector<Node> nodes = p.run(root);
  return Expression(std::make_shared<const std::vector<Node>>(std::move(nodes)), root, vars,
                    std::make_shared<const std::string>(text));
}

Expression Expression::constant(double value, const VariableList& vars) {
  std::vector<Node> nodes;
  Node lit;
  lit.kind = NodeKind::Number;
  lit.number = std::signbit(value) && value != 0.0 ? -value : value;
  if (value == 0.0) lit.number = 0.0;
  nodes.push_back(lit);
  if (value < 0.0) {
    Node neg;
    neg.kind = NodeKind::Neg;
    neg.lhs = 0;
    nodes.push_back(neg);
  }
  const auto root = static_cast<std::int32_t>(nodes.size() - 1);
  return Expression(std::make_shared<const std::vector<Node>>(std::move(nodes)), root, vars, nullptr);
}

Expression Expression::variable(int index, const VariableList& vars) {
  if (index < 0 || static_cast<std::size_t>(index) >= vars->size())
    throw Error(ErrorCode::UnknownVariable, "variable slot " + std::to_string(index) + " out of range");
  Node n;
  n.kind = NodeKind::Variable;
  n.var = index;
  return Expression(std::make_shared<const std::vector<Node>>(1, n), 0, vars, nullptr);
}

void Expression::domain_failure(const char* what, const Node& n) const {
  std::string msg = what;
  if (n.offset != kNoOffset && !source_->empty()) {
    msg += " in '" + source_->substr(n.offset, n.length) + "' at offset " + std::to_string(n.offset);
  } else {
    msg += " in '" + ExprBuilder::child(*this, static_cast<std::int32_t>(&n - nodes_->data())).to_string() + "'";
  }
  throw DomainError(msg, n.offset, n.length);
}

namespace {

int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub: return 1;
    case NodeKind::Mul:
    case NodeKind::Div: return 2;
    case NodeKind::Neg: return 3;
    case NodeKind::Pow: return 4;
    default: return 5;
  }
}

void print(const Expression& e, std::int32_t i, int min_prec, std::string& out) {
  const Node& n = e.node(i);
  const bool paren = precedence(n.kind) < min_prec;
  if (paren) out += '(';
  switch (n.kind) {
    case NodeKind::Number: out += format_number(n.number); break;
    case NodeKind::Variable: out += (*e.variables())[static_cast<std::size_t>(n.var)]; break;
    case NodeKind::Add:
    case NodeKind::Sub: {
      print(e, n.lhs, 1, out);
      // a - (-c)*b prints as a + c*b.
      const Node& r = e.node(n.rhs);
      std::optional<double> c;
      if (r.kind == NodeKind::Mul || r.kind == NodeKind::Div) {
        const Node& f = e.node(r.lhs);
        if (f.kind == NodeKind::Number && f.number < 0.0) c = -f.number;
        if (f.kind == NodeKind::Neg && e.node(f.lhs).kind == NodeKind::Number) c = e.node(f.lhs).number;
      }
      const bool flip = c && *c >= 0.0;
      out += (n.kind == NodeKind::Add) != flip ? " + " : " - ";
      if (flip) {
        out += format_number(*c);
        out += r.kind == NodeKind::Mul ? "*" : "/";
        print(e, r.rhs, 3, out);
      } else {
        print(e, n.rhs, 2, out);
      }
      break;
    }
    case NodeKind::Mul:
    case NodeKind::Div:
      print(e, n.lhs, 2, out);
      out += n.kind == NodeKind::Mul ? "*" : "/";
      print(e, n.rhs, 3, out);
      break;
    case NodeKind::Neg:
      out += '-';
      print(e, n.lhs, 3, out);
      break;
    case NodeKind::Pow:
      print(e, n.lhs, 5, out);
      out += '^';
      print(e, n.rhs, 3, out);
      break;
    case NodeKind::Call:
      out += function_name(n.fn);
      out += '(';
      print(e, n.lhs, 0, out);
      out += ')';
      break;
  }
  if (paren) out += ')';
}

bool equal_nodes(const Expression& a, std::int32_t i, const Expression& b, std::int32_t j) {
  const Node& x = a.node(i);
  const Node& y = b.node(j);
  if (x.kind != y.kind) return false;
  switch (x.kind) {
    case NodeKind::Number: return x.number == y.number || (std::isnan(x.number) && std::isnan(y.number));
    case NodeKind::Variable: return x.var == y.var;
    case NodeKind::Call: return x.fn == y.fn && equal_nodes(a, x.lhs, b, y.lhs);
    case NodeKind::Neg: return equal_nodes(a, x.lhs, b, y.lhs);
    case NodeKind::Pow:
      if (x.int_exponent != y.int_exponent || x.exponent != y.exponent) return false;
      [[fallthrough]];
    default: return equal_nodes(a, x.lhs, b, y.lhs) && equal_nodes(a, x.rhs, b, y.rhs);
  }
}

bool subtree_uses(const Expression& e, std::int32_t i, int var) {
  const Node& n = e.node(i);
  if (n.kind == NodeKind::Variable) return var < 0 || n.var == var;
  if (n.kind == NodeKind::Pow && n.int_exponent) return subtree_uses(e, n.lhs, var);
  return (n.lhs >= 0 && subtree_uses(e, n.lhs, var)) || (n.rhs >= 0 && subtree_uses(e, n.rhs, var));
}

}  // namespace

std::string Expression::to_string() const {
  std::string out;
  print(*this, root_, 0, out);
  return out;
}

bool Expression::structurally_equal(const Expression& other) const {
  return equal_nodes(*this, root_, other, other.root_);
}

bool Expression::is_constant() const { return !subtree_uses(*this, root_, -1); }

bool Expression::is_zero() const {
  const auto v = ExprBuilder::literal(*this);
  return v && *v == 0.0;
}

bool Expression::uses_variable(int index) const { return subtree_uses(*this, root_, index); }

Expression operator+(const Expression& a, const Expression& b) {
  const auto la = ExprBuilder::literal(a), lb = ExprBuilder::literal(b);
  if (la && lb) return Expression::constant(*la + *lb, a.variables());
  if (la && *la == 0.0) return b;
  if (lb && *lb == 0.0) return a;
  if (lb && *lb < 0.0) return ExprBuilder::binary(NodeKind::Sub, a, Expression::constant(-*lb, a.variables()));
  return ExprBuilder::binary(NodeKind::Add, a, b);
}

Expression operator-(const Expression& a, const Expression& b) {
  const auto la = ExprBuilder::literal(a), lb = ExprBuilder::literal(b);
  if (la && lb) return Expression::constant(*la - *lb, a.variables());
  if (lb && *lb == 0.0) return a;
  if (la && *la == 0.0) return -b;
  if (lb && *lb < 0.0) return ExprBuilder::binary(NodeKind::Add, a, Expression::constant(-*lb, a.variables()));
  return ExprBuilder::binary(NodeKind::Sub, a, b);
}

Expression operator*(const Expression& a, const Expression& b) {
  const auto la = ExprBuilder::literal(a), lb = ExprBuilder::literal(b);
  if (la && lb) return Expression::constant(*la * *lb, a.variables());
  if ((la && *la == 0.0) || (lb && *lb == 0.0)) return Expression::constant(0.0, a.variables());
  if (la && *la == 1.0) return b;
  if (lb && *lb == 1.0) return a;
  if (la && *la == -1.0) return -b;
  if (lb && *lb == -1.0) return -a;
  return ExprBuilder::binary(NodeKind::Mul, a, b);
}

Expression operator/(const Expression& a, const Expression& b) {
  const auto la = ExprBuilder::literal(a), lb = ExprBuilder::literal(b);
  if (la && lb && *lb != 0.0) return Expression::constant(*la / *lb, a.variables());
  if (la && *la == 0.0) return a;
  if (lb && *lb == 1.0) return a;
  return ExprBuilder::binary(NodeKind::Div, a, b);
}

Expression operator-(const Expression& a) {
  if (const auto la = ExprBuilder::literal(a)) return Expression::constant(-*la, a.variables());
  if (a.root().kind == NodeKind::Neg) return ExprBuilder::child(a, a.root().lhs);
  return ExprBuilder::unary(NodeKind::Neg, a);
}

Expression operator+(const Expression& a, double b) { return a + Expression::constant(b, a.variables()); }
Expression operator*(double a, const Expression& b) { return Expression::constant(a, b.variables()) * b; }

Expression call(Function f, const Expression& a) { return ExprBuilder::unary(NodeKind::Call, a, f); }

Expression powi(const Expression& a, long n) {
  if (n == 0) return Expression::constant(1.0, a.variables());
  if (n == 1) return a;
  return ExprBuilder::int_pow(a, n);
}

Expression pow(const Expression& a, const Expression& b) {
  if (const auto lb = ExprBuilder::literal(b); lb && std::floor(*lb) == *lb && std::abs(*lb) < 2147483647.0)
    return powi(a, static_cast<long>(*lb));
  return ExprBuilder::binary(NodeKind::Pow, a, b);
}

Expression differentiate(const Expression& e, int var) {
  const VariableList& vars = e.variables();
  const Node& n = e.root();
  auto sub = [&](std::int32_t i) { return ExprBuilder::child(e, i); };
  auto one = [&](double v) { return Expression::constant(v, vars); };
  switch (n.kind) {
    case NodeKind::Number: return one(0.0);
    case NodeKind::Variable: return one(n.var == var ? 1.0 : 0.0);
    case NodeKind::Add: return differentiate(sub(n.lhs), var) + differentiate(sub(n.rhs), var);
    case NodeKind::Sub: return differentiate(sub(n.lhs), var) - differentiate(sub(n.rhs), var);
    case NodeKind::Mul: {
      const Expression a = sub(n.lhs), b = sub(n.rhs);
      return differentiate(a, var) * b + a * differentiate(b, var);
    }
    case NodeKind::Div: {
      const Expression a = sub(n.lhs), b = sub(n.rhs);
      const Expression db = differentiate(b, var);
      if (db.is_zero()) return differentiate(a, var) / b;
      return differentiate(a, var) / b - a * db / powi(b, 2);
    }
    case NodeKind::Neg: return -differentiate(sub(n.lhs), var);
    case NodeKind::Pow: {
      const Expression a = sub(n.lhs);
      const Expression da = differentiate(a, var);
      if (n.int_exponent) {
        if (da.is_zero()) return one(0.0);
        return one(static_cast<double>(n.exponent)) * powi(a, n.exponent - 1) * da;
      }
      const Expression b = sub(n.rhs);
      const Expression db = differentiate(b, var);
      if (da.is_zero() && db.is_zero()) return one(0.0);
      return ExprBuilder::child(e, e.root_) * (db * call(Function::Log, a) + b * da / a);
    }
    case NodeKind::Call: {
      const Expression a = sub(n.lhs);
      const Expression da = differentiate(a, var);
      if (da.is_zero()) return one(0.0);
      switch (n.fn) {
        case Function::Sin: return call(Function::Cos, a) * da;
        case Function::Cos: return -(call(Function::Sin, a) * da);
        case Function::Tan: return da / powi(call(Function::Cos, a), 2);
        case Function::Exp: return ExprBuilder::child(e, e.root_) * da;
        case Function::Log: return da / a;
        case Function::Sqrt: return da / (one(2.0) * ExprBuilder::child(e, e.root_));
        case Function::Sinh: return call(Function::Cosh, a) * da;
        case Function::Cosh: return call(Function::Sinh, a) * da;
        case Function::Tanh: return (one(1.0) - powi(ExprBuilder::child(e, e.root_), 2)) * da;
        case Function::Atan: return da / (one(1.0) + powi(a, 2));
      }
    }
  }
  return one(0.0);
}

Expression substitute(const Expression& e, const std::vector<Expression>& repl) {
  if (repl.empty()) return e;
  if (repl.size() < e.variables()->size())
    throw Error(ErrorCode::Config, "substitution needs one replacement per variable");
  for (const auto& r : repl)
    if (!same_variables(r.variables(), repl.front().variables()))
      throw Error(ErrorCode::Config, "substitution replacements must share a variable list");
  return ExprBuilder::subst(e, repl);
}

double derive1(const Expression& e, std::span<const double> x, std::size_t i) {
  return derive1([&](std::span<const Dual> env) { return e.eval(env); }, x, i);
}

double derive2(const Expression& e, std::span<const double> x, std::size_t i, std::size_t j) {
  return derive2([&](std::span<const HyperDual> env) { return e.eval(env); }, x, i, j);
}

double fd_check(const Expression& e, std::span<const double> x, std::size_t i, double h) {
  return fd_check([&](std::span<const double> env) { return e.eval(env); }, x, i, h);
}

}  // namespace nframes
