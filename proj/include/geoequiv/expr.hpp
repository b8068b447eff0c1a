#pragma once

// Scalar fields on a coordinate chart: an immutable expression tree with
// parsing, printing, evaluation and exact symbolic partial derivatives.
//
// Grammar (whitespace is insignificant):
//
//   expr     := term   { ('+' | '-') term }
//   term     := unary  { ('*' | '/') unary }
//   unary    := ('-' | '+') unary | power
//   power    := atom [ '^' exponent ]
//   exponent := ['-' | '+'] number | '(' expr ')'      (must fold to a constant)
//   atom     := number | coordinate | function '(' expr ')' | '(' expr ')'
//   function := sin | cos | exp | log | sqrt | abs | sgn
//
// `sgn` is not needed in input; it appears in printed derivatives of `abs`.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoequiv/errors.hpp"

namespace geoequiv {

enum class Op : std::uint8_t {
  Const,
  Coord,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Abs,
  Sgn,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

class ScalarExpr {
 public:
  struct Node {
    Op op = Op::Const;
    double value = 0.0;  // constant value, or the exponent for Pow
    std::size_t index = 0;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  ScalarExpr() : ScalarExpr(make(Op::Const, 0.0)) {}

  static ScalarExpr constant(double c) { return ScalarExpr(make(Op::Const, c)); }
  static ScalarExpr coordinate(std::size_t index) {
    auto n = std::make_shared<Node>();
    n->op = Op::Coord;
    n->index = index;
    return ScalarExpr(std::move(n));
  }

  Op op() const noexcept { return node_->op; }
  bool is_constant() const noexcept { return node_->op == Op::Const; }
  bool is_constant(double c) const noexcept { return is_constant() && node_->value == c; }
  bool is_zero() const noexcept { return is_constant(0.0); }
  double constant_value() const noexcept { return node_->value; }
  std::size_t coordinate_index() const noexcept { return node_->index; }
  double exponent() const noexcept { return node_->value; }
  ScalarExpr lhs() const { return ScalarExpr(node_->lhs); }
  ScalarExpr rhs() const { return ScalarExpr(node_->rhs); }
  const Node* node() const noexcept { return node_.get(); }

  /// Evaluates at `point`; throws DomainError outside the domain of a function.
  double evaluate(std::span<const double> point) const { return eval(*node_, point); }

  /// Infix text using `names` for coordinates; parses back to an equal expression.
  std::string to_string(std::span<const std::string> names) const {
    std::string out;
    print(*node_, names, out);
    return out;
  }

  /// Largest coordinate index referenced plus one (0 for constants).
  std::size_t arity() const { return arity_of(*node_); }

  // Smart constructors with constant folding and trivial identities.
  static ScalarExpr unary(Op op, const ScalarExpr& a);
  static ScalarExpr binary(Op op, const ScalarExpr& a, const ScalarExpr& b);
  static ScalarExpr power(const ScalarExpr& a, double exponent);

 private:
  explicit ScalarExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static std::shared_ptr<const Node> make(Op op, double value) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = value;
    return n;
  }

  static double eval(const Node& n, std::span<const double> x);
  static void print(const Node& n, std::span<const std::string> names, std::string& out);
  static std::size_t arity_of(const Node& n) {
    switch (n.op) {
      case Op::Const:
        return 0;
      case Op::Coord:
        return n.index + 1;
      default: {
        std::size_t a = n.lhs ? arity_of(*n.lhs) : 0;
        std::size_t b = n.rhs ? arity_of(*n.rhs) : 0;
        return a > b ? a : b;
      }
    }
  }

  std::shared_ptr<const Node> node_;
};

namespace detail {

inline bool is_unary(Op op) {
  switch (op) {
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Abs:
    case Op::Sgn:
      return true;
    default:
      return false;
  }
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::Sin:
      return "sin";
    case Op::Cos:
      return "cos";
    case Op::Exp:
      return "exp";
    case Op::Log:
      return "log";
    case Op::Sqrt:
      return "sqrt";
    case Op::Abs:
      return "abs";
    case Op::Sgn:
      return "sgn";
    default:
      return "";
  }
}

inline double apply_unary(Op op, double v) {
  switch (op) {
    case Op::Neg:
      return -v;
    case Op::Sin:
      return std::sin(v);
    case Op::Cos:
      return std::cos(v);
    case Op::Exp: {
      double r = std::exp(v);
      if (!std::isfinite(r)) throw DomainError("exp overflow");
      return r;
    }
    case Op::Log:
      if (!(v > 0.0)) throw DomainError("log of non-positive value");
      return std::log(v);
    case Op::Sqrt:
      if (v < 0.0) throw DomainError("sqrt of negative value");
      return std::sqrt(v);
    case Op::Abs:
      return std::fabs(v);
    case Op::Sgn:
      if (v == 0.0) throw DomainError("abs is not differentiable at 0");
      return v > 0.0 ? 1.0 : -1.0;
    default:
      throw ArgumentError("not a unary operator");
  }
}

inline double apply_pow(double base, double e) {
  if (base == 0.0 && e < 0.0) throw DomainError("division by zero in power");
  if (base < 0.0 && e != std::floor(e)) throw DomainError("fractional power of negative value");
  if (e == 2.0) return base * base;
  return std::pow(base, e);
}

inline double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add:
      return a + b;
    case Op::Sub:
      return a - b;
    case Op::Mul:
      return a * b;
    case Op::Div:
      if (b == 0.0) throw DomainError("division by zero");
      return a / b;
    default:
      throw ArgumentError("not a binary operator");
  }
}

inline std::string format_number(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  std::string s(buf.data());
  // shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    std::snprintf(buf.data(), buf.size(), "%.*g", prec, v);
    if (std::strtod(buf.data(), nullptr) == v) {
      s = buf.data();
      break;
    }
  }
  return s;
}

inline int precedence(const ScalarExpr::Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Const:
      return n.value < 0.0 ? 3 : 5;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

}  // namespace detail

inline ScalarExpr ScalarExpr::unary(Op op, const ScalarExpr& a) {
  if (a.is_constant()) {
    try {
      return constant(detail::apply_unary(op, a.constant_value()));
    } catch (const DomainError&) {
      // keep the node so the error surfaces at evaluation time
    }
  }
  if (op == Op::Neg && a.op() == Op::Neg) return a.lhs();
  if (op == Op::Abs && (a.op() == Op::Abs || a.op() == Op::Exp)) return a;
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = a.node_;
  return ScalarExpr(std::move(n));
}

inline ScalarExpr ScalarExpr::binary(Op op, const ScalarExpr& a, const ScalarExpr& b) {
  if (a.is_constant() && b.is_constant()) {
    try {
      return constant(detail::apply_binary(op, a.constant_value(), b.constant_value()));
    } catch (const DomainError&) {
    }
  }
  switch (op) {
    case Op::Add:
      if (a.is_zero()) return b;
      if (b.is_zero()) return a;
      if (b.op() == Op::Neg) return binary(Op::Sub, a, b.lhs());
      break;
    case Op::Sub:
      if (b.is_zero()) return a;
      if (a.is_zero()) return unary(Op::Neg, b);
      if (b.op() == Op::Neg) return binary(Op::Add, a, b.lhs());
      break;
    case Op::Mul:
      if (a.is_zero() || b.is_zero()) return constant(0.0);
      if (a.is_constant(1.0)) return b;
      if (b.is_constant(1.0)) return a;
      if (a.is_constant(-1.0)) return unary(Op::Neg, b);
      if (b.is_constant(-1.0)) return unary(Op::Neg, a);
      if (a.op() == Op::Neg && b.op() == Op::Neg) return binary(Op::Mul, a.lhs(), b.lhs());
      if (a.op() == Op::Neg) return unary(Op::Neg, binary(Op::Mul, a.lhs(), b));
      if (b.op() == Op::Neg) return unary(Op::Neg, binary(Op::Mul, a, b.lhs()));
      break;
    case Op::Div:
      if (a.is_zero() && !b.is_zero()) return constant(0.0);
      if (b.is_constant(1.0)) return a;
      if (b.is_constant(-1.0)) return unary(Op::Neg, a);
      break;
    default:
      throw ArgumentError("not a binary operator");
  }
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = a.node_;
  n->rhs = b.node_;
  return ScalarExpr(std::move(n));
}

inline ScalarExpr ScalarExpr::power(const ScalarExpr& a, double exponent) {
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return a;
  if (a.is_constant()) {
    try {
      return constant(detail::apply_pow(a.constant_value(), exponent));
    } catch (const DomainError&) {
    }
  }
  if (a.op() == Op::Pow) {
    // (f^a)^b = f^(ab) is only safe when a is an odd integer or f >= 0 is implied;
    // restrict to integer outer exponents of positive-integer inner powers.
    double inner = a.exponent();
    if (inner == std::floor(inner) && exponent == std::floor(exponent) && inner > 0 && exponent > 0)
      return power(a.lhs(), inner * exponent);
  }
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->value = exponent;
  n->lhs = a.node_;
  return ScalarExpr(std::move(n));
}

inline double ScalarExpr::eval(const Node& n, std::span<const double> x) {
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Coord:
      if (n.index >= x.size()) throw ArgumentError("coordinate index out of range");
      return x[n.index];
    case Op::Add:
      return eval(*n.lhs, x) + eval(*n.rhs, x);
    case Op::Sub:
      return eval(*n.lhs, x) - eval(*n.rhs, x);
    case Op::Mul:
      return eval(*n.lhs, x) * eval(*n.rhs, x);
    case Op::Div:
      return detail::apply_binary(Op::Div, eval(*n.lhs, x), eval(*n.rhs, x));
    case Op::Pow:
      return detail::apply_pow(eval(*n.lhs, x), n.value);
    default:
      return detail::apply_unary(n.op, eval(*n.lhs, x));
  }
}

inline void ScalarExpr::print(const Node& n, std::span<const std::string> names, std::string& out) {
  auto child = [&](const Node& c, int min_prec) {
    if (detail::precedence(c) < min_prec) {
      out += '(';
      print(c, names, out);
      out += ')';
    } else {
      print(c, names, out);
    }
  };
  switch (n.op) {
    case Op::Const:
      out += detail::format_number(n.value);
      return;
    case Op::Coord:
      if (n.index < names.size())
        out += names[n.index];
      else
        out += "x" + std::to_string(n.index + 1);
      return;
    case Op::Neg:
      out += '-';
      child(*n.lhs, 4);
      return;
    case Op::Add:
      child(*n.lhs, 1);
      out += " + ";
      child(*n.rhs, 2);
      return;
    case Op::Sub:
      child(*n.lhs, 1);
      out += " - ";
      child(*n.rhs, 2);
      return;
    case Op::Mul:
      child(*n.lhs, 2);
      out += '*';
      child(*n.rhs, 3);
      return;
    case Op::Div:
      child(*n.lhs, 2);
      out += '/';
      child(*n.rhs, 4);
      return;
    case Op::Pow: {
      child(*n.lhs, 5);
      out += '^';
      std::string e = detail::format_number(n.value);
      if (n.value < 0.0)
        out += "(" + e + ")";
      else
        out += e;
      return;
    }
    default:
      out += detail::function_name(n.op);
      out += '(';
      print(*n.lhs, names, out);
      out += ')';
      return;
  }
}

// Arithmetic operators.
inline ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(Op::Add, a, b); }
inline ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(Op::Sub, a, b); }
inline ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(Op::Mul, a, b); }
inline ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b) { return ScalarExpr::binary(Op::Div, a, b); }
inline ScalarExpr operator-(const ScalarExpr& a) { return ScalarExpr::unary(Op::Neg, a); }
inline ScalarExpr operator+(const ScalarExpr& a, double b) { return a + ScalarExpr::constant(b); }
inline ScalarExpr operator+(double a, const ScalarExpr& b) { return ScalarExpr::constant(a) + b; }
inline ScalarExpr operator-(const ScalarExpr& a, double b) { return a - ScalarExpr::constant(b); }
inline ScalarExpr operator-(double a, const ScalarExpr& b) { return ScalarExpr::constant(a) - b; }
inline ScalarExpr operator*(const ScalarExpr& a, double b) { return a * ScalarExpr::constant(b); }
inline ScalarExpr operator*(double a, const ScalarExpr& b) { return ScalarExpr::constant(a) * b; }
inline ScalarExpr operator/(const ScalarExpr& a, double b) { return a / ScalarExpr::constant(b); }
inline ScalarExpr operator/(double a, const ScalarExpr& b) { return ScalarExpr::constant(a) / b; }

inline ScalarExpr pow(const ScalarExpr& a, double e) { return ScalarExpr::power(a, e); }
inline ScalarExpr sin(const ScalarExpr& a) { return ScalarExpr::unary(Op::Sin, a); }
inline ScalarExpr cos(const ScalarExpr& a) { return ScalarExpr::unary(Op::Cos, a); }
inline ScalarExpr exp(const ScalarExpr& a) { return ScalarExpr::unary(Op::Exp, a); }
inline ScalarExpr log(const ScalarExpr& a) { return ScalarExpr::unary(Op::Log, a); }
inline ScalarExpr sqrt(const ScalarExpr& a) { return ScalarExpr::unary(Op::Sqrt, a); }
inline ScalarExpr abs(const ScalarExpr& a) { return ScalarExpr::unary(Op::Abs, a); }
inline ScalarExpr sgn(const ScalarExpr& a) { return ScalarExpr::unary(Op::Sgn, a); }

/// Exact partial derivative with respect to coordinate `coord`.
inline ScalarExpr differentiate(const ScalarExpr& e, std::size_t coord) {
  switch (e.op()) {
    case Op::Const:
      return ScalarExpr::constant(0.0);
    case Op::Coord:
      return ScalarExpr::constant(e.coordinate_index() == coord ? 1.0 : 0.0);
    case Op::Sgn:
      return ScalarExpr::constant(0.0);
    case Op::Add:
      return differentiate(e.lhs(), coord) + differentiate(e.rhs(), coord);
    case Op::Sub:
      return differentiate(e.lhs(), coord) - differentiate(e.rhs(), coord);
    case Op::Mul: {
      ScalarExpr f = e.lhs(), g = e.rhs();
      return differentiate(f, coord) * g + f * differentiate(g, coord);
    }
    case Op::Div: {
      ScalarExpr f = e.lhs(), g = e.rhs();
      ScalarExpr df = differentiate(f, coord), dg = differentiate(g, coord);
      return df / g - f * dg / pow(g, 2.0);
    }
    case Op::Pow: {
      ScalarExpr f = e.lhs();
      double c = e.exponent();
      return c * pow(f, c - 1.0) * differentiate(f, coord);
    }
    default:
      break;
  }
  ScalarExpr f = e.lhs();
  ScalarExpr df = differentiate(f, coord);
  if (df.is_zero()) return ScalarExpr::constant(0.0);
  switch (e.op()) {
    case Op::Neg:
      return -df;
    case Op::Sin:
      return cos(f) * df;
    case Op::Cos:
      return -(sin(f) * df);
    case Op::Exp:
      return e * df;
    case Op::Log:
      return df / f;
    case Op::Sqrt:
      return df / (2.0 * e);
    case Op::Abs:
      return sgn(f) * df;
    default:
      throw ArgumentError("unknown operator in differentiate");
  }
}

/// Replaces every coordinate i by `replacements[i]` (composition f(g_1, ..., g_k)).
inline ScalarExpr substitute(const ScalarExpr& e, std::span<const ScalarExpr> replacements) {
  switch (e.op()) {
    case Op::Const:
      return e;
    case Op::Coord:
      if (e.coordinate_index() >= replacements.size())
        throw ArgumentError("substitute: no replacement for coordinate " +
                            std::to_string(e.coordinate_index()));
      return replacements[e.coordinate_index()];
    case Op::Pow:
      return pow(substitute(e.lhs(), replacements), e.exponent());
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return ScalarExpr::binary(e.op(), substitute(e.lhs(), replacements), substitute(e.rhs(), replacements));
    default:
      return ScalarExpr::unary(e.op(), substitute(e.lhs(), replacements));
  }
}

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, std::span<const std::string> coords) : text_(text), coords_(coords) {}

  ScalarExpr parse() {
    ScalarExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError("syntax error: " + what, pos_); }

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

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  ScalarExpr expr() {
    ScalarExpr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = lhs + term();
      else if (accept('-'))
        lhs = lhs - term();
      else
        return lhs;
    }
  }

  ScalarExpr term() {
    ScalarExpr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = lhs * unary();
      else if (accept('/'))
        lhs = lhs / unary();
      else
        return lhs;
    }
  }

  ScalarExpr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  ScalarExpr power() {
    ScalarExpr base = atom();
    if (accept('^')) return pow(base, exponent());
    return base;
  }

  double exponent() {
    skip_ws();
    std::size_t start = pos_;
    if (accept('(')) {
      ScalarExpr e = expr();
      expect(')');
      if (!e.is_constant()) {
        pos_ = start;
        fail("exponent must be a numeric constant");
      }
      return e.constant_value();
    }
    double sign = 1.0;
    if (accept('-'))
      sign = -1.0;
    else
      accept('+');
    skip_ws();
    if (pos_ >= text_.size() || !(std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      fail("exponent must be a numeric literal");
    return sign * number();
  }

  double number() {
    double v = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr == first) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  ScalarExpr atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return ScalarExpr::constant(number());
    if (accept('(')) {
      ScalarExpr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      for (std::size_t i = 0; i < coords_.size(); ++i)
        if (coords_[i] == name) return ScalarExpr::coordinate(i);
      static constexpr std::array<Op, 7> funcs{Op::Sin, Op::Cos, Op::Exp, Op::Log, Op::Sqrt, Op::Abs, Op::Sgn};
      for (Op f : funcs) {
        if (name == function_name(f)) return call(f, name, start);
      }
      pos_ = start;
      throw ParseError("unknown identifier '" + name + "'", start);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  ScalarExpr call(Op f, const std::string& name, std::size_t start) {
    if (!accept('(')) {
      pos_ = start;
      throw ParseError("function '" + name + "' requires an argument list", start);
    }
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ')')
      throw ParseError("arity error: '" + name + "' takes exactly 1 argument, got 0", pos_);
    ScalarExpr arg = expr();
    if (accept(',')) {
      std::size_t where = pos_;
      throw ParseError("arity error: '" + name + "' takes exactly 1 argument", where);
    }
    expect(')');
    return ScalarExpr::unary(f, arg);
  }

  std::string_view text_;
  std::span<const std::string> coords_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses infix text over the ordered coordinate names `coords`.
inline ScalarExpr parse(std::string_view text, std::span<const std::string> coords) {
  return detail::Parser(text, coords).parse();
}

inline ScalarExpr parse(std::string_view text, const std::vector<std::string>& coords) {
  return parse(text, std::span<const std::string>(coords.data(), coords.size()));
}

}  // namespace geoequiv
