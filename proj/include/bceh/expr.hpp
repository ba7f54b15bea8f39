#pragma once

// Expression trees over x1..xm for user-supplied functions.
//
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | atom ("^" atom)?
//   atom   := number | var | func "(" expr ("," expr)* ")" | "(" expr ")"
//   var    := "x" digit+
//   func   := abs | sqrt | exp | log | atan | min | max

#include <bceh/error.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bceh {

enum class ExprKind { Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Abs, Sqrt, Exp, Log, Atan, Min, Max };

struct ExprNode {
  ExprKind kind = ExprKind::Number;
  double number = 0.0;
  int variable = 0;  // zero-based
  std::vector<std::shared_ptr<const ExprNode>> args;
};

using ExprPtr = std::shared_ptr<const ExprNode>;

namespace detail {

inline const char* func_name(ExprKind k) {
  switch (k) {
    case ExprKind::Abs: return "abs";
    case ExprKind::Sqrt: return "sqrt";
    case ExprKind::Exp: return "exp";
    case ExprKind::Log: return "log";
    case ExprKind::Atan: return "atan";
    case ExprKind::Min: return "min";
    case ExprKind::Max: return "max";
    default: return nullptr;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  ExprPtr parse() {
    auto e = expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError("unexpected character '" + std::string(1, src_[pos_]) + "'", pos_);
    return e;
  }

  int max_variable() const { return max_var_; }

 private:
  static ExprPtr make(ExprKind k, std::vector<ExprPtr> args) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->args = std::move(args);
    return n;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
  }

  ExprPtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(ExprKind::Add, {lhs, term()});
      else if (accept('-')) lhs = make(ExprKind::Sub, {lhs, term()});
      else return lhs;
    }
  }

  ExprPtr term() {
    auto lhs = factor();
    for (;;) {
      if (accept('*')) lhs = make(ExprKind::Mul, {lhs, factor()});
      else if (accept('/')) lhs = make(ExprKind::Div, {lhs, factor()});
      else return lhs;
    }
  }

  ExprPtr factor() {
    if (accept('-')) return make(ExprKind::Neg, {factor()});
    auto base = atom();
    if (accept('^')) return make(ExprKind::Pow, {base, atom()});
    return base;
  }

  ExprPtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  ExprPtr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        pos_ = p;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    const std::string text(src_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size()) throw ParseError("malformed number '" + text + "'", start);
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Number;
    n->number = v;
    return n;
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::string name(src_.substr(start, pos_ - start));

    if (name.size() > 1 && name[0] == 'x' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const int index = std::stoi(name.substr(1));
      if (index < 1) throw ParseError("variable index must be >= 1 in '" + name + "'", start);
      auto n = std::make_shared<ExprNode>();
      n->kind = ExprKind::Variable;
      n->variable = index - 1;
      max_var_ = std::max(max_var_, index);
      return n;
    }

    static constexpr struct {
      const char* name;
      ExprKind kind;
    } kFuncs[] = {{"abs", ExprKind::Abs},   {"sqrt", ExprKind::Sqrt}, {"exp", ExprKind::Exp}, {"log", ExprKind::Log},
                  {"atan", ExprKind::Atan}, {"min", ExprKind::Min},   {"max", ExprKind::Max}};
    for (const auto& f : kFuncs) {
      if (name != f.name) continue;
      expect('(');
      std::vector<ExprPtr> args{expr()};
      while (accept(',')) args.push_back(expr());
      expect(')');
      const bool variadic = f.kind == ExprKind::Min || f.kind == ExprKind::Max;
      if (variadic ? args.size() < 2 : args.size() != 1)
        throw ParseError("wrong number of arguments to " + name, start);
      return make(f.kind, std::move(args));
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int max_var_ = 0;
};

inline double checked(double v, const char* op) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + op);
  return v;
}

}  // namespace detail

/// Parsed expression: its source, tree and declared dimension.
struct FunctionExpr {
  std::string source;
  ExprPtr ast;
  int dim = 1;
};

/// Parses `source`; `dim` must cover every referenced variable.
inline FunctionExpr parse_expression(std::string_view source, int dim) {
  if (dim < 1) throw PreconditionError("dimension must be positive");
  detail::Parser p(source);
  FunctionExpr out;
  out.source = std::string(source);
  out.ast = p.parse();
  if (p.max_variable() > dim)
    throw ParseError("variable x" + std::to_string(p.max_variable()) + " exceeds dimension " + std::to_string(dim), 0);
  out.dim = dim;
  return out;
}

inline double evaluate(const ExprNode& n, std::span<const double> x) {
  using detail::checked;
  auto arg = [&](std::size_t i) { return evaluate(*n.args[i], x); };
  switch (n.kind) {
    case ExprKind::Number: return n.number;
    case ExprKind::Variable: return x[static_cast<std::size_t>(n.variable)];
    case ExprKind::Add: return checked(arg(0) + arg(1), "+");
    case ExprKind::Sub: return checked(arg(0) - arg(1), "-");
    case ExprKind::Mul: return checked(arg(0) * arg(1), "*");
    case ExprKind::Div: {
      const double d = arg(1);
      if (d == 0.0) throw DomainError("division by zero");
      return checked(arg(0) / d, "/");
    }
    case ExprKind::Pow: {
      const double b = arg(0), e = arg(1);
      if (b < 0.0 && e != std::floor(e)) throw DomainError("negative base with non-integer exponent");
      if (b == 0.0 && e < 0.0) throw DomainError("zero to a negative power");
      return checked(std::pow(b, e), "^");
    }
    case ExprKind::Neg: return -arg(0);
    case ExprKind::Abs: return std::fabs(arg(0));
    case ExprKind::Sqrt: {
      const double a = arg(0);
      if (a < 0.0) throw DomainError("sqrt of a negative value");
      return std::sqrt(a);
    }
    case ExprKind::Exp: return checked(std::exp(arg(0)), "exp");
    case ExprKind::Log: {
      const double a = arg(0);
      if (a <= 0.0) throw DomainError("log of a nonpositive value");
      return std::log(a);
    }
    case ExprKind::Atan: return std::atan(arg(0));
    case ExprKind::Min:
    case ExprKind::Max: {
      double v = arg(0);
      for (std::size_t i = 1; i < n.args.size(); ++i)
        v = n.kind == ExprKind::Min ? std::min(v, arg(i)) : std::max(v, arg(i));
      return v;
    }
  }
  throw DomainError("corrupt expression node");
}

/// Value and derivative along `v` at x, by forward-mode differentiation. At a kink of
/// abs/min/max the one-sided derivative in the direction v is returned.
inline std::pair<double, double> evaluate_dual(const ExprNode& n, std::span<const double> x,
                                               std::span<const double> v) {
  using detail::checked;
  auto arg = [&](std::size_t i) { return evaluate_dual(*n.args[i], x, v); };
  auto finite = [](double d) {
    if (!std::isfinite(d)) throw DomainError("derivative is not finite");
    return d;
  };
  switch (n.kind) {
    case ExprKind::Number: return {n.number, 0.0};
    case ExprKind::Variable: {
      const auto i = static_cast<std::size_t>(n.variable);
      return {x[i], v[i]};
    }
    case ExprKind::Add: {
      const auto [a, da] = arg(0);
      const auto [b, db] = arg(1);
      return {checked(a + b, "+"), da + db};
    }
    case ExprKind::Sub: {
      const auto [a, da] = arg(0);
      const auto [b, db] = arg(1);
      return {checked(a - b, "-"), da - db};
    }
    case ExprKind::Mul: {
      const auto [a, da] = arg(0);
      const auto [b, db] = arg(1);
      return {checked(a * b, "*"), finite(da * b + a * db)};
    }
    case ExprKind::Div: {
      const auto [a, da] = arg(0);
      const auto [b, db] = arg(1);
      if (b == 0.0) throw DomainError("division by zero");
      const double q = checked(a / b, "/");
      return {q, finite((da - q * db) / b)};
    }
    case ExprKind::Pow: {
      const auto [b, db] = arg(0);
      const auto [e, de] = arg(1);
      if (b < 0.0 && e != std::floor(e)) throw DomainError("negative base with non-integer exponent");
      if (b == 0.0 && e < 0.0) throw DomainError("zero to a negative power");
      const double p = checked(std::pow(b, e), "^");
      double d = 0.0;
      if (db != 0.0) d += e == 0.0 ? 0.0 : e * std::pow(b, e - 1.0) * db;
      if (de != 0.0) {
        if (!(b > 0.0)) throw DomainError("variable exponent needs a positive base");
        d += p * std::log(b) * de;
      }
      return {p, finite(d)};
    }
    case ExprKind::Neg: {
      const auto [a, da] = arg(0);
      return {-a, -da};
    }
    case ExprKind::Abs: {
      const auto [a, da] = arg(0);
      return {std::fabs(a), a > 0.0 ? da : (a < 0.0 ? -da : std::fabs(da))};
    }
    case ExprKind::Sqrt: {
      const auto [a, da] = arg(0);
      if (a < 0.0) throw DomainError("sqrt of a negative value");
      const double r = std::sqrt(a);
      return {r, da == 0.0 ? 0.0 : finite(da / (2.0 * r))};
    }
    case ExprKind::Exp: {
      const auto [a, da] = arg(0);
      const double e = checked(std::exp(a), "exp");
      return {e, finite(e * da)};
    }
    case ExprKind::Log: {
      const auto [a, da] = arg(0);
      if (a <= 0.0) throw DomainError("log of a nonpositive value");
      return {std::log(a), da / a};
    }
    case ExprKind::Atan: {
      const auto [a, da] = arg(0);
      // 1/(1+a²) without overflow for large |a|
      const double w = std::fabs(a) > 1e150 ? 0.0 : 1.0 / (1.0 + a * a);
      return {std::atan(a), da * w};
    }
    case ExprKind::Min:
    case ExprKind::Max: {
      auto best = arg(0);
      const bool is_max = n.kind == ExprKind::Max;
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        const auto c = arg(i);
        const bool better = is_max ? c.first > best.first : c.first < best.first;
        // ties: the branch that stays active along v
        const bool tie = c.first == best.first && (is_max ? c.second > best.second : c.second < best.second);
        if (better || tie) best = c;
      }
      return best;
    }
  }
  throw DomainError("corrupt expression node");
}

/// Fully parenthesised rendering; reparses to a structurally equal tree.
inline std::string render(const ExprNode& n) {
  auto bin = [&](const char* op) { return "(" + render(*n.args[0]) + op + render(*n.args[1]) + ")"; };
  switch (n.kind) {
    case ExprKind::Number: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", n.number);
      return buf;
    }
    case ExprKind::Variable: return "x" + std::to_string(n.variable + 1);
    case ExprKind::Add: return bin("+");
    case ExprKind::Sub: return bin("-");
    case ExprKind::Mul: return bin("*");
    case ExprKind::Div: return bin("/");
    case ExprKind::Pow: return bin("^");
    case ExprKind::Neg: return "(-" + render(*n.args[0]) + ")";
    default: {
      std::string s = std::string(detail::func_name(n.kind)) + "(";
      for (std::size_t i = 0; i < n.args.size(); ++i) s += (i ? "," : "") + render(*n.args[i]);
      return s + ")";
    }
  }
}

inline bool structurally_equal(const ExprNode& a, const ExprNode& b) {
  if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
  if (a.kind == ExprKind::Number && a.number != b.number) return false;
  if (a.kind == ExprKind::Variable && a.variable != b.variable) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

/// True when the tree contains abs/min/max, i.e. it may have kinks.
inline bool may_be_nonsmooth(const ExprNode& n) {
  if (n.kind == ExprKind::Abs || n.kind == ExprKind::Min || n.kind == ExprKind::Max) return true;
  for (const auto& a : n.args)
    if (may_be_nonsmooth(*a)) return true;
  return false;
}

}  // namespace bceh
