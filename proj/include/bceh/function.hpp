#pragma once

#include <bceh/error.hpp>
#include <bceh/expr.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bceh {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) {
  double big = 0.0;
  for (double c : a) big = std::max(big, std::fabs(c));
  if (big == 0.0 || !std::isfinite(big)) return big;
  double s = 0.0;
  for (double c : a) s += (c / big) * (c / big);
  return big * std::sqrt(s);
}

struct GradientSample {
  Vec g;
  bool nonsmooth = false;  // finite-difference sample taken across a possible kink
};

/// A real function on R^m with optional closed-form gradient. Immutable; cheap to copy.
class ConvexFunction {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradFn = std::function<void(std::span<const double>, std::span<double>)>;

  struct Traits {
    bool radial = false;            // depends on |x| only
    bool may_be_nonsmooth = false;  // kinks possible
    bool certified_convex = false;  // caller assertion
  };

  ConvexFunction() = default;

  ConvexFunction(int dim, std::string descriptor, ValueFn value, GradFn grad, Traits traits)
      : impl_(std::make_shared<Impl>(Impl{dim, std::move(descriptor), std::move(value), std::move(grad), traits, {}})) {}

  int dim() const { return impl_->dim; }
  const std::string& descriptor() const { return impl_->descriptor; }
  const Traits& traits() const { return impl_->traits; }
  bool has_analytic_gradient() const { return static_cast<bool>(impl_->grad); }
  const std::optional<FunctionExpr>& expression() const { return impl_->expr; }

  /// φ(x); throws DomainError instead of returning NaN or ±inf.
  double operator()(std::span<const double> x) const {
    const double v = impl_->value(x);
    if (!std::isfinite(v)) throw DomainError("non-finite value of " + impl_->descriptor);
    return v;
  }

  double operator()(std::initializer_list<double> x) const { return (*this)(std::span<const double>(x.begin(), x.size())); }

  /// Analytic gradient when attached, else central differences with h = 1e-6·(1+|x|).
  GradientSample gradient(std::span<const double> x) const {
    GradientSample out;
    out.g.assign(static_cast<std::size_t>(dim()), 0.0);
    const bool analytic = static_cast<bool>(impl_->grad);
    if (analytic) {
      impl_->grad(x, out.g);
      if (!impl_->kink_probe || !impl_->traits.may_be_nonsmooth) return out;
    }
    const double h = 1e-6 * (1.0 + norm(x));
    Vec p(x.begin(), x.end());
    const double f0 = (*this)(x);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double xi = p[i];
      p[i] = xi + h;
      const double fp = (*this)(p);
      p[i] = xi - h;
      const double fm = (*this)(p);
      p[i] = xi;
      if (!analytic) out.g[i] = (fp - fm) / (2.0 * h);
      if (impl_->traits.may_be_nonsmooth) {
        const double right = (fp - f0) / h, left = (f0 - fm) / h;
        if (std::fabs(right - left) > 1e-4 * (1.0 + std::fabs(out.g[i]))) out.nonsmooth = true;
      }
    }
    return out;
  }

  /// Directional derivative v·∇φ(x).
  double directional(std::span<const double> x, std::span<const double> v) const { return dot(gradient(x).g, v); }

  ConvexFunction with_expression(FunctionExpr e) const {
    ConvexFunction c = *this;
    auto impl = std::make_shared<Impl>(*impl_);
    impl->expr = std::move(e);
    c.impl_ = std::move(impl);
    return c;
  }

  ConvexFunction with_kink_probe() const {
    ConvexFunction c = *this;
    auto impl = std::make_shared<Impl>(*impl_);
    impl->kink_probe = true;
    c.impl_ = std::move(impl);
    return c;
  }

  ConvexFunction with_traits(Traits t) const {
    ConvexFunction c = *this;
    auto impl = std::make_shared<Impl>(*impl_);
    impl->traits = t;
    c.impl_ = std::move(impl);
    return c;
  }

  explicit operator bool() const { return static_cast<bool>(impl_); }

 private:
  struct Impl {
    int dim;
    std::string descriptor;
    ValueFn value;
    GradFn grad;
    Traits traits;
    std::optional<FunctionExpr> expr;
    bool kink_probe = false;  // finite-difference kink flag on top of the analytic gradient
  };
  std::shared_ptr<const Impl> impl_;
};

/// Parses an expression into a function with a forward-mode gradient.
inline ConvexFunction parse_function(std::string_view source, int dim) {
  FunctionExpr e = parse_expression(source, dim);
  ExprPtr ast = e.ast;
  ConvexFunction::Traits t;
  t.may_be_nonsmooth = may_be_nonsmooth(*ast);
  auto grad = [ast](std::span<const double> x, std::span<double> g) {
    Vec v(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      v[i] = 1.0;
      g[i] = evaluate_dual(*ast, x, v).second;
      v[i] = 0.0;
    }
  };
  ConvexFunction f(dim, "expr:" + e.source, [ast](std::span<const double> x) { return evaluate(*ast, x); }, grad, t);
  const Vec origin(static_cast<std::size_t>(dim), 0.0);
  (void)f(origin);  // must be finite at the origin
  return f.with_expression(std::move(e)).with_kink_probe();
}

namespace detail {

inline double arctan_primitive_value(double x) {
  // (2/π)(x·atan x − ½·log(1+x²)); the log is split for large |x| to avoid overflow.
  const double ax = std::fabs(x);
  const double half_log = ax > 1e8 ? std::log(ax) + 0.5 * std::log1p(1.0 / (x * x)) : 0.5 * std::log1p(x * x);
  return 2.0 / std::numbers::pi * (x * std::atan(x) - half_log);
}

inline std::string param_string(std::span<const double> params) {
  std::string s;
  for (std::size_t i = 0; i < params.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", params[i]);
    s += (i ? "," : "") + std::string(buf);
  }
  return s;
}

}  // namespace detail

/// Builtin catalog: parabola[a], truncated_cone[c], hyperbola, arctan_primitive, radial_power[p].
inline ConvexFunction builtin(const std::string& name, std::span<const double> params, int dim = 1) {
  if (dim < 1) throw PreconditionError("dimension must be positive");
  auto want = [&](std::size_t n) {
    if (params.size() != n)
      throw PreconditionError("builtin " + name + " takes " + std::to_string(n) + " parameter(s), got " +
                              std::to_string(params.size()));
  };
  const std::string desc = name + "[" + detail::param_string(params) + "]";
  ConvexFunction::Traits radial{.radial = true, .may_be_nonsmooth = false, .certified_convex = true};

  if (name == "parabola") {
    want(1);
    const double a = params[0];
    return {dim, desc, [a](std::span<const double> x) { return a * dot(x, x); },
            [a](std::span<const double> x, std::span<double> g) {
              for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * a * x[i];
            },
            radial};
  }
  if (name == "truncated_cone") {
    want(1);
    const double c = params[0];
    ConvexFunction::Traits t = radial;
    t.may_be_nonsmooth = true;
    return {dim, desc, [c](std::span<const double> x) { return std::max(0.0, norm(x) - c); },
            [c](std::span<const double> x, std::span<double> g) {
              const double r = norm(x);
              for (std::size_t i = 0; i < x.size(); ++i) g[i] = r > c && r > 0.0 ? x[i] / r : 0.0;
            },
            t};
  }
  if (name == "hyperbola") {
    want(0);
    return {dim, desc, [](std::span<const double> x) { return std::sqrt(1.0 + dot(x, x)); },
            [](std::span<const double> x, std::span<double> g) {
              const double s = std::sqrt(1.0 + dot(x, x));
              for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / s;
            },
            radial};
  }
  if (name == "arctan_primitive") {
    want(0);
    if (dim != 1) throw PreconditionError("arctan_primitive is defined for dimension 1 only");
    return {1, desc, [](std::span<const double> x) { return detail::arctan_primitive_value(x[0]); },
            [](std::span<const double> x, std::span<double> g) { g[0] = 2.0 / std::numbers::pi * std::atan(x[0]); },
            radial};
  }
  if (name == "radial_power") {
    want(1);
    const double p = params[0];
    if (!(p >= 1.0)) throw PreconditionError("radial_power requires p >= 1");
    ConvexFunction::Traits t = radial;
    t.may_be_nonsmooth = p == 1.0;
    return {dim, desc, [p](std::span<const double> x) { return std::pow(norm(x), p); },
            [p](std::span<const double> x, std::span<double> g) {
              const double r = norm(x);
              for (std::size_t i = 0; i < x.size(); ++i) g[i] = r > 0.0 ? p * std::pow(r, p - 2.0) * x[i] : 0.0;
            },
            t};
  }
  throw PreconditionError("unknown builtin '" + name + "'");
}

inline ConvexFunction builtin(const std::string& name, std::initializer_list<double> params = {}, int dim = 1) {
  return builtin(name, std::span<const double>(params.begin(), params.size()), dim);
}

/// "name" or "name:p1,p2,..." as accepted on the command line.
inline ConvexFunction builtin_from_spec(const std::string& spec, int dim = 1) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::vector<double> params;
  if (colon != std::string::npos) {
    std::string rest = spec.substr(colon + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const auto comma = rest.find(',', start);
      const std::string item = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      char* end = nullptr;
      const double v = std::strtod(item.c_str(), &end);
      if (item.empty() || end != item.c_str() + item.size())
        throw ParseError("malformed builtin parameter '" + item + "'", colon + 1 + start);
      params.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return builtin(name, params, dim);
}

/// Catalog names, in a fixed order.
inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"parabola", "truncated_cone", "hyperbola", "arctan_primitive",
                                              "radial_power"};
  return names;
}

/// φ + c.
inline ConvexFunction translate(const ConvexFunction& f, double c) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", c);
  ConvexFunction::GradFn grad;
  if (f.has_analytic_gradient())
    grad = [f](std::span<const double> x, std::span<double> g) {
      auto s = f.gradient(x);
      std::copy(s.g.begin(), s.g.end(), g.begin());
    };
  return {f.dim(), "(" + f.descriptor() + ")+" + buf, [f, c](std::span<const double> x) { return f(x) + c; }, grad,
          f.traits()};
}

/// x ↦ φ(λx).
inline ConvexFunction scale_argument(const ConvexFunction& f, double lambda) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", lambda);
  auto scaled = [lambda](std::span<const double> x) {
    Vec y(x.begin(), x.end());
    for (auto& v : y) v *= lambda;
    return y;
  };
  ConvexFunction::GradFn grad;
  if (f.has_analytic_gradient())
    grad = [f, lambda, scaled](std::span<const double> x, std::span<double> g) {
      auto s = f.gradient(scaled(x));
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = lambda * s.g[i];
    };
  return {f.dim(), f.descriptor() + "(" + buf + "x)", [f, scaled](std::span<const double> x) { return f(scaled(x)); },
          grad, f.traits()};
}

/// φ + ψ.
inline ConvexFunction sum(const ConvexFunction& f, const ConvexFunction& g) {
  if (f.dim() != g.dim()) throw PreconditionError("dimension mismatch in sum");
  ConvexFunction::GradFn grad;
  if (f.has_analytic_gradient() && g.has_analytic_gradient())
    grad = [f, g](std::span<const double> x, std::span<double> out) {
      auto a = f.gradient(x), b = g.gradient(x);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.g[i] + b.g[i];
    };
  ConvexFunction::Traits t{.radial = f.traits().radial && g.traits().radial,
                           .may_be_nonsmooth = f.traits().may_be_nonsmooth || g.traits().may_be_nonsmooth,
                           .certified_convex = f.traits().certified_convex && g.traits().certified_convex};
  return {f.dim(), "(" + f.descriptor() + ")+(" + g.descriptor() + ")",
          [f, g](std::span<const double> x) { return f(x) + g(x); }, grad, t};
}

/// s ↦ φ(origin + s·dir), a function of one variable.
inline ConvexFunction restrict_to_line(const ConvexFunction& f, Vec origin, Vec dir) {
  auto point = [origin, dir](double s) {
    Vec p = origin;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += s * dir[i];
    return p;
  };
  ConvexFunction::Traits t{.radial = false, .may_be_nonsmooth = f.traits().may_be_nonsmooth,
                           .certified_convex = f.traits().certified_convex};
  return {1, f.descriptor() + "|line", [f, point](std::span<const double> s) { return f(point(s[0])); },
          [f, point, dir](std::span<const double> s, std::span<double> g) { g[0] = f.directional(point(s[0]), dir); },
          t};
}

}  // namespace bceh
