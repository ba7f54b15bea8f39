#pragma once

#include <bceh/error.hpp>
#include <bceh/extended_real.hpp>
#include <bceh/function.hpp>
#include <bceh/numerics.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bceh {

/// Unit vector, normalised on construction to 1e-12.
class Direction {
 public:
  explicit Direction(Vec v) : v_(std::move(v)) {
    const double n = norm(v_);
    if (!(n > 0.0) || !std::isfinite(n)) throw PreconditionError("zero or non-finite direction");
    for (auto& c : v_) c /= n;
  }
  Direction(std::initializer_list<double> v) : Direction(Vec(v)) {}

  const Vec& vec() const { return v_; }
  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  operator std::span<const double>() const { return v_; }  // NOLINT(google-explicit-constructor)

 private:
  Vec v_;
};

/// E_φ = {(x, y) : y ≥ φ(x)} in R^{m+1}, y last.
struct Epigraph {
  ConvexFunction phi;

  int ambient_dim() const { return phi.dim() + 1; }

  bool contains(std::span<const double> point) const {
    const std::span<const double> x = point.first(static_cast<std::size_t>(phi.dim()));
    const double y = point.back();
    return y >= phi(x) - 1e-12 * (1.0 + std::fabs(y));
  }
};

enum class Status { Holds, Fails, Inconclusive };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Holds: return "holds";
    case Status::Fails: return "fails";
    case Status::Inconclusive: return "inconclusive";
  }
  return "?";
}

/// Three-valued outcome; a failure always carries a witness.
struct Verdict {
  Status status = Status::Inconclusive;
  std::optional<Vec> witness;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> notes;

  static Verdict holds() { return Verdict{Status::Holds, std::nullopt, {}, {}}; }
  static Verdict fails(Vec witness) { return Verdict{Status::Fails, std::move(witness), {}, {}}; }
  static Verdict inconclusive(std::string why) { return Verdict{Status::Inconclusive, std::nullopt, {}, {std::move(why)}}; }

  bool ok() const { return status == Status::Holds; }
};

struct GridSpec {
  double radius = 1e3;
  double step = 1e-2;
  int refinement_levels = 3;  // each refines the step by 10x around the incumbent
};

/// Deterministic 64-bit generator used by every statistical check.
using Rng = std::mt19937_64;

/// Uniform sample from the closed ball of given radius in R^m.
inline Vec sample_ball(Rng& rng, int m, double radius) {
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec v(static_cast<std::size_t>(m));
  double n = 0.0;
  do {
    for (auto& c : v) c = gauss(rng);
    n = norm(v);
  } while (n == 0.0);
  const double r = radius * std::pow(unit(rng), 1.0 / m);
  for (auto& c : v) c *= r / n;
  return v;
}

/// Default direction count: ±e1 for m=1, 64 for m=2, 512 for m=3, else 2^m·64 capped at 4096.
inline int default_direction_count(int m) {
  if (m == 1) return 2;
  if (m == 2) return 64;
  if (m == 3) return 512;
  return static_cast<int>(std::min<std::int64_t>(4096, (std::int64_t{1} << std::min(m, 20)) * 64));
}

/// Direction sweep over S^{m-1}: equispaced circle for m=2, Fibonacci sphere for m=3,
/// seeded Gaussian directions beyond. Order is fixed for a given (m, count).
inline std::vector<Direction> sphere_directions(int m, int count = 0) {
  if (count <= 0) count = default_direction_count(m);
  std::vector<Direction> out;
  if (m == 1) {
    out.emplace_back(Vec{1.0});
    out.emplace_back(Vec{-1.0});
    return out;
  }
  out.reserve(static_cast<std::size_t>(count));
  if (m == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = 2.0 * std::numbers::pi * i / count;
      out.emplace_back(Vec{std::cos(a), std::sin(a)});
    }
    return out;
  }
  if (m == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / count;
      const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * i;
      out.emplace_back(Vec{rr * std::cos(a), rr * std::sin(a), z});
    }
    return out;
  }
  Rng rng(0x5eed);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < count; ++i) {
    Vec v(static_cast<std::size_t>(m));
    for (auto& c : v) c = gauss(rng);
    out.emplace_back(std::move(v));
  }
  return out;
}

/// φ(x), rejecting non-finite input.
inline double evaluate(const ConvexFunction& f, std::span<const double> x) {
  for (double c : x)
    if (!std::isfinite(c)) throw PreconditionError("evaluation point is not finite");
  if (x.size() != static_cast<std::size_t>(f.dim())) throw PreconditionError("evaluation point has wrong dimension");
  return f(x);
}

inline GradientSample gradient(const ConvexFunction& f, std::span<const double> x) {
  for (double c : x)
    if (!std::isfinite(c)) throw PreconditionError("gradient point is not finite");
  return f.gradient(x);
}

/// Random-pair midpoint test of (strict) convexity on the ball of given radius.
/// A failure's witness is a concatenation (a, b, t).
inline Verdict convexity_check(const ConvexFunction& f, double radius, int samples, bool strict,
                               std::uint64_t seed = 42) {
  if (!(radius > 0.0)) throw PreconditionError("convexity_check radius must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int m = f.dim();
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const Vec a = sample_ball(rng, m, radius), b = sample_ball(rng, m, radius);
    double t = unit(rng);
    if (t <= 0.0 || t >= 1.0) t = 0.5;
    Vec mid(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) mid[k] = t * a[k] + (1.0 - t) * b[k];
    const double fa = f(a), fb = f(b), fm = f(mid);
    const double rhs = t * fa + (1.0 - t) * fb;
    const double scale = 1.0 + std::fabs(fa) + std::fabs(fb);
    const double excess = fm - rhs;
    worst = std::max(worst, excess / scale);
    const bool violated = strict ? excess >= -1e-12 * scale : excess > 1e-12 * scale;
    if (violated) {
      Vec w = a;
      w.insert(w.end(), b.begin(), b.end());
      w.push_back(t);
      Verdict v = Verdict::fails(std::move(w));
      v.diagnostics["excess"] = excess;
      v.diagnostics["sample_index"] = i;
      return v;
    }
  }
  Verdict v = Verdict::holds();
  v.diagnostics["worst_relative_excess"] = worst;
  v.diagnostics["samples"] = samples;
  return v;
}

namespace detail {

/// Maximises a·x − φ(x) over {s·dir : |s| ≤ R, s ∈ hZ}, then refines by compass search.
inline ExtendedReal conjugate_sweep(const ConvexFunction& f, std::span<const double> slope, const Vec& dir,
                                    const GridSpec& grid) {
  const std::size_t m = slope.size();
  auto objective = [&](std::span<const double> x) { return dot(slope, x) - f(x); };
  auto along = [&](double s) {
    Vec x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = s * dir[i];
    return x;
  };

  const auto n = static_cast<long>(std::floor(grid.radius / grid.step));
  double best = -std::numeric_limits<double>::infinity();
  long best_i = 0;
  for (long i = -n; i <= n; ++i) {
    const double v = objective(along(static_cast<double>(i) * grid.step));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  if (n > 0 && (best_i == n || best_i == -n)) {
    const double edge = static_cast<double>(best_i) * grid.step;
    const double outward = edge + (best_i > 0 ? grid.step : -grid.step);
    if (objective(along(outward)) > best) {
      // walk out by decades; still increasing at 1e15·R means +∞
      auto ray = [&](double s) { return objective(along(s)); };
      double prev = edge, cur = edge, vcur = best;
      for (int k = 1; k <= 15; ++k) {
        const double next = edge * std::pow(10.0, k);
        const double vnext = ray(next);
        if (!(vnext > vcur + 1e-9 * (1.0 + std::fabs(vcur)))) {
          const double v = golden_max(ray, std::min(prev, next), std::max(prev, next)).second;
          return std::max({v, vcur, vnext});
        }
        prev = cur;
        cur = next;
        vcur = vnext;
      }
      return ExtendedReal::infinity();
    }
  }

  Vec x = along(static_cast<double>(best_i) * grid.step);
  double h = grid.step;
  for (int level = 0; level <= grid.refinement_levels; ++level) {
    if (level > 0) h /= 10.0;
    for (int iter = 0; iter < 200; ++iter) {
      bool improved = false;
      for (std::size_t k = 0; k < m; ++k) {
        for (double sgn : {1.0, -1.0}) {
          Vec y = x;
          y[k] += sgn * h;
          if (norm(y) > grid.radius) continue;
          const double v = objective(y);
          if (v > best) {
            best = v;
            x = std::move(y);
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }
  return best;
}

}  // namespace detail

/// φ*(a) = sup_x (a·x − φ(x)) on a grid. A maximiser on the grid boundary is followed
/// outward by decades; +∞ marker when the objective still increases at 1e15 times the
/// radius. For m > 1 the sweep follows the ray through the slope direction before a local compass refinement.
inline ExtendedReal legendre_conjugate(const ConvexFunction& f, std::span<const double> slope, const GridSpec& grid = {}) {
  if (slope.size() != static_cast<std::size_t>(f.dim())) throw PreconditionError("slope has wrong dimension");
  if (!(grid.radius > 0.0 && grid.step > 0.0)) throw PreconditionError("grid radius and step must be positive");
  Vec dir(slope.begin(), slope.end());
  const double n = norm(dir);
  if (n > 0.0) {
    for (auto& c : dir) c /= n;
  } else {
    std::fill(dir.begin(), dir.end(), 0.0);
    dir[0] = 1.0;
  }
  return detail::conjugate_sweep(f, slope, dir, grid);
}

inline ExtendedReal legendre_conjugate(const ConvexFunction& f, std::initializer_list<double> slope,
                                       const GridSpec& grid = {}) {
  return legendre_conjugate(f, std::span<const double>(slope.begin(), slope.size()), grid);
}

/// σ_E(u) = sup{z·u : z ∈ E}; for u_y < 0 this is −u_y·φ*(−u_x/u_y), otherwise +∞.
inline ExtendedReal support_function(const Epigraph& E, const Direction& u, const GridSpec& grid = {}) {
  const std::size_t m = static_cast<std::size_t>(E.phi.dim());
  if (u.size() != m + 1) throw PreconditionError("support direction has wrong dimension");
  const double uy = u[m];
  if (uy >= 0.0) return ExtendedReal::infinity();
  Vec slope(m);
  for (std::size_t i = 0; i < m; ++i) slope[i] = -u[i] / uy;
  const ExtendedReal c = legendre_conjugate(E.phi, slope, grid);
  if (c.is_infinite()) return c;
  return -uy * c.value();
}

/// Geometric t-list 1, 2, 4, …, 2^40.
inline std::vector<double> default_schedule() {
  std::vector<double> t;
  for (int k = 0; k <= 40; ++k) t.push_back(std::ldexp(1.0, k));
  return t;
}

struct RecessionConfig {
  double growth_per_decade = 0.01;  // ratio growth beyond this at the far end means +∞
};

/// lim φ(tv)/t estimated over the schedule: the secant slope of the last two entries,
/// or +∞ when φ(tv)/t still grows by more than 1% per decade at the last entry.
inline ExtendedReal recession_slope(const ConvexFunction& f, const Direction& v, std::span<const double> schedule,
                                    const RecessionConfig& cfg = {}) {
  if (schedule.size() < 2) throw PreconditionError("recession schedule needs at least two entries");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] > schedule[i - 1])) throw PreconditionError("recession schedule must be strictly increasing");
  if (schedule.back() < 1e6) throw PreconditionError("recession schedule must reach 1e6");
  auto at = [&](double t) {
    Vec x(v.vec());
    for (auto& c : x) c *= t;
    return f(x);
  };
  const double t1 = schedule.back();
  const double t0 = schedule[schedule.size() - 2];
  const double ratio_last = at(t1) / t1;
  const double t_decade = t1 / 10.0;
  const double ratio_decade = at(t_decade) / t_decade;
  const double growth = ratio_last - ratio_decade;
  if (growth > cfg.growth_per_decade * std::max(std::fabs(ratio_decade), 1e-300) && ratio_last > 0.0 &&
      growth > 1e-12 * std::fabs(ratio_last))
    return ExtendedReal::infinity();
  return (at(t1) - at(t0)) / (t1 - t0);
}

/// 1D conjugate of s ↦ φ(tv) at slope a, found by bisection on the monotone derivative.
/// Returns +∞ when the derivative stays below a out to t = 2^60.
inline ExtendedReal section_conjugate(const ConvexFunction& f, const Vec& v, double a) {
  auto point = [&](double t) {
    Vec x(v);
    for (auto& c : x) c *= t;
    return x;
  };
  auto deriv = [&](double t) { return f.directional(point(t), v); };
  auto value = [&](double t) { return f(point(t)); };

  constexpr double kCap = 1152921504606846976.0;  // 2^60
  double hi = 1.0;
  while (deriv(hi) < a) {
    if (hi >= kCap) return ExtendedReal::infinity();
    hi *= 2.0;
  }
  double lo = -1.0;
  while (deriv(lo) > a) {
    if (lo <= -kCap) return ExtendedReal::infinity();
    lo *= 2.0;
  }
  for (int i = 0; i < 400 && hi - lo > 1e-15 * (1.0 + std::fabs(lo) + std::fabs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (deriv(mid) < a) lo = mid;
    else hi = mid;
  }
  return std::max(a * lo - value(lo), a * hi - value(hi));
}

}  // namespace bceh
