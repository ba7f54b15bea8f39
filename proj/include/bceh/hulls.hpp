#pragma once

// Convex hulls of an epigraph with a point or a centred ball, the outer radius of the
// added region, and mollification.

#include <bceh/bceh.hpp>
#include <bceh/convex_core.hpp>
#include <bceh/numerics.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace bceh {

using Point2 = std::array<double, 2>;

/// Boundary of a convex region of the plane lying above a piecewise curve, left to right.
struct PiecewiseBoundary2D {
  enum class Kind { Graph, Segment, Circle };

  struct Arc {
    Kind kind = Kind::Graph;
    double s0 = 0.0, s1 = 0.0;  // abscissa range; graph ends may be infinite
    Point2 start{}, end{};      // coordinates; +-inf on unbounded graph ends
    double radius = 0.0;        // circle arcs only, centred at the origin
  };

  ConvexFunction phi;
  std::vector<Arc> arcs;

  /// Lower boundary y(s).
  double lower_boundary(double s) const {
    for (const auto& a : arcs) {
      if (s < a.s0 || s > a.s1) continue;
      switch (a.kind) {
        case Kind::Graph: return phi({s});
        case Kind::Segment: {
          const double w = a.s1 > a.s0 ? (s - a.s0) / (a.s1 - a.s0) : 0.0;
          return a.start[1] + w * (a.end[1] - a.start[1]);
        }
        case Kind::Circle: return -std::sqrt(std::max(0.0, (a.radius - s) * (a.radius + s)));
      }
    }
    return phi({s});
  }

  bool contains(double s, double y, double tol = 1e-12) const {
    const double b = lower_boundary(s);
    return y >= b - tol * (1.0 + std::fabs(b));
  }

  /// Largest gap between consecutive finite endpoints.
  double max_joint_gap() const {
    double gap = 0.0;
    for (std::size_t i = 1; i < arcs.size(); ++i)
      gap = std::max(gap, std::hypot(arcs[i].start[0] - arcs[i - 1].end[0], arcs[i].start[1] - arcs[i - 1].end[1]));
    return gap;
  }
};

inline const char* to_string(PiecewiseBoundary2D::Kind k) {
  switch (k) {
    case PiecewiseBoundary2D::Kind::Graph: return "graph";
    case PiecewiseBoundary2D::Kind::Segment: return "segment";
    case PiecewiseBoundary2D::Kind::Circle: return "circle";
  }
  return "?";
}

namespace detail {

inline PiecewiseBoundary2D::Arc graph_arc(const ConvexFunction& f, double s0, double s1) {
  const double inf = std::numeric_limits<double>::infinity();
  PiecewiseBoundary2D::Arc a;
  a.kind = PiecewiseBoundary2D::Kind::Graph;
  a.s0 = s0;
  a.s1 = s1;
  a.start = std::isfinite(s0) ? Point2{s0, f({s0})} : Point2{-inf, inf};
  a.end = std::isfinite(s1) ? Point2{s1, f({s1})} : Point2{inf, inf};
  return a;
}

inline PiecewiseBoundary2D::Arc segment_arc(Point2 a, Point2 b) {
  PiecewiseBoundary2D::Arc s;
  s.kind = PiecewiseBoundary2D::Kind::Segment;
  s.s0 = a[0];
  s.s1 = b[0];
  s.start = a;
  s.end = b;
  return s;
}

/// Bisection for the root of a decreasing function on [lo, hi] with g(lo) > 0 ≥ g(hi).
template <class G>
double bisect_decreasing(G&& g, double lo, double hi) {
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline constexpr double kTangencySearchRadius = 1099511627776.0;  // 2^40

/// Boundary of Conv(E_φ ∪ {p}) for m = 1: graph, two tangent segments through p, graph.
inline PiecewiseBoundary2D hull_with_point_2d(const ConvexFunction& f, Point2 p) {
  if (f.dim() != 1) throw PreconditionError("hull_with_point_2d needs a function of one variable");
  const double inf = std::numeric_limits<double>::infinity();
  PiecewiseBoundary2D out{f, {}};
  const double px = p[0], py = p[1];
  const double fp = f({px});
  if (py >= fp - 1e-12 * (1.0 + std::fabs(fp))) {
    out.arcs.push_back(detail::graph_arc(f, -inf, inf));
    return out;
  }
  // Value at p_x of the tangent line at q, minus p_y; decreasing away from p_x on each side.
  auto T = [&](double q) { return f({q}) + f.gradient(std::vector{q}).g[0] * (px - q) - py; };
  auto tangency = [&](double sgn) {
    double d = 1.0;
    while (T(px + sgn * d) > 0.0) {
      if (d >= kTangencySearchRadius)
        throw PreconditionError(
            "no tangent line through p within the search radius: growth is not enough to close the hull "
            "(asymptote or sublinear growth)");
      d *= 2.0;
    }
    const double lo = d > 1.0 ? d / 2.0 : 0.0;
    return px + sgn * detail::bisect_decreasing([&](double e) { return T(px + sgn * e); }, lo, d);
  };
  const double q1 = tangency(-1.0), q2 = tangency(1.0);
  const Point2 a{q1, f({q1})}, b{q2, f({q2})};
  out.arcs.push_back(detail::graph_arc(f, -inf, q1));
  out.arcs.push_back(detail::segment_arc(a, p));
  out.arcs.push_back(detail::segment_arc(p, b));
  out.arcs.push_back(detail::graph_arc(f, q2, inf));
  return out;
}

/// Primal membership in Conv(E_φ ∪ {p}): z = p, or the ray from p through z reaches E
/// at or beyond z. Returns a signed depth (positive inside, negative outside).
inline double hull_with_point_depth(const ConvexFunction& f, std::span<const double> p, std::span<const double> z) {
  const std::size_t m = static_cast<std::size_t>(f.dim());
  Vec x(m);
  auto h = [&](double mu) {
    for (std::size_t i = 0; i < m; ++i) x[i] = p[i] + mu * (z[i] - p[i]);
    return (p[m] + mu * (z[m] - p[m])) - f(x);
  };
  double best = h(1.0);
  // h is concave in μ; search geometrically growing windows for its maximum
  double lo = 1.0;
  for (double hi = 2.0; hi <= 1e12; hi *= 4.0) {
    const auto [mu, v] = golden_max(h, lo, hi, 120);
    best = std::max(best, v);
    if (mu < hi * 0.99 || best > 0.0) break;
    lo = hi / 2.0;
  }
  return best;
}

/// A line in R^{m+1} through `point` with direction `dir`.
struct Line {
  Vec point;
  Vec dir;
};

/// Slicing check: membership in the hull of the planar section agrees with membership in
/// the ambient hull Conv(E ∪ {p}) at sampled points of the line.
inline Verdict section_hull_check(const ConvexFunction& f, std::span<const double> p, const Line& line,
                                  int samples = 1001, double extent = 4.0) {
  const std::size_t m = static_cast<std::size_t>(f.dim());
  if (p.size() != m + 1 || line.point.size() != m + 1 || line.dir.size() != m + 1)
    throw PreconditionError("section_hull_check: dimension mismatch");
  const Direction d(line.dir);
  // p must lie on the line
  Vec w(m + 1);
  for (std::size_t i = 0; i <= m; ++i) w[i] = p[i] - line.point[i];
  const double along = dot(w, d.vec());
  for (std::size_t i = 0; i <= m; ++i) w[i] -= along * d[i];
  if (norm(w) > 1e-9 * (1.0 + norm(p))) throw PreconditionError("line does not pass through p");

  // vertical plane containing the line: horizontal unit e, coordinates (μ, y)
  Vec e(d.vec().begin(), d.vec().begin() + static_cast<std::ptrdiff_t>(m));
  double horizontal = norm(e);
  if (horizontal < 1e-12) {
    std::fill(e.begin(), e.end(), 0.0);
    e[0] = 1.0;
    horizontal = 0.0;
  } else {
    for (auto& c : e) c /= horizontal;
  }
  const Vec px(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(m));
  const ConvexFunction g = restrict_to_line(f, px, e);
  const PiecewiseBoundary2D section = hull_with_point_2d(g, {0.0, p[m]});

  int disagreements = 0, compared = 0;
  double worst_margin = 0.0;
  Vec z(m + 1);
  for (int k = 0; k < samples; ++k) {
    const double lambda = samples > 1 ? -extent + 2.0 * extent * k / (samples - 1) : 0.0;
    for (std::size_t i = 0; i <= m; ++i) z[i] = p[i] + lambda * d[i];
    const double mu = lambda * horizontal;
    const double sec = z[m] - section.lower_boundary(mu);
    const double amb = lambda == 0.0 ? 0.0 : hull_with_point_depth(f, p, z);
    if (std::fabs(sec) < 1e-6 || (lambda != 0.0 && std::fabs(amb) < 1e-6)) continue;  // on the boundary
    ++compared;
    if ((sec > 0.0) != (amb > 0.0)) {
      ++disagreements;
      worst_margin = std::max(worst_margin, std::min(std::fabs(sec), std::fabs(amb)));
    }
  }
  Verdict out = disagreements ? Verdict::fails(Vec(z)) : Verdict::holds();
  out.diagnostics["samples_compared"] = compared;
  out.diagnostics["disagreements"] = disagreements;
  out.diagnostics["worst_margin"] = worst_margin;
  return out;
}

namespace detail {

inline Vec scaled(const Vec& v, double t) {
  Vec x(v);
  for (auto& c : x) c *= t;
  return x;
}

/// (t, φ(tv)) is on the boundary of the section hull with the disk of radius r iff the
/// tangent there supports the disk as well: σ_E(u) ≥ σ_B(u) = r for its outer normal u.
inline bool graph_point_exposed(const ConvexFunction& f, const Vec& v, double t, double r) {
  const Vec x = scaled(v, t);
  const double s = f.directional(x, v);
  return s * t - f(x) >= r * std::sqrt(1.0 + s * s);
}

inline std::vector<Direction> section_directions(const ConvexFunction& f, int count) {
  if (f.traits().radial && f.dim() > 1) {
    Vec e(static_cast<std::size_t>(f.dim()), 0.0);
    e[0] = 1.0;
    return {Direction(e)};
  }
  return sphere_directions(f.dim(), count);
}

}  // namespace detail

/// Outer radius of Conv(E_φ ∪ rB̄) \ E_φ, or +∞ when hull-minus-E points persist out to 2^20·r.
inline ExtendedReal exhaustion_hull_bound(const ConvexFunction& f, double r, const AnalysisConfig& cfg = {}) {
  if (!(r > 0.0)) throw PreconditionError("exhaustion_hull_bound needs r > 0");
  const double far = std::ldexp(r, 20);
  double bound = 0.0;
  for (const auto& dir : detail::section_directions(f, cfg.direction_count)) {
    const Vec& v = dir.vec();
    std::vector<double> ts;
    for (int i = 0; i <= 256; ++i) ts.push_back(r * i / 256.0);
    for (double t = 2.0 * r; t <= far; t *= 2.0) ts.push_back(t);
    std::ptrdiff_t first = -1, last = -1;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (!detail::graph_point_exposed(f, v, ts[i], r)) {
        if (first < 0) first = static_cast<std::ptrdiff_t>(i);
        last = static_cast<std::ptrdiff_t>(i);
      }
    }
    if (last < 0) continue;
    if (static_cast<std::size_t>(last) + 1 == ts.size()) return ExtendedReal::infinity();
    const double q = detail::bisect_decreasing(
        [&](double t) { return detail::graph_point_exposed(f, v, t, r) ? -1.0 : 1.0; }, ts[static_cast<std::size_t>(last)],
        ts[static_cast<std::size_t>(last) + 1]);
    const double t0 = ts[static_cast<std::size_t>(first)];
    // points of the added region at abscissa t lie between the hull floor (≥ −r, ≥ min φ) and φ(tv)
    for (int i = 0; i <= 200; ++i) {
      const double t = t0 + (q - t0) * i / 200.0;
      const double y = f(detail::scaled(v, t));
      bound = std::max(bound, std::hypot(t, std::max(r, std::fabs(y))));
    }
  }
  return bound;
}

/// One ray t ≥ 0 of a radial section: circle for t ≤ c, common tangent on [c, q], graph beyond.
struct SectionHull {
  Vec direction;
  double theta = 0.0;  // angle of the tangency point on the circle, from the bottom
  double c = 0.0;      // r·sinθ
  double slope = 0.0;  // tanθ
  double intercept = 0.0;
  double q = 0.0;      // graph tangency abscissa
};

struct HullWithBallResult {
  ConvexFunction psi;
  double tau = 0.0;
  double match_radius = 0.0;
  double r = 0.0;
  std::vector<SectionHull> sections;
};

namespace detail {

/// Abscissa where the section derivative equals a, or nullopt if it never does.
inline std::optional<double> section_tangent_point(const ConvexFunction& f, const Vec& v, double a) {
  auto deriv = [&](double t) { return f.directional(scaled(v, t), v); };
  constexpr double kCap = 1152921504606846976.0;  // 2^60
  double hi = 1.0;
  while (deriv(hi) < a) {
    if (hi >= kCap) return std::nullopt;
    hi *= 2.0;
  }
  double lo = -1.0;
  while (deriv(lo) > a) {
    if (lo <= -kCap) return std::nullopt;
    lo *= 2.0;
  }
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (deriv(mid) < a) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Common tangent of the circle of radius r and the graph along v, right of the origin:
/// bisection in the slope a on F(a) = φ_v*(a)/√(1+a²) − r, to full precision.
inline SectionHull solve_section(const ConvexFunction& f, const Vec& v, double r) {
  auto F = [&](double a) -> double {
    const auto q = section_tangent_point(f, v, a);
    if (!q) return std::numeric_limits<double>::infinity();
    const double conj = a * *q - f(scaled(v, *q));
    return conj / std::hypot(1.0, a) - r;
  };
  if (!(F(0.0) < 0.0)) throw PreconditionError("ball does not reach below the graph along a section");
  double lo = 0.0, hi = 0.0;
  bool bracketed = false;
  for (int k = -20; k <= 60; ++k) {
    const double a = std::ldexp(1.0, k);
    if (F(a) > 0.0) {
      hi = a;
      bracketed = true;
      break;
    }
    lo = a;
  }
  if (!bracketed)
    throw PreconditionError("common tangent with the ball does not exist: the epigraph does not have BCEH "
                            "(boundary ray or asymptote)");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (F(mid) > 0.0) hi = mid;
    else lo = mid;
  }
  SectionHull s;
  s.direction = v;
  s.slope = 0.5 * (lo + hi);
  s.theta = std::atan(s.slope);
  s.c = r * s.slope / std::hypot(1.0, s.slope);
  s.q = *section_tangent_point(f, v, s.slope);
  s.intercept = f(scaled(v, s.q)) - s.slope * s.q;
  s.q = std::max(s.q, s.c);
  return s;
}

inline double circle_floor(double r, double t) {
  if (t == 0.0) return -r;
  return -std::sqrt(std::max(0.0, (r - t) * (r + t)));
}

/// ψ along the ray, with its derivative in t.
inline std::pair<double, double> section_value(const ConvexFunction& f, const SectionHull& s, double r, double t) {
  if (t <= s.c) {
    const double y = circle_floor(r, t);
    return {y, y < 0.0 ? -t / y : 0.0};
  }
  if (t < s.q) return {s.slope * t + s.intercept, s.slope};
  const Vec x = scaled(s.direction, t);
  return {f(x), f.directional(x, s.direction)};
}

}  // namespace detail

/// Conv(E_φ ∪ rB̄) = {y ≥ ψ_r(x)}, built per radial section.
inline HullWithBallResult hull_with_ball(const ConvexFunction& f, double r, const AnalysisConfig& cfg = {}) {
  if (!(r > 0.0)) throw PreconditionError("hull_with_ball needs r > 0");
  const int m = f.dim();
  const auto dirs = detail::section_directions(f, cfg.direction_count);

  // position of the ball relative to E along the sampled sections
  bool meets = false, inside = true;
  double min_phi = std::numeric_limits<double>::infinity();
  for (const auto& dir : dirs) {
    for (int i = 0; i <= 2000; ++i) {
      const double t = r * i / 2000.0;
      const double y = f(detail::scaled(dir.vec(), t));
      const double top = -detail::circle_floor(r, t);
      if (y <= top) meets = true;
      if (y > -top) inside = false;
    }
    min_phi = std::min(min_phi, f(detail::scaled(dir.vec(), 0.0)));
  }
  HullWithBallResult out;
  out.r = r;
  if (!meets)
    throw PreconditionError("the ball does not meet the epigraph: it lies entirely below the graph");
  if (inside) {
    out.psi = f;
    return out;
  }
  if (!(min_phi > -r)) throw PreconditionError("need min phi > -r for the ball to poke below the graph");

  const bool radial = f.traits().radial || m == 1;
  for (const auto& dir : dirs) out.sections.push_back(detail::solve_section(f, dir.vec(), r));
  out.tau = std::numeric_limits<double>::infinity();
  for (const auto& s : out.sections) {
    out.tau = std::min(out.tau, s.c);
    out.match_radius = std::max(out.match_radius, s.q);
  }

  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", r);
  const std::string desc = "hull_with_ball(" + f.descriptor() + "," + buf + ")";
  ConvexFunction::Traits traits{.radial = f.traits().radial, .may_be_nonsmooth = f.traits().may_be_nonsmooth,
                                .certified_convex = false};

  if (radial) {
    const auto sections = out.sections;
    // m = 1: sections are +e1 then −e1; radial m > 1: one section along e1
    auto pick = [sections, m](std::span<const double> x) -> std::pair<const SectionHull*, double> {
      if (m == 1) return {x[0] >= 0.0 ? &sections[0] : &sections[1], std::fabs(x[0])};
      return {&sections[0], norm(x)};
    };
    auto value = [f, r, pick](std::span<const double> x) {
      const auto [s, t] = pick(x);
      return detail::section_value(f, *s, r, t).first;
    };
    auto grad = [f, r, pick, m](std::span<const double> x, std::span<double> g) {
      const auto [s, t] = pick(x);
      const double d = detail::section_value(f, *s, r, t).second;
      if (m == 1) {
        g[0] = x[0] >= 0.0 ? d : -d;
        return;
      }
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = t > 0.0 ? d * x[i] / t : 0.0;
    };
    out.psi = ConvexFunction(m, desc, value, grad, traits);
    return out;
  }

  // non-radial, m ≥ 2: solve the section through x on demand
  auto value = [f, r](std::span<const double> x) {
    const double t = norm(x);
    if (t == 0.0) return -r;
    Vec v(x.begin(), x.end());
    for (auto& c : v) c /= t;
    const SectionHull s = detail::solve_section(f, v, r);
    return detail::section_value(f, s, r, t).first;
  };
  out.psi = ConvexFunction(m, desc, value, nullptr, traits);
  return out;
}

/// Boundary of Conv(E_φ ∪ rB̄) for m = 1 as graph, segment, circle, segment, graph.
inline PiecewiseBoundary2D ball_hull_boundary(const ConvexFunction& f, const HullWithBallResult& h) {
  if (f.dim() != 1) throw PreconditionError("ball_hull_boundary needs a function of one variable");
  const double inf = std::numeric_limits<double>::infinity();
  PiecewiseBoundary2D out{f, {}};
  if (h.sections.empty()) {
    out.arcs.push_back(detail::graph_arc(f, -inf, inf));
    return out;
  }
  const SectionHull& R = h.sections[0];
  const SectionHull& L = h.sections[1];
  const double r = h.r;
  const Point2 gl{-L.q, f({-L.q})}, cl{-L.c, detail::circle_floor(r, L.c)};
  const Point2 cr{R.c, detail::circle_floor(r, R.c)}, gr{R.q, f({R.q})};
  out.arcs.push_back(detail::graph_arc(f, -inf, -L.q));
  out.arcs.push_back(detail::segment_arc(gl, cl));
  PiecewiseBoundary2D::Arc c;
  c.kind = PiecewiseBoundary2D::Kind::Circle;
  c.s0 = -L.c;
  c.s1 = R.c;
  c.start = cl;
  c.end = cr;
  c.radius = r;
  out.arcs.push_back(c);
  out.arcs.push_back(detail::segment_arc(cr, gr));
  out.arcs.push_back(detail::graph_arc(f, R.q, inf));
  return out;
}

namespace detail {

struct KernelRule {
  std::vector<double> offsets;  // in units of the width
  std::vector<double> weights;  // sum to 1
};

/// (1 − s²)³ on [−1, 1] sampled at Gauss–Legendre nodes, normalised.
inline KernelRule bump_rule(int nodes) {
  const auto& q = gauss_legendre(nodes);
  KernelRule k;
  double total = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    const double s = q.nodes[i];
    const double w = q.weights[i] * std::pow(1.0 - s * s, 3);
    k.offsets.push_back(s);
    k.weights.push_back(w);
    total += w;
  }
  for (auto& w : k.weights) w /= total;
  return k;
}

inline int mollifier_nodes_per_axis(int m) {
  if (m == 1) return 64;
  if (m == 2) return 16;
  if (m == 3) return 8;
  return 4;
}

}  // namespace detail

/// Convolution with the normalised product bump kernel of the given half-width.
/// A positive combination of translates, hence convex whenever f is.
inline ConvexFunction mollify(const ConvexFunction& f, double width) {
  if (!(width > 0.0)) throw PreconditionError("mollify needs width > 0");
  const int m = f.dim();
  const detail::KernelRule k1 = detail::bump_rule(detail::mollifier_nodes_per_axis(m));
  const std::size_t n = k1.offsets.size();
  std::size_t total = 1;
  for (int i = 0; i < m; ++i) total *= n;
  // flat list of shifts and weights for the product rule
  std::vector<Vec> shifts;
  std::vector<double> weights;
  shifts.reserve(total);
  weights.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Vec s(static_cast<std::size_t>(m));
    double w = 1.0;
    std::size_t rest = idx;
    for (int d = 0; d < m; ++d) {
      const std::size_t j = rest % n;
      rest /= n;
      s[static_cast<std::size_t>(d)] = width * k1.offsets[j];
      w *= k1.weights[j];
    }
    shifts.push_back(std::move(s));
    weights.push_back(w);
  }
  auto value = [f, shifts, weights](std::span<const double> x) {
    Vec y(x.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      for (std::size_t d = 0; d < y.size(); ++d) y[d] = x[d] - shifts[i][d];
      acc += weights[i] * f(y);
    }
    return acc;
  };
  auto grad = [f, shifts, weights](std::span<const double> x, std::span<double> g) {
    Vec y(x.size());
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      for (std::size_t d = 0; d < y.size(); ++d) y[d] = x[d] - shifts[i][d];
      const auto s = f.gradient(y);
      for (std::size_t d = 0; d < g.size(); ++d) g[d] += weights[i] * s.g[d];
    }
  };
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", width);
  ConvexFunction::Traits t{.radial = false, .may_be_nonsmooth = false, .certified_convex = f.traits().certified_convex};
  return {m, "mollify(" + f.descriptor() + "," + buf + ")", value, grad, t};
}

}  // namespace bceh
