#pragma once

// Numerical decision procedures for the bounded-convex-exhaustion-hulls property of
// epigraphs: the tangent-intercept profile ξ_v, the radial-derivative sufficient test,
// asymptote/boundary-ray detection and stability under uniform perturbation.

#include <bceh/convex_core.hpp>
#include <bceh/numerics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace bceh {

struct AnalysisConfig {
  int direction_count = 0;  // 0: default for the dimension
  std::vector<double> t_schedule = default_schedule();
  std::vector<double> xi_target_ladder{1, 2, 5, 10, 20, 50};
  double denominator_floor = 1e-9;

  // Verdict rule thresholds.
  double plateau_factor = 1e-3;        // ξ gain over the final two decades below plateau_factor·c_1: bounded
  double sustained_decay_ratio = 0.5;  // last-decade gain ≥ ratio·gain three decades earlier: log-rate growth
  bool allow_extrapolation = true;     // project unreached ladder levels along a sustained log-rate
  double growth_floor = 1e-9;          // recession slopes at or below this violate linear growth
  double asymptote_tol = 1e-6;
  double roundoff_budget = 0.05;  // fraction of asymptote_tol that cancellation error may use
  double zero_set_radius = 1e6;   // compact zero sets must fit inside this ball
  double growth_cap = 1e12;       // reported growth constant for superlinear functions

  std::uint64_t seed = 42;

  void validate() const {
    for (std::size_t i = 1; i < t_schedule.size(); ++i)
      if (!(t_schedule[i] > t_schedule[i - 1])) throw PreconditionError("t_schedule must be strictly increasing");
    for (std::size_t i = 1; i < xi_target_ladder.size(); ++i)
      if (!(xi_target_ladder[i] > xi_target_ladder[i - 1]))
        throw PreconditionError("xi_target_ladder must be strictly increasing");
    if (t_schedule.empty() || xi_target_ladder.empty()) throw PreconditionError("empty schedule or ladder");
  }
};

/// Shift that moves a sampled minimiser to the origin and its value to zero.
struct Normalization {
  Vec shift;
  double min_value = 0.0;
};

/// Compass search for a minimiser, started at the origin. Ties keep the origin.
inline Normalization normalize(const ConvexFunction& f) {
  const std::size_t m = static_cast<std::size_t>(f.dim());
  Vec x(m, 0.0);
  double fx = f(x);
  double step = 1.0;
  for (int iter = 0; iter < 20000 && step > 1e-12; ++iter) {
    bool improved = false;
    for (std::size_t k = 0; k < m && !improved; ++k) {
      for (double sgn : {1.0, -1.0}) {
        Vec y = x;
        y[k] += sgn * step;
        const double fy = f(y);
        if (fy < fx - 1e-15 * (1.0 + std::fabs(fx))) {
          x = std::move(y);
          fx = fy;
          improved = true;
          break;
        }
      }
    }
    if (improved) step = std::min(step * 2.0, 1e6);
    else step /= 2.0;
  }
  return {x, fx};
}

struct XiSample {
  double t = 0.0;
  double xi = 0.0;      // normalised profile (minimiser at origin, value 0); NaN if flagged
  double xi_raw = 0.0;  // t − φ(tv)/(v·∇φ(tv)) for φ as given; NaN if its denominator is below the floor
  bool flagged = false;
};

struct XiProfile {
  Direction direction{1.0};
  std::vector<XiSample> samples;
  Normalization normalization;

  std::vector<double> flagged_t() const {
    std::vector<double> out;
    for (const auto& s : samples)
      if (s.flagged) out.push_back(s.t);
    return out;
  }
};

namespace detail {

inline Vec ray_point(const Vec& base, const Direction& v, double t) {
  Vec x = base;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += t * v[i];
  return x;
}

/// Normalised ξ_v(t) = (1/g(t))·∫_0^t (g(t) − g(s)) ds with g(s) = v·∇φ(x* + s v).
/// The integrand is nonnegative, so the value carries no cancellation at large t.
/// Assumes the minimum sits at x* with value 0, which normalize() provides.
inline double normalized_xi(const ConvexFunction& f, const Normalization& n, const Direction& v, double t,
                            double floor, bool* flagged = nullptr) {
  auto g = [&](double s) { return f.directional(ray_point(n.shift, v, s), v); };
  const double gt = g(t);
  if (flagged) *flagged = !(std::fabs(gt) >= floor);
  if (!(std::fabs(gt) >= floor)) return std::numeric_limits<double>::quiet_NaN();
  // g is nondecreasing along the ray; negative differences are roundoff
  auto integrand = [&](double s) { return std::max(0.0, gt - g(s)); };
  // dyadic panels in both directions from 1, so algebraic behaviour of g at 0 is resolved
  const double lo = std::min(t, 1.0);
  double total = 0.0;
  double b = lo;
  for (int k = 0; k < 40; ++k, b *= 0.5) total += integrate(integrand, 0.5 * b, b);
  total += integrate(integrand, 0.0, b);
  for (double a = 1.0; a < t; a *= 2.0) total += integrate(integrand, a, std::min(2.0 * a, t));
  return total / gt;
}

}  // namespace detail

/// ξ_v over the configured schedule. Points whose directional derivative is below the
/// floor are flagged, never fabricated.
inline XiProfile xi_profile(const ConvexFunction& f, const Direction& v, const AnalysisConfig& cfg = {},
                            const Normalization* norm_hint = nullptr) {
  cfg.validate();
  if (v.size() != static_cast<std::size_t>(f.dim())) throw PreconditionError("direction has wrong dimension");
  XiProfile p{v, {}, norm_hint ? *norm_hint : normalize(f)};
  const Vec origin(v.size(), 0.0);
  bool any = false;
  for (double t : cfg.t_schedule) {
    XiSample s;
    s.t = t;
    s.xi = detail::normalized_xi(f, p.normalization, v, t, cfg.denominator_floor, &s.flagged);
    const Vec x = detail::ray_point(origin, v, t);
    const double d = f.directional(x, v);
    s.xi_raw = std::fabs(d) >= cfg.denominator_floor ? t - f(x) / d : std::numeric_limits<double>::quiet_NaN();
    any = any || !s.flagged;
    p.samples.push_back(s);
  }
  if (!any) throw Error("degenerate direction: every schedule point is flagged");
  return p;
}

inline std::vector<Direction> analysis_directions(int m, const AnalysisConfig& cfg) {
  return sphere_directions(m, cfg.direction_count);
}

/// Per-direction verdict of the ladder rule; shared by bceh_verdict and diagnostics.
struct DirectionLadder {
  bool plateau = false;     // ξ bounded: final two decades gained less than plateau_factor·c_1
  bool sustained = false;   // gain per decade not decaying
  bool all_reached = false; // every ladder level reached (directly or by projection)
  int reached_directly = 0;
  double xi_last = 0.0;
  double gain_two_decades = 0.0;
  double log_rate = 0.0;             // ξ gain per e-fold of t (sustained case)
  std::vector<double> log10_t_at;    // per ladder level: log10 of the t from which ξ ≥ c; NaN if unreached
};

inline DirectionLadder ladder_for_direction(const ConvexFunction& f, const XiProfile& p, const AnalysisConfig& cfg) {
  DirectionLadder out;
  const auto& ladder = cfg.xi_target_ladder;
  out.log10_t_at.assign(ladder.size(), std::numeric_limits<double>::quiet_NaN());

  std::vector<const XiSample*> ok;
  for (const auto& s : p.samples)
    if (!s.flagged) ok.push_back(&s);
  const double t_last = ok.back()->t;
  out.xi_last = ok.back()->xi;

  for (std::size_t c = 0; c < ladder.size(); ++c) {
    // earliest sample after which ξ never drops below the level again
    std::ptrdiff_t first = -1;
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(ok.size()) - 1; i >= 0; --i) {
      if (ok[static_cast<std::size_t>(i)]->xi >= ladder[c]) first = i;
      else break;
    }
    if (first >= 0) {
      out.log10_t_at[c] = std::log10(ok[static_cast<std::size_t>(first)]->t);
      ++out.reached_directly;
    }
  }

  auto xi_at = [&](double t) {
    return detail::normalized_xi(f, p.normalization, p.direction, t, cfg.denominator_floor);
  };
  const double x0 = out.xi_last, x1 = xi_at(t_last / 10.0), x2 = xi_at(t_last / 100.0), x3 = xi_at(t_last / 1000.0);
  out.gain_two_decades = x0 - x2;
  const double threshold = cfg.plateau_factor * ladder.front();
  out.plateau = !(out.gain_two_decades >= threshold);
  const double d1 = x0 - x1, d2 = x1 - x2, d3 = x2 - x3;
  const double dmin = std::min({d1, d2, d3});
  out.sustained = !out.plateau && dmin > 0.5 * threshold && d1 >= cfg.sustained_decay_ratio * d3;
  if (out.sustained) out.log_rate = dmin / std::log(10.0);

  out.all_reached = out.reached_directly == static_cast<int>(ladder.size());
  if (!out.all_reached && out.sustained && cfg.allow_extrapolation) {
    for (std::size_t c = 0; c < ladder.size(); ++c) {
      if (!std::isnan(out.log10_t_at[c])) continue;
      const double log_t = std::log(t_last) + (ladder[c] - out.xi_last) / out.log_rate;
      out.log10_t_at[c] = log_t / std::log(10.0);
    }
    out.all_reached = true;
  }
  return out;
}

namespace detail {

/// Linear-growth precondition; returns the smallest recession slope seen.
inline ExtendedReal min_recession(const ConvexFunction& f, const std::vector<Direction>& dirs,
                                  const AnalysisConfig& cfg, const Direction** worst) {
  ExtendedReal lo = ExtendedReal::infinity();
  for (const auto& v : dirs) {
    const ExtendedReal s = recession_slope(f, v, cfg.t_schedule);
    if (s < lo) {
      lo = s;
      if (worst) *worst = &v;
    }
  }
  return lo;
}

}  // namespace detail

/// Tangent-intercept criterion: holds iff every ladder level is eventually exceeded by ξ_v,
/// uniformly over the sampled directions; fails when some ξ_v plateaus.
inline Verdict bceh_verdict(const ConvexFunction& f, const AnalysisConfig& cfg = {}) {
  cfg.validate();
  const auto dirs = analysis_directions(f.dim(), cfg);
  const Direction* worst = nullptr;
  const ExtendedReal growth = detail::min_recession(f, dirs, cfg, &worst);
  if (growth.is_finite() && growth.value() <= cfg.growth_floor) {
    Verdict v = Verdict::inconclusive("growth precondition violated: sublinear growth in some direction");
    v.diagnostics["min_recession_slope"] = growth.value();
    if (worst) v.witness = worst->vec();
    return v;
  }

  const Normalization norm = normalize(f);
  const auto& ladder = cfg.xi_target_ladder;
  std::vector<double> uniform_log10_t(ladder.size(), -std::numeric_limits<double>::infinity());
  int extrapolated = 0;
  bool all = true;
  double min_gain = std::numeric_limits<double>::infinity();
  for (const auto& v : dirs) {
    const XiProfile p = xi_profile(f, v, cfg, &norm);
    const DirectionLadder d = ladder_for_direction(f, p, cfg);
    min_gain = std::min(min_gain, d.gain_two_decades);
    if (d.plateau) {
      Verdict out = Verdict::fails(v.vec());
      out.diagnostics["xi_last"] = d.xi_last;
      out.diagnostics["xi_gain_final_two_decades"] = d.gain_two_decades;
      out.notes.push_back("xi_v is bounded along the witness direction (boundary ray or asymptote)");
      return out;
    }
    if (!d.all_reached) {
      all = false;
      continue;
    }
    if (d.reached_directly < static_cast<int>(ladder.size())) ++extrapolated;
    for (std::size_t c = 0; c < ladder.size(); ++c)
      uniform_log10_t[c] = std::max(uniform_log10_t[c], d.log10_t_at[c]);
  }
  Verdict out = all ? Verdict::holds() : Verdict::inconclusive("ladder not reached and growth not sustained");
  out.diagnostics["directions"] = static_cast<double>(dirs.size());
  out.diagnostics["directions_extrapolated"] = extrapolated;
  out.diagnostics["min_xi_gain_final_two_decades"] = min_gain;
  out.diagnostics["min_recession_slope"] = growth.value();
  if (all) {
    for (std::size_t c = 0; c < ladder.size(); ++c) {
      char key[64];
      std::snprintf(key, sizeof key, "log10_t_reach_%g", ladder[c]);
      out.diagnostics[key] = uniform_log10_t[c];
    }
  }
  return out;
}

/// Sufficient condition: x·∇φ(x)/|x| eventually exceeds every ladder level, uniformly.
/// A failure only means the condition does not certify; see bceh_verdict.
inline Verdict radial_test(const ConvexFunction& f, const AnalysisConfig& cfg = {}) {
  cfg.validate();
  const auto dirs = analysis_directions(f.dim(), cfg);
  const double top = cfg.xi_target_ladder.back();
  double worst_ratio = std::numeric_limits<double>::infinity();
  const Direction* worst = nullptr;
  double log10_t_top = -std::numeric_limits<double>::infinity();
  const Vec origin(static_cast<std::size_t>(f.dim()), 0.0);
  for (const auto& v : dirs) {
    std::ptrdiff_t first = -1;
    double last_ratio = 0.0;
    for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(cfg.t_schedule.size()) - 1; i >= 0; --i) {
      const double t = cfg.t_schedule[static_cast<std::size_t>(i)];
      const double ratio = f.directional(detail::ray_point(origin, v, t), v);
      if (i + 1 == static_cast<std::ptrdiff_t>(cfg.t_schedule.size())) last_ratio = ratio;
      if (ratio >= top) first = i;
      else break;
    }
    if (last_ratio < worst_ratio) {
      worst_ratio = last_ratio;
      worst = &v;
    }
    if (first < 0) {
      Verdict out = Verdict::fails(v.vec());
      out.diagnostics["final_ratio"] = last_ratio;
      out.diagnostics["sufficient_only"] = 1.0;
      out.notes.push_back("radial derivative ratio stays below the top ladder level; the sufficient test does not certify");
      return out;
    }
    log10_t_top = std::max(log10_t_top, std::log10(cfg.t_schedule[static_cast<std::size_t>(first)]));
  }
  Verdict out = Verdict::holds();
  out.diagnostics["min_final_ratio"] = worst_ratio;
  out.diagnostics["log10_t_reach_top"] = log10_t_top;
  (void)worst;
  return out;
}

/// Boundary-ray/asymptote detection: along each direction with finite recession slope s_v,
/// φ(tv) − s_v·t converging to a finite limit exposes an asymptote or boundary ray.
inline Verdict asymptote_test(const ConvexFunction& f, const AnalysisConfig& cfg = {}) {
  cfg.validate();
  const auto dirs = analysis_directions(f.dim(), cfg);
  const Vec origin(static_cast<std::size_t>(f.dim()), 0.0);
  int superlinear = 0;
  double min_drift = std::numeric_limits<double>::infinity();
  for (const auto& v : dirs) {
    const ExtendedReal s = recession_slope(f, v, cfg.t_schedule);
    if (s.is_infinite()) {
      ++superlinear;
      continue;
    }
    auto gap = [&](double t) { return f(detail::ray_point(origin, v, t)) - s.value() * t; };
    // Largest schedule point whose cancellation error fits inside the tolerance budget.
    double horizon = 0.0;
    for (double t : cfg.t_schedule) {
      const double err = 4.0 * std::numeric_limits<double>::epsilon() *
                         (std::fabs(f(detail::ray_point(origin, v, t))) + std::fabs(s.value()) * t);
      if (err <= cfg.roundoff_budget * cfg.asymptote_tol) horizon = t;
    }
    if (horizon < 1e4) {
      Verdict out = Verdict::inconclusive("asymptote horizon too short for the roundoff budget");
      out.witness = v.vec();
      return out;
    }
    const double far = gap(horizon), near = gap(horizon / 10.0);
    const double drift = std::fabs(far - near);
    min_drift = std::min(min_drift, drift);
    if (drift < cfg.asymptote_tol * (1.0 + std::fabs(far))) {
      Verdict out = Verdict::fails(v.vec());
      out.diagnostics["recession_slope"] = s.value();
      out.diagnostics["limit"] = far;
      out.diagnostics["drift_last_decade"] = drift;
      out.diagnostics["horizon"] = horizon;
      out.notes.push_back("phi(tv) - s*t converges: asymptote or boundary ray along the witness direction");
      return out;
    }
  }
  Verdict out = Verdict::holds();
  out.diagnostics["superlinear_directions"] = superlinear;
  out.diagnostics["min_drift_last_decade"] = min_drift;
  return out;
}

/// Stability under uniform approximation: with sup|f−g| bounded and g convex, the
/// verdicts of f and g must agree; disagreement is reported as a violation.
inline Verdict stability_check(const ConvexFunction& f, const ConvexFunction& g, const AnalysisConfig& cfg = {}) {
  cfg.validate();
  if (f.dim() != g.dim()) throw PreconditionError("dimension mismatch in stability_check");
  const Verdict vf = bceh_verdict(f, cfg);
  if (!vf.ok()) throw PreconditionError("stability_check requires bceh_verdict(f) = holds");

  const auto dirs = analysis_directions(f.dim(), cfg);
  const Vec origin(static_cast<std::size_t>(f.dim()), 0.0);
  auto diff_at = [&](const Vec& x) {
    const double a = f(x), b = g(x);
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * (std::fabs(a) + std::fabs(b));
    return std::max(0.0, std::fabs(a - b) - noise);
  };
  double sup = diff_at(origin);
  bool growing_at_end = false;
  for (const auto& v : dirs) {
    double prev = 0.0;
    for (std::size_t i = 0; i < cfg.t_schedule.size(); ++i) {
      const double d = diff_at(detail::ray_point(origin, v, cfg.t_schedule[i]));
      sup = std::max(sup, d);
      if (i + 1 == cfg.t_schedule.size() && d >= sup && d > prev * (1.0 + 1e-3) && d > 0.0) growing_at_end = true;
      prev = d;
    }
  }
  if (growing_at_end) {
    Verdict out = Verdict::inconclusive("sup|f-g| is unbounded on the schedule");
    out.diagnostics["sup_abs_diff"] = sup;
    return out;
  }
  const Verdict cg = convexity_check(g, 10.0, 1000, false, cfg.seed);
  if (!cg.ok()) {
    Verdict out = Verdict::inconclusive("g fails the convexity check");
    out.witness = cg.witness;
    return out;
  }
  const Verdict vg = bceh_verdict(g, cfg);
  Verdict out = vg.status == vf.status ? Verdict::holds() : Verdict::fails(vg.witness.value_or(origin));
  if (!out.ok()) out.notes.push_back("property violation: verdicts of f and g disagree under bounded perturbation");
  out.diagnostics["sup_abs_diff"] = sup;
  out.diagnostics["verdict_f"] = static_cast<double>(vf.status);
  out.diagnostics["verdict_g"] = static_cast<double>(vg.status);
  return out;
}

}  // namespace bceh
