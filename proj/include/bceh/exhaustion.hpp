#pragma once

// Exhaustion of the ambient space by hulls E_{k+1} = Conv(E_0 ∪ r_k·B̄), the interpolated
// level functions ψ_t = (1−t)·φ_a + t·φ_b, caps between two levels, and ρ_t = exp(ψ_t − y) − 1.

#include <bceh/bceh.hpp>
#include <bceh/hulls.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace bceh {

/// r_0 = r0, r_{k+1} = 2·max(r_k, h(E_0, r_k·B̄)) + 1; k_max + 1 entries.
inline std::vector<double> radius_schedule(const ConvexFunction& f0, int k_max, double r0, const AnalysisConfig& cfg = {}) {
  if (k_max < 0) throw PreconditionError("k_max must be nonnegative");
  if (!(r0 > 0.0)) throw PreconditionError("r0 must be positive");
  const Verdict strict = convexity_check(f0, std::max(10.0, 4.0 * r0), 2000, true, cfg.seed);
  if (!strict.ok()) throw PreconditionError("seed is not strictly convex (statistical midpoint check)");
  std::vector<double> r{r0};
  for (int k = 0; k < k_max; ++k) {
    const ExtendedReal b = exhaustion_hull_bound(f0, r.back(), cfg);
    if (b.is_infinite())
      throw PreconditionError("exhaustion hull bound is unbounded at k = " + std::to_string(k) +
                              " (the seed does not have BCEH)");
    if (k == 0) {
      const Verdict v = bceh_verdict(f0, cfg);
      if (!v.ok()) throw PreconditionError(std::string("seed bceh_verdict is ") + to_string(v.status));
    }
    r.push_back(2.0 * std::max(r.back(), b.value()) + 1.0);
  }
  if (k_max == 0) {
    const Verdict v = bceh_verdict(f0, cfg);
    if (!v.ok()) throw PreconditionError(std::string("seed bceh_verdict is ") + to_string(v.status));
  }
  return r;
}

struct ExhaustionLevel {
  int k = 0;
  double r = 0.0;             // radius of the ball adjoined to E_0 (r_{k−1}); 0 for the seed
  ConvexFunction phi;
  double match_radius = 0.0;  // φ_k = φ_0 for |x| ≥ match_radius
  double tau = 0.0;
  Status bceh = Status::Inconclusive;
  std::string provenance;
};

namespace detail {

/// Default schedule stretched so that it passes the match radius by the default factor.
inline AnalysisConfig level_config(const AnalysisConfig& cfg, double match_radius) {
  AnalysisConfig c = cfg;
  int extra = 0;
  while (std::ldexp(1.0, extra) < match_radius + 1.0) ++extra;
  if (extra == 0) return c;
  c.t_schedule.clear();
  const int top = static_cast<int>(std::lround(std::log2(cfg.t_schedule.back()))) + extra;
  for (int j = 0; j <= top; ++j) c.t_schedule.push_back(std::ldexp(1.0, j));
  return c;
}

}  // namespace detail

/// Levels φ_0, …, φ_K with K + 1 = schedule size: φ_{k+1} = ψ_{r_k} of hull_with_ball.
inline std::vector<ExhaustionLevel> exhaustion_sequence(const ConvexFunction& f0, const std::vector<double>& schedule,
                                                        const AnalysisConfig& cfg = {}) {
  if (schedule.empty()) throw PreconditionError("empty radius schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] > schedule[i - 1])) throw PreconditionError("radius schedule must be strictly increasing");
  std::vector<ExhaustionLevel> out;
  ExhaustionLevel seed;
  seed.phi = f0;
  seed.bceh = bceh_verdict(f0, cfg).status;
  seed.provenance = "seed";
  out.push_back(seed);
  for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
    ExhaustionLevel lv;
    lv.k = static_cast<int>(k) + 1;
    lv.r = schedule[k];
    try {
      const HullWithBallResult h = hull_with_ball(f0, schedule[k], cfg);
      lv.phi = h.psi;
      lv.match_radius = h.match_radius;
      lv.tau = h.tau;
    } catch (const Error& e) {
      throw ConstructionError("hull_with_ball failed at level " + std::to_string(lv.k) + ": " + e.what());
    }
    lv.bceh = bceh_verdict(lv.phi, detail::level_config(cfg, lv.match_radius)).status;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", lv.r);
    lv.provenance = "hull_with_ball(seed, r=" + std::string(buf) + ")";
    out.push_back(std::move(lv));
  }
  return out;
}

namespace detail {

/// Sample points for pointwise comparisons: a ball sample plus the axis rays.
inline std::vector<Vec> comparison_points(int m, double radius, int count, std::uint64_t seed) {
  std::vector<Vec> pts;
  Rng rng(seed);
  for (int i = 0; i < count; ++i) pts.push_back(sample_ball(rng, m, radius));
  for (double t = 1.0; t <= radius; t *= 2.0)
    for (int d = 0; d < m; ++d)
      for (double s : {1.0, -1.0}) {
        Vec x(static_cast<std::size_t>(m), 0.0);
        x[static_cast<std::size_t>(d)] = s * t;
        pts.push_back(std::move(x));
      }
  return pts;
}

inline double max_difference(const ConvexFunction& a, const ConvexFunction& b, const std::vector<Vec>& pts) {
  double d = -std::numeric_limits<double>::infinity();
  for (const auto& x : pts) d = std::max(d, b(x) - a(x));
  return d;
}

inline constexpr double kOrderRadius = 1e4;

}  // namespace detail

/// ψ_t = (1−t)·φ_a + t·φ_b; requires φ_b ≤ φ_a at sampled points.
inline ConvexFunction interpolate(const ConvexFunction& phi_a, const ConvexFunction& phi_b, double t,
                                  std::uint64_t seed = 42) {
  if (phi_a.dim() != phi_b.dim()) throw PreconditionError("interpolate: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("interpolate: t must lie in [0, 1]");
  const auto pts = detail::comparison_points(phi_a.dim(), detail::kOrderRadius, 2000, seed);
  for (const auto& x : pts) {
    const double a = phi_a(x), b = phi_b(x);
    if (b > a + 1e-12 * (1.0 + std::fabs(a))) throw PreconditionError("interpolate: phi_b <= phi_a is violated");
  }
  if (t == 0.0) return phi_a;
  if (t == 1.0) return phi_b;
  auto value = [phi_a, phi_b, t](std::span<const double> x) { return (1.0 - t) * phi_a(x) + t * phi_b(x); };
  ConvexFunction::GradFn grad;
  if (phi_a.has_analytic_gradient() && phi_b.has_analytic_gradient())
    grad = [phi_a, phi_b, t](std::span<const double> x, std::span<double> g) {
      const auto ga = phi_a.gradient(x), gb = phi_b.gradient(x);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = (1.0 - t) * ga.g[i] + t * gb.g[i];
    };
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  ConvexFunction::Traits tr{.radial = phi_a.traits().radial && phi_b.traits().radial,
                            .may_be_nonsmooth = phi_a.traits().may_be_nonsmooth || phi_b.traits().may_be_nonsmooth,
                            .certified_convex = false};
  return {phi_a.dim(), "interp(" + phi_a.descriptor() + "," + phi_b.descriptor() + "," + buf + ")", value, grad, tr};
}

/// ρ_t(x, y) = exp(ψ_t(x) − y) − 1, a function on R^{m+1}.
struct LevelSetFunction {
  ConvexFunction psi;

  double rho(std::span<const double> z) const {
    const std::size_t m = static_cast<std::size_t>(psi.dim());
    return std::expm1(psi(z.first(m)) - z[m]);
  }

  Vec gradient(std::span<const double> z) const {
    const std::size_t m = static_cast<std::size_t>(psi.dim());
    const double e = std::exp(psi(z.first(m)) - z[m]);
    const auto g = psi.gradient(z.first(m));
    Vec out(m + 1);
    for (std::size_t i = 0; i < m; ++i) out[i] = e * g.g[i];
    out[m] = -e;
    return out;
  }

  /// ρ_t as a function of m + 1 variables, for the generic checks.
  ConvexFunction as_function() const {
    const LevelSetFunction self = *this;
    ConvexFunction::GradFn grad;
    if (psi.has_analytic_gradient())
      grad = [self](std::span<const double> z, std::span<double> g) {
        const Vec v = self.gradient(z);
        std::copy(v.begin(), v.end(), g.begin());
      };
    return {psi.dim() + 1, "rho(" + psi.descriptor() + ")", [self](std::span<const double> z) { return self.rho(z); },
            grad, {}};
  }
};

inline LevelSetFunction levelset_rho(const ConvexFunction& psi_t) { return {psi_t}; }

/// C = {ψ_{t1} < y < ψ_{t0}} between two interpolated levels.
struct Cap {
  double t0 = 0.0, t1 = 0.0;
  std::string family;  // descriptor of ψ_t
  ConvexFunction base;  // ψ_{t0}
  ConvexFunction top;   // ψ_{t1}
  double match_radius = 0.0;  // the two surfaces agree for |x| ≥ match_radius
  Vec box_lo, box_hi;         // bounding box in R^{m+1}

  Status strict_convexity = Status::Inconclusive;  // axiom (a)
  Status monotone = Status::Inconclusive;          // axiom (b)
  Status agree_outside = Status::Inconclusive;     // axiom (c)
  // ω_0, the base region of axiom (c), is taken to be {ψ_{t0} < φ_a}.
  std::string omega0 = "identified with {psi_t0 < phi_a}";
};

/// Builds and verifies the cap between ψ_{t0} and ψ_{t1} of the pair (φ_a, φ_b).
inline Cap build_cap(const ConvexFunction& phi_a, const ConvexFunction& phi_b, double t0, double t1,
                     const AnalysisConfig& cfg = {}) {
  if (!(0.0 < t0 && t0 < t1 && t1 < 1.0)) throw PreconditionError("build_cap needs 0 < t0 < t1 < 1");
  const int m = phi_a.dim();
  const auto pts = detail::comparison_points(m, detail::kOrderRadius, 2000, cfg.seed);
  double spread = 0.0;
  for (const auto& x : pts) spread = std::max(spread, phi_a(x) - phi_b(x));
  if (!(spread > 1e-12)) throw PreconditionError("build_cap: phi_b = phi_a at every sample, the cap is empty");

  Cap cap;
  cap.t0 = t0;
  cap.t1 = t1;
  cap.base = interpolate(phi_a, phi_b, t0, cfg.seed);
  cap.top = interpolate(phi_a, phi_b, t1, cfg.seed);
  cap.family = "interp(" + phi_a.descriptor() + "," + phi_b.descriptor() + ",t)";

  // (c) the two surfaces agree beyond some radius, found by a radial scan
  const auto dirs = sphere_directions(m, cfg.direction_count);
  std::vector<double> radii;
  for (int i = 0; i <= 400; ++i) radii.push_back(i * 0.05);
  for (double t = 32.0; t <= 1e15; t *= 1.25) radii.push_back(t);
  double last_diff = 0.0;
  for (const auto& v : dirs) {
    for (double t : radii) {
      const Vec x = detail::scaled(v.vec(), t);
      const double a = cap.base(x), b = cap.top(x);
      if (a - b > 1e-9 * (1.0 + std::fabs(a))) last_diff = std::max(last_diff, t);
    }
  }
  if (last_diff >= radii.back()) throw PreconditionError("build_cap: the surfaces never agree, the cap is unbounded");
  // next scan point past the last disagreement
  cap.match_radius = *std::upper_bound(radii.begin(), radii.end(), last_diff);
  cap.agree_outside = Status::Holds;

  // (a) strict convexity of the level graphs inside the cap region
  const double R = std::max(1.0, cap.match_radius);
  const bool sa = convexity_check(cap.base, R, 1000, true, cfg.seed).ok();
  const bool sb = convexity_check(cap.top, R, 1000, true, cfg.seed + 1).ok();
  cap.strict_convexity = sa && sb ? Status::Holds : Status::Fails;

  // (b) ρ_t ≤ 0 on M_s for s < t: ψ_t ≤ ψ_s along t0 < t_mid < t1
  const double tm = 0.5 * (t0 + t1);
  const LevelSetFunction rho_mid = levelset_rho(interpolate(phi_a, phi_b, tm, cfg.seed));
  const LevelSetFunction rho_top = levelset_rho(cap.top);
  bool mono = true;
  Rng rng(cfg.seed + 2);
  for (int i = 0; i < 2000 && mono; ++i) {
    Vec z = sample_ball(rng, m, R);
    z.push_back(cap.base(z));
    mono = rho_mid.rho(z) <= 1e-12 && rho_top.rho(z) <= 1e-12;
    z.back() = rho_mid.psi(std::span<const double>(z).first(static_cast<std::size_t>(m)));
    mono = mono && rho_top.rho(z) <= 1e-12;
  }
  cap.monotone = mono ? Status::Holds : Status::Fails;

  // bounding box: |x| ≤ match radius, y between the sampled extremes of the two surfaces
  double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
  for (const auto& v : dirs)
    for (int i = 0; i <= 400; ++i) {
      const Vec x = detail::scaled(v.vec(), cap.match_radius * i / 400.0);
      ylo = std::min(ylo, cap.top(x));
      yhi = std::max(yhi, cap.base(x));
    }
  cap.box_lo.assign(static_cast<std::size_t>(m), -cap.match_radius);
  cap.box_hi.assign(static_cast<std::size_t>(m), cap.match_radius);
  cap.box_lo.push_back(ylo);
  cap.box_hi.push_back(yhi);
  return cap;
}

}  // namespace bceh
