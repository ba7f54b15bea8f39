#pragma once

// Smooth convex minorants with BCEH epigraphs: ψ = r·φ + δ·H, H(x) = ∫_0^{|x|} h, for
// φ ≥ 0 with compact zero set.

#include <bceh/bceh.hpp>
#include <bceh/hulls.hpp>
#include <bceh/numerics.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace bceh {

struct GrowthConstant {
  double value = 0.0;        // liminf φ(x)/|x|; cfg.growth_cap when superlinear everywhere
  bool superlinear = false;  // every sampled direction has infinite recession slope
  Vec worst_direction;       // direction attaining the minimum
};

namespace detail {

inline std::string vec_string(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

}  // namespace detail

/// A = liminf φ(x)/|x| over the sampled directions.
inline GrowthConstant growth_constant(const ConvexFunction& f, const AnalysisConfig& cfg = {}) {
  cfg.validate();
  const auto dirs = sphere_directions(f.dim(), cfg.direction_count);
  GrowthConstant out;
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& v : dirs) {
    const ExtendedReal s = recession_slope(f, v, cfg.t_schedule);
    if (s.is_finite() && s.value() <= cfg.growth_floor)
      throw PreconditionError("sublinear growth along v = " + detail::vec_string(v.vec()) + ": recession slope " +
                              std::to_string(s.value()) + " (linear coordinates are not changed automatically)");
    if (s.value() < out.value || out.worst_direction.empty()) {
      if (s.value() < out.value) out.value = s.value();
      out.worst_direction = v.vec();
    }
    if (!(f(detail::scaled(v.vec(), cfg.zero_set_radius)) > 0.0))
      throw PreconditionError("zero set is not contained in the ball of radius " + std::to_string(cfg.zero_set_radius));
  }
  if (!(f(Vec(static_cast<std::size_t>(f.dim()), 0.0)) >= -1e-12)) throw PreconditionError("phi must be nonnegative");
  if (std::isinf(out.value)) {
    out.superlinear = true;
    out.value = cfg.growth_cap;
  }
  return out;
}

/// The smoothed shifted Arctan profile h(t) = Σ w_i·max(0, (2/π)·atan(t − s_i − R − w))
/// and its primitive H. Vanishes for t ≤ R, increases to 1, ∫(1 − h) diverges.
struct ArctanProfile {
  double R = 0.0;
  double width = 0.0;
  std::vector<double> shifts;   // s_i ∈ [−w, w]
  std::vector<double> weights;  // sum to 1

  static ArctanProfile make(double R, double width, int nodes = 64) {
    ArctanProfile p{R, width, {}, {}};
    const detail::KernelRule k = detail::bump_rule(nodes);
    for (std::size_t i = 0; i < k.offsets.size(); ++i) {
      p.shifts.push_back(width * k.offsets[i]);
      p.weights.push_back(k.weights[i]);
    }
    return p;
  }

  double u(std::size_t i, double t) const { return t - shifts[i] - R - width; }

  double h(double t) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      const double ui = u(i, t);
      if (ui > 0.0) acc += weights[i] * (2.0 / std::numbers::pi) * std::atan(ui);
    }
    return acc;
  }

  double H(double t) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      const double ui = u(i, t);
      if (ui > 0.0) acc += weights[i] * detail::arctan_primitive_value(ui);
    }
    return acc;
  }

  /// ∫_0^t (h(t) − h(s)) ds = t·h(t) − H(t), summed in a form without cancellation.
  double tail_integral(double t) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < shifts.size(); ++i) {
      const double ui = u(i, t);
      if (ui <= 0.0) continue;
      const double half_log = ui > 1e8 ? std::log(ui) + 0.5 * std::log1p(1.0 / (ui * ui)) : 0.5 * std::log1p(ui * ui);
      acc += weights[i] * (2.0 / std::numbers::pi) * (half_log + (shifts[i] + R + width) * std::atan(ui));
    }
    return acc;
  }

  /// tail_integral(e^L); past the double range the sum is replaced by its asymptote
  /// (2/π)·L + Σ w_i·(s_i + R + w), exact to O(e^{−L}).
  double tail_integral_log(double L) const {
    if (L < 690.0) return tail_integral(std::exp(L));
    double acc = (2.0 / std::numbers::pi) * L;
    for (std::size_t i = 0; i < shifts.size(); ++i) acc += weights[i] * (shifts[i] + R + width);
    return acc;
  }
};

/// Per ladder level: the proof's t0 = 3c, a, t1 and the resulting lower bound for ξ_v.
struct LadderCertificate {
  double c = 0.0;
  double t0 = 0.0;
  double a = 0.0;
  double log_t1 = 0.0;       // natural log of t1 (t1 is typically astronomically large)
  double log_t_star = 0.0;   // log max(t0, t1)
  double min_bound = 0.0;    // min over v of the two-integral lower bound at t*
  double min_xi = 0.0;       // min over v of ξ_v(t*), with the δH part in closed form
  bool t_star_representable = false;  // otherwise g_v is taken at 1e300, where it has converged
  bool ok = false;
};

struct MinorantVerification {
  Status convexity = Status::Inconclusive;
  double max_excess_over_phi = 0.0;  // max(ψ − φ) over samples; ≤ 0 required
  int strict_violations = 0;         // samples with φ > 0 but ψ ≥ φ
  double max_gap_on_R = 0.0;         // max(φ − ψ) on |x| ≤ R; < ε required
  Status bceh = Status::Inconclusive;
  std::vector<LadderCertificate> ladder;
};

struct MinorantRecipe {
  double r = 0.0;
  double delta = 0.0;
  double A = 0.0;
  bool A_superlinear = false;
  double R = 0.0;            // after enlargement
  double R_requested = 0.0;
  double epsilon = 0.0;
  double sup_phi_on_R = 0.0;
  bool premollified = false;
  ArctanProfile h_spec;
  ConvexFunction phi;        // the function actually minorised (after optional smoothing)
  ConvexFunction psi;
  MinorantVerification verification;
};

struct MinorantOptions {
  bool premollify = false;  // smooth φ first with width 1e-3·(1+R), shifted down to stay below φ
  int postcheck_samples = 10000;
  bool certify_ladder = true;
};

namespace detail {

inline double sup_on_ball(const ConvexFunction& f, double R, const std::vector<Direction>& dirs) {
  // a convex function attains its maximum over the ball on the sphere
  double s = f(Vec(static_cast<std::size_t>(f.dim()), 0.0));
  for (const auto& v : dirs) s = std::max(s, f(scaled(v.vec(), R)));
  return s;
}

inline ConvexFunction assemble_minorant(const ConvexFunction& phi, double r, double delta, const ArctanProfile& prof) {
  auto value = [phi, r, delta, prof](std::span<const double> x) { return r * phi(x) + delta * prof.H(norm(x)); };
  ConvexFunction::GradFn grad;
  if (phi.has_analytic_gradient())
    grad = [phi, r, delta, prof](std::span<const double> x, std::span<double> g) {
      const auto s = phi.gradient(x);
      const double n = norm(x);
      const double k = n > 0.0 ? delta * prof.h(n) / n : 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = r * s.g[i] + k * x[i];
    };
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", r, delta, prof.R);
  ConvexFunction::Traits t{.radial = phi.traits().radial, .may_be_nonsmooth = phi.traits().may_be_nonsmooth,
                           .certified_convex = false};
  return {phi.dim(), "minorant(" + phi.descriptor() + "," + buf + ")", value, grad, t};
}

}  // namespace detail

/// The ladder certificate of the BCEH argument for ψ = rφ + δH at level c.
inline LadderCertificate ladder_certificate(const MinorantRecipe& rec, double c, const AnalysisConfig& cfg = {}) {
  const auto dirs = sphere_directions(rec.psi.dim(), cfg.direction_count);
  LadderCertificate out;
  out.c = c;
  out.t0 = 3.0 * c;
  auto g = [&](const Direction& v, double t) { return rec.r * rec.phi.directional(detail::scaled(v.vec(), t), v); };
  double gmax = 0.0;
  for (const auto& v : dirs) gmax = std::max(gmax, g(v, out.t0));
  out.a = std::max(3.0 * gmax, 3.0 * rec.delta);

  // t1: first t with δ·tail_integral(t) > a·c, by bisection on log t
  const double target = out.a * c / rec.delta;
  double lo = std::log(std::max(rec.R, 1.0)), hi = lo + 1.0;
  while (rec.h_spec.tail_integral_log(hi) <= target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) {
      out.log_t1 = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (rec.h_spec.tail_integral_log(mid) > target) hi = mid;
    else lo = mid;
  }
  out.log_t1 = hi;
  out.log_t_star = std::max(std::log(out.t0), out.log_t1);
  // t* beyond the double range: g_v and k are evaluated at the largest representable
  // abscissa, where both have reached their limits to working precision
  const bool representable = out.log_t_star < 690.0;
  const double ts = representable ? std::exp(out.log_t_star) : 1e300;
  const double kt = rec.delta * rec.h_spec.h(ts);
  // ∫_0^{t1}(k(t*) − k(s)) ds = δ·tail(t1) + t1·(k(t*) − k(t1)); the second term is ≥ 0
  // and dropped when t1 is not representable
  double second_num = rec.delta * rec.h_spec.tail_integral_log(out.log_t1);
  if (out.log_t1 < 690.0) {
    const double t1 = std::exp(out.log_t1);
    second_num += t1 * (kt - rec.delta * rec.h_spec.h(t1));
  }

  out.min_bound = out.min_xi = std::numeric_limits<double>::infinity();
  const double psi0 = rec.psi(Vec(static_cast<std::size_t>(rec.psi.dim()), 0.0));
  const double k_part = rec.delta * rec.h_spec.tail_integral_log(out.log_t_star);
  for (const auto& v : dirs) {
    const double gt = g(v, ts);
    const double denom = gt + rec.delta;
    // g_v is nondecreasing, so negative differences are roundoff
    auto gap = [&](double s) { return std::max(0.0, gt - g(v, s)); };
    double first = 0.0;
    for (double a0 = 0.0; a0 < out.t0; a0 += 1.0) first += integrate(gap, a0, std::min(a0 + 1.0, out.t0));
    out.min_bound = std::min(out.min_bound, (first + second_num) / denom);
    // ξ_v(t*) = (∫_0^t (g_v(t) − g_v(s)) ds + δ·tail(t) − ψ(0)) / (g_v(t) + k(t)); the k part
    // uses the closed form, so only the (nonnegative) g part is subject to cancellation
    double g_part = integrate(gap, 0.0, std::min(ts, 1.0));
    for (double a0 = 1.0; a0 < ts; a0 *= 2.0) g_part += integrate(gap, a0, std::min(2.0 * a0, ts));
    out.min_xi = std::min(out.min_xi, (g_part + k_part - psi0) / (gt + kt));
  }
  out.t_star_representable = representable;
  out.ok = out.min_bound >= c * (1.0 - 1e-9) && out.min_xi >= c * (1.0 - 1e-9);
  return out;
}

/// Builds ψ = r·φ + δ·H with ψ ≤ φ, φ − ψ < ε on |x| ≤ R and BCEH; every postcondition
/// is verified and a failure raises ConstructionError.
inline MinorantRecipe bceh_minorant(const ConvexFunction& f, double epsilon, double R, const AnalysisConfig& cfg = {},
                                    const MinorantOptions& opt = {}) {
  if (!(epsilon > 0.0) || !(R > 0.0)) throw PreconditionError("bceh_minorant needs epsilon > 0 and R > 0");
  cfg.validate();
  MinorantRecipe rec;
  rec.epsilon = epsilon;
  rec.R_requested = R;
  const auto dirs = sphere_directions(f.dim(), cfg.direction_count);

  ConvexFunction phi = f;
  if (opt.premollify) {
    const double w = 1e-3 * (1.0 + R);
    const ConvexFunction smooth = mollify(f, w);
    // convolution lies above φ; shift it down by the largest sampled excess
    double excess = 0.0;
    Rng rng(cfg.seed);
    for (int i = 0; i < 2000; ++i) {
      const Vec x = sample_ball(rng, f.dim(), 4.0 * R);
      excess = std::max(excess, smooth(x) - f(x));
    }
    // random points miss kinks narrower than w; on the line a grid finer than w catches them
    if (f.dim() == 1) {
      const long n = static_cast<long>(std::ceil(8.0 * R / (0.125 * w)));
      auto gap = [&](double x) { return smooth({x}) - f({x}); };
      auto at = [&](long i) { return -4.0 * R + 8.0 * R * static_cast<double>(i) / static_cast<double>(n); };
      std::vector<double> v(static_cast<std::size_t>(n + 1));
      for (long i = 0; i <= n; ++i) v[static_cast<std::size_t>(i)] = gap(at(i));
      // the gap has a corner at each kink of f, so refine every local maximum
      for (long i = 0; i <= n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        excess = std::max(excess, v[k]);
        if (i > 0 && i < n && v[k] >= v[k - 1] && v[k] >= v[k + 1] && v[k] > 0.0)
          excess = std::max(excess, golden_max(gap, at(i - 1), at(i + 1)).second);
      }
    }
    phi = translate(smooth, -excess);
    rec.premollified = true;
  }
  rec.phi = phi;

  const GrowthConstant gc = growth_constant(f, cfg);
  rec.A_superlinear = gc.superlinear;

  // Enlarge R until φ(tv)/t ≥ A/2 at every sampled t ≥ R.
  double A = gc.value;
  auto ratio_ok = [&](double Rc, double Ac) {
    for (const auto& v : dirs) {
      if (phi(detail::scaled(v.vec(), Rc)) / Rc < Ac / 2.0) return false;
      for (double t : cfg.t_schedule)
        if (t > Rc && phi(detail::scaled(v.vec(), t)) / t < Ac / 2.0) return false;
    }
    return true;
  };
  if (gc.superlinear) {
    // no finite liminf: any A with φ(x)/|x| ≥ A/2 beyond R serves; take the secant bound at R
    A = std::numeric_limits<double>::infinity();
    while (!(A > 0.0) || std::isinf(A)) {
      A = std::numeric_limits<double>::infinity();
      for (const auto& v : dirs) A = std::min(A, 2.0 * phi(detail::scaled(v.vec(), R)) / R);
      if (!(A > 0.0)) R *= 2.0;
      if (R > 1e12) throw ConstructionError("could not find a positive growth bound");
    }
  }
  while (!ratio_ok(R, A)) {
    R *= 2.0;
    if (R > 1e12) throw ConstructionError("R enlargement did not terminate");
  }
  rec.A = A;
  rec.R = R;
  rec.sup_phi_on_R = detail::sup_on_ball(phi, R, dirs);
  rec.r = std::max(0.9, 1.0 - epsilon / (1.0 + rec.sup_phi_on_R));
  rec.delta = A * (1.0 - rec.r) / 2.0;
  rec.h_spec = ArctanProfile::make(R, 1e-3 * (1.0 + R));
  rec.psi = detail::assemble_minorant(phi, rec.r, rec.delta, rec.h_spec);

  // postconditions
  auto& ver = rec.verification;
  const ConvexFunction& psi = rec.psi;
  ver.convexity = convexity_check(psi, 4.0 * R, opt.postcheck_samples, false, cfg.seed).status;
  ver.max_excess_over_phi = -std::numeric_limits<double>::infinity();
  Rng rng(cfg.seed + 1);
  auto probe = [&](const Vec& x) {
    const double a = f(x), b = psi(x);
    ver.max_excess_over_phi = std::max(ver.max_excess_over_phi, b - a);
    if (a > 0.0 && !(b < a)) ++ver.strict_violations;
  };
  for (int i = 0; i < opt.postcheck_samples; ++i) probe(sample_ball(rng, f.dim(), 4.0 * R));
  for (const auto& v : dirs)
    for (double t : cfg.t_schedule) probe(detail::scaled(v.vec(), t));

  if (f.dim() == 1) {
    const long n = static_cast<long>(std::ceil(2.0 * R / 1e-3));
    for (long i = 0; i <= n; ++i) {
      const double x = -R + 2.0 * R * static_cast<double>(i) / static_cast<double>(n);
      ver.max_gap_on_R = std::max(ver.max_gap_on_R, f({x}) - psi({x}));
    }
  } else {
    for (int i = 0; i < opt.postcheck_samples; ++i) {
      const Vec x = sample_ball(rng, f.dim(), R);
      ver.max_gap_on_R = std::max(ver.max_gap_on_R, f(x) - psi(x));
    }
  }
  ver.bceh = bceh_verdict(psi, cfg).status;
  if (opt.certify_ladder)
    for (double c : cfg.xi_target_ladder) ver.ladder.push_back(ladder_certificate(rec, c, cfg));

  std::vector<std::string> failed;
  if (ver.convexity != Status::Holds) failed.push_back("convexity");
  if (ver.max_excess_over_phi > 1e-12 * (1.0 + rec.sup_phi_on_R)) failed.push_back("psi <= phi");
  if (!(ver.max_gap_on_R < epsilon)) failed.push_back("closeness on |x| <= R");
  if (ver.bceh != Status::Holds) failed.push_back("bceh_verdict");
  for (const auto& l : ver.ladder)
    if (!l.ok) failed.push_back("ladder certificate at c = " + std::to_string(l.c));
  if (!failed.empty()) {
    std::ostringstream os;
    os << "minorant postconditions failed:";
    for (const auto& s : failed) os << " [" << s << "]";
    os << " (r = " << rec.r << ", delta = " << rec.delta << ", A = " << rec.A << ", R = " << rec.R
       << ", max(psi - phi) = " << ver.max_excess_over_phi << ", max gap on R = " << ver.max_gap_on_R << ")";
    throw ConstructionError(os.str());
  }
  return rec;
}

/// φ(x) = ∫_0^x (2/π)·atan, with the closed-form tangent intercept attached.
struct ArctanExample {
  ConvexFunction phi;
  std::function<double(double)> xi;  // log(1+x²)/(2·atan x), x > 0
};

inline ArctanExample arctan_example() {
  return {builtin("arctan_primitive"), [](double x) {
            const double half_log = x > 1e8 ? std::log(x) + 0.5 * std::log1p(1.0 / (x * x)) : 0.5 * std::log1p(x * x);
            return half_log / std::atan(x);
          }};
}

}  // namespace bceh
