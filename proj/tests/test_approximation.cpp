#include <bceh/approximation.hpp>

#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace bceh;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const ConvexFunction cone = builtin("truncated_cone", {1.0});
const ConvexFunction arctan = builtin("arctan_primitive");
const ConvexFunction parabola = builtin("parabola", {1.0});
}  // namespace

TEST_CASE("growth_constant") {
  const auto g = growth_constant(cone);
  CHECK_THAT(g.value, WithinAbs(1.0, 1e-4));
  CHECK_FALSE(g.superlinear);
  const auto p = growth_constant(parabola);
  CHECK(p.superlinear);
  CHECK(p.value == AnalysisConfig{}.growth_cap);
  CHECK_THAT(growth_constant(arctan).value, WithinAbs(1.0, 1e-4));
  CHECK_THAT(growth_constant(builtin("truncated_cone", {1.0}, 2)).value, WithinAbs(1.0, 1e-4));
  CHECK_THAT(growth_constant(parse_function("max(0, 2*x1 - 1, -x1/2 - 1)", 1)).value, WithinAbs(0.5, 1e-4));
}

TEST_CASE("growth_constant failures name the direction") {
  CHECK_THROWS_WITH(growth_constant(parse_function("max(0, x1)", 1)), ContainsSubstring("v = (-1)"));
  CHECK_THROWS_AS(growth_constant(translate(cone, -1.0)), PreconditionError);
  CHECK_THROWS_AS(growth_constant(parse_function("max(0, abs(x1) - 1e7)", 1)), PreconditionError);
}

TEST_CASE("arctan profile") {
  const auto h = ArctanProfile::make(2.0, 0.01);
  double sum = 0.0;
  for (double w : h.weights) sum += w;
  CHECK_THAT(sum, WithinAbs(1.0, 1e-14));
  for (double t : {-5.0, 0.0, 1.0, 2.0, 2.0 - 1e-9}) CHECK(h.h(t) == 0.0);
  for (double t : {0.0, 1.0, 2.0}) CHECK(h.H(t) == 0.0);
  double prev = 0.0;
  for (double t = 2.0; t < 1e6; t *= 1.3) {
    const double v = h.h(t);
    CHECK(v >= prev);
    CHECK(v < 1.0);
    prev = v;
  }
  CHECK_THAT(h.h(1e12), WithinAbs(1.0, 1e-11));
  // H' = h and the tail integral is t·h(t) − H(t) = ∫_0^t (h(t) − h(s)) ds
  for (double t : {2.5, 4.0, 30.0, 1e3}) {
    const double d = 1e-5 * t;
    CHECK_THAT((h.H(t + d) - h.H(t - d)) / (2 * d), WithinAbs(h.h(t), 1e-7));
    CHECK_THAT(h.tail_integral(t), WithinRel(t * h.h(t) - h.H(t), 1e-9));
    double numeric = 0.0;
    const double ht = h.h(t);
    for (double a = 0.0; a < t; a += 0.005) numeric += integrate([&](double s) { return ht - h.h(s); }, a, std::min(a + 0.005, t), 8);
    CHECK_THAT(h.tail_integral(t), WithinRel(numeric, 1e-4));
  }
  // ∫(1 − h) diverges: the tail grows like (2/π)·log t
  CHECK_THAT(h.tail_integral(1e8) - h.tail_integral(1e4), WithinRel((2 / std::numbers::pi) * std::log(1e4), 1e-4));
  CHECK_THAT(h.tail_integral_log(689.0), WithinRel(h.tail_integral_log(691.0) - 2.0 * 2 / std::numbers::pi, 1e-12));
  CHECK_THAT(h.tail_integral_log(std::log(1e200)), WithinRel(h.tail_integral(1e200), 1e-12));
}

TEST_CASE("minorant recipe for the truncated cone") {
  const auto rec = bceh_minorant(cone, 0.1, 2.0);
  CHECK_THAT(rec.A, WithinAbs(1.0, 1e-4));
  CHECK(rec.R == 2.0);
  CHECK_THAT(rec.sup_phi_on_R, WithinAbs(1.0, 1e-12));
  CHECK(rec.r == 0.95);
  CHECK(rec.delta == rec.A * (1 - rec.r) / 2);
  CHECK_THAT(rec.delta, WithinAbs(0.025, 1e-5));
  CHECK(rec.psi({0.0}) == 0.0);
  CHECK(rec.verification.convexity == Status::Holds);
  CHECK(rec.verification.bceh == Status::Holds);
  CHECK(rec.verification.max_gap_on_R < 0.1);
  CHECK(rec.verification.max_excess_over_phi <= 0.0);
  CHECK(rec.verification.strict_violations == 0);
  REQUIRE(rec.verification.ladder.size() == AnalysisConfig{}.xi_target_ladder.size());
  for (const auto& l : rec.verification.ladder) {
    CHECK(l.ok);
    CHECK(l.t0 == 3 * l.c);
    CHECK(l.min_xi >= l.c);
  }
}

TEST_CASE("minorant invariants") {
  struct Case {
    ConvexFunction f;
    double eps, R;
  };
  for (const auto& c : {Case{cone, 0.1, 2.0}, Case{arctan, 0.05, 5.0}, Case{parabola, 0.1, 2.0},
                        Case{builtin("truncated_cone", {0.5}), 0.02, 3.0}}) {
    const auto rec = bceh_minorant(c.f, c.eps, c.R);
    const double R = rec.R;
    Rng rng(21);
    for (int i = 0; i < 10000; ++i) {
      const Vec x = sample_ball(rng, 1, 6.0 * R);
      const double phi = c.f(x), psi = rec.psi(x);
      INFO(c.f.descriptor() << " x = " << x[0]);
      CHECK(psi >= rec.r * phi - 1e-12);
      if (phi > 0.0) CHECK(psi < phi);
      if (std::fabs(x[0]) <= R) {
        CHECK(psi == rec.r * phi);
        CHECK(phi - psi < c.eps);
      } else {
        CHECK(psi / std::fabs(x[0]) <= phi / std::fabs(x[0]));
      }
    }
    for (const auto& l : rec.verification.ladder) CHECK(l.ok);
  }
}

TEST_CASE("minorant of the arctan primitive") {
  const auto rec = bceh_minorant(arctan, 0.05, 5.0);
  CHECK(bceh_verdict(rec.psi).ok());
  CHECK(rec.verification.strict_violations == 0);
  CHECK_FALSE(rec.A_superlinear);
}

TEST_CASE("minorant of a superlinear function uses the secant bound") {
  const auto rec = bceh_minorant(parabola, 0.1, 2.0);
  CHECK(rec.A_superlinear);
  CHECK_THAT(rec.A, WithinAbs(4.0, 1e-12));  // 2·φ(R)/R
}

TEST_CASE("minorant in two variables") {
  const auto rec = bceh_minorant(builtin("truncated_cone", {1.0}, 2), 0.1, 2.0);
  CHECK(rec.r == std::max(0.9, 1.0 - 0.1 / (1.0 + rec.sup_phi_on_R)));
  CHECK_THAT(rec.sup_phi_on_R, WithinAbs(rec.R - 1.0, 1e-9));
  CHECK(rec.verification.bceh == Status::Holds);
  CHECK(rec.psi({0.0, 0.0}) == 0.0);
}

TEST_CASE("R is enlarged until the ratio bound holds") {
  // φ(x)/|x| reaches half its limit only far out
  const auto f = builtin("truncated_cone", {10.0});
  const auto rec = bceh_minorant(f, 0.1, 1.0);
  CHECK(rec.R_requested == 1.0);
  CHECK(rec.R >= 20.0);
  CHECK(f({rec.R}) / rec.R >= rec.A / 2);
}

TEST_CASE("minorant construction errors") {
  CHECK_THROWS_AS(bceh_minorant(cone, 0.0, 2.0), PreconditionError);
  CHECK_THROWS_AS(bceh_minorant(parse_function("max(0, x1)", 1), 0.1, 2.0), PreconditionError);
  // not convex: the postchecks must refuse it
  CHECK_THROWS_AS(bceh_minorant(parse_function("min(abs(x1), 1) + abs(x1)/2", 1), 0.1, 2.0), ConstructionError);
}

TEST_CASE("premollified minorant stays below phi") {
  MinorantOptions opt;
  opt.premollify = true;
  opt.postcheck_samples = 2000;
  const auto rec = bceh_minorant(cone, 0.1, 2.0, {}, opt);
  CHECK(rec.premollified);
  CHECK(rec.verification.max_excess_over_phi <= 0.0);
  CHECK(rec.phi.gradient(std::vector{1.0}).g[0] > 0.0);
}

TEST_CASE("arctan example") {
  const auto ex = arctan_example();
  for (double t : {1.0, 10.0, 100.0, 1e4, 1e6}) CHECK_THAT(ex.xi(t), WithinRel(oracle::arctan_xi(t), 1e-12));
  CHECK_THAT(ex.xi(100.0), WithinAbs(2.9506, 1e-4));
  CHECK_THAT(ex.xi(1e6), WithinAbs(8.797, 1e-2));
  CHECK(ex.xi(1e200) > 100.0);
  CHECK(ex.phi({0.0}) == 0.0);
}
