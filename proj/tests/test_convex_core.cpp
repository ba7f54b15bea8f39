#include <bceh/convex_core.hpp>

#include <catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace bceh;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const ConvexFunction parabola = builtin("parabola", {1.0});
const ConvexFunction cone = builtin("truncated_cone", {1.0});
const ConvexFunction hyperbola = builtin("hyperbola");
const ConvexFunction arctan = builtin("arctan_primitive");
}  // namespace

TEST_CASE("evaluate and gradient") {
  CHECK(evaluate(parabola, std::vector{3.0}) == 9.0);
  CHECK(evaluate(cone, std::vector{0.5}) == 0.0);
  CHECK_THAT(evaluate(arctan, std::vector{1.0}), WithinAbs((2 / std::numbers::pi) * (std::numbers::pi / 4 - 0.5 * std::log(2.0)), 1e-14));
  CHECK_THAT(gradient(parabola, std::vector{3.0}).g[0], WithinAbs(6.0, 1e-12));
  CHECK_THAT(gradient(hyperbola, std::vector{1.0}).g[0], WithinAbs(0.70711, 1e-5));
  CHECK_THAT(gradient(arctan, std::vector{1.0}).g[0], WithinAbs(0.5, 1e-12));
  CHECK_THROWS_AS(evaluate(parabola, std::vector{1.0, 2.0}), PreconditionError);
}

TEST_CASE("sample_ball stays in the ball and is reproducible") {
  Rng a(1), b(1);
  for (int i = 0; i < 200; ++i) {
    const Vec x = sample_ball(a, 3, 2.0);
    CHECK(norm(x) <= 2.0 + 1e-12);
    CHECK(x == sample_ball(b, 3, 2.0));
  }
}

TEST_CASE("sphere_directions") {
  CHECK(sphere_directions(1).size() == 2);
  CHECK(sphere_directions(2).size() == 64);
  CHECK(sphere_directions(3).size() == 512);
  CHECK(sphere_directions(4).size() == 1024);
  CHECK(sphere_directions(7).size() == 4096);
  for (const auto& d : sphere_directions(3, 100)) CHECK_THAT(norm(d.vec()), WithinAbs(1.0, 1e-12));
}

TEST_CASE("convexity_check") {
  CHECK(convexity_check(parabola, 10, 1000, true).ok());
  const Verdict flat = convexity_check(cone, 10, 1000, true);
  REQUIRE(flat.status == Status::Fails);
  REQUIRE(flat.witness.has_value());
  // witness is (a, b, t) with a and b on one affine piece of the cone
  const auto& w = *flat.witness;
  auto piece = [](double x) { return x <= -1 ? -1 : (x >= 1 ? 1 : 0); };
  CHECK(piece(w[0]) == piece(w[1]));
  const double mid = w[2] * w[0] + (1 - w[2]) * w[1];
  CHECK(cone({mid}) >= w[2] * cone({w[0]}) + (1 - w[2]) * cone({w[1]}) - 1e-12);
  CHECK(convexity_check(parse_function("-x1^2", 1), 10, 1000, false).status == Status::Fails);
  CHECK(convexity_check(cone, 10, 1000, false).ok());
}

TEST_CASE("legendre_conjugate against closed forms") {
  GridSpec grid{10.0, 1e-3, 3};
  CHECK_THAT(legendre_conjugate(parabola, {1.0}, grid).value(), WithinAbs(0.25, 1e-3));
  CHECK_THAT(legendre_conjugate(parabola, {0.0}).value(), WithinAbs(0.0, 1e-12));
  CHECK(legendre_conjugate(cone, {2.0}, GridSpec{10.0, 1e-2, 3}).is_infinite());
  for (double a : {-3.0, -0.5, 0.7, 2.0})
    CHECK_THAT(legendre_conjugate(parabola, {a}).value(), WithinAbs(a * a / 4, 1e-6));
  // hyperbola: φ*(a) = −√(1−a²) for |a| ≤ 1
  CHECK_THAT(legendre_conjugate(hyperbola, {0.6}).value(), WithinAbs(-0.8, 1e-6));
}

TEST_CASE("conjugate inequality against brute force") {
  for (double a : {-2.0, -0.3, 0.0, 0.9, 1.7}) {
    const GridSpec grid{5.0, 1e-2, 3};
    const double c = legendre_conjugate(parabola, {a}, grid).value();
    const double brute = oracle::conjugate_grid([](double x) { return x * x; }, a, 5.0, 1e-3);
    CHECK(brute <= c + grid.step * (1 + std::fabs(a)));
    for (double x = -5; x <= 5; x += 0.37) CHECK(a * x - x * x <= c + grid.step * (1 + std::fabs(a)));
  }
}

TEST_CASE("enlarging the grid radius never decreases the conjugate") {
  for (double a : {0.3, 0.99, 1.5}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double R : {1.0, 3.0, 10.0, 100.0}) {
      const auto v = legendre_conjugate(hyperbola, {a}, GridSpec{R, 1e-2, 3});
      const double x = v.value();
      CHECK(x >= prev - 1e-12);
      prev = x;
    }
  }
}

TEST_CASE("support_function") {
  const Epigraph E{parabola};
  CHECK_THAT(support_function(E, Direction{1.0, -1.0}, GridSpec{10.0, 1e-2, 3}).value(), WithinAbs(0.17678, 1e-5));
  CHECK_THAT(support_function(E, Direction{0.0, -1.0}).value(), WithinAbs(0.0, 1e-12));
  CHECK(support_function(E, Direction{0.0, 1.0}).is_infinite());
  // σ at −e_y is −min φ
  const Epigraph S{translate(builtin("parabola", {1.0}, 2), 3.0)};
  CHECK_THAT(support_function(S, Direction{0.0, 0.0, -1.0}).value(), WithinAbs(-3.0, 1e-9));
}

TEST_CASE("recession_slope") {
  const auto s = default_schedule();
  CHECK(recession_slope(parabola, Direction{1.0}, s).is_infinite());
  CHECK_THAT(recession_slope(cone, Direction{1.0}, s).value(), WithinAbs(1.0, 1e-6));
  CHECK_THAT(recession_slope(hyperbola, Direction{1.0}, s).value(), WithinAbs(1.0, 1e-6));
  CHECK_THAT(recession_slope(arctan, Direction{-1.0}, s).value(), WithinAbs(1.0, 1e-6));
  CHECK_THROWS_AS(recession_slope(cone, Direction{1.0}, std::vector{1.0, 2.0}), PreconditionError);
}

TEST_CASE("recession slope of a sum is the sum of slopes") {
  const auto s = default_schedule();
  const std::vector<ConvexFunction> finite = {cone, hyperbola, arctan, builtin("truncated_cone", {3.0})};
  for (const auto& f : finite)
    for (const auto& g : finite)
      for (double v : {1.0, -1.0}) {
        const double a = recession_slope(f, Direction{v}, s).value();
        const double b = recession_slope(g, Direction{v}, s).value();
        CHECK_THAT(recession_slope(sum(f, g), Direction{v}, s).value(), WithinRel(a + b, 1e-4));
      }
  CHECK(recession_slope(sum(cone, parabola), Direction{1.0}, s).is_infinite());
}

TEST_CASE("section_conjugate agrees with the sweep") {
  for (double a : {0.2, 0.5, 0.9})
    CHECK_THAT(section_conjugate(hyperbola, {1.0}, a).value(), WithinAbs(-std::sqrt(1 - a * a), 1e-7));
  CHECK(section_conjugate(cone, {1.0}, 1.5).is_infinite());
}
