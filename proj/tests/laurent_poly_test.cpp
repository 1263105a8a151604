#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "loggauss/laurent_poly.hpp"
#include "loggauss/parallel.hpp"
#include "oracles.hpp"

namespace loggauss {
namespace {

using testing::fd_log_gradient;
using testing::random_laurent;
using testing::random_torus_point;

constexpr Complex I{0.0, 1.0};
using Point = std::vector<Complex>;

TEST(ParsePoly, LinearPolynomial) {
  const LaurentPoly p = parse_poly("z1 + z2 - 1", 2);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p.coefficient({1, 0}), Complex(1.0));
  EXPECT_EQ(p.coefficient({0, 1}), Complex(1.0));
  EXPECT_EQ(p.coefficient({0, 0}), Complex(-1.0));
}

TEST(ParsePoly, Hyperbola) {
  const LaurentPoly p = parse_poly("z1*z2 - 1", 2);
  const LaurentPoly expected(2, {{{1, 1}, 1.0}, {{0, 0}, -1.0}});
  EXPECT_EQ(p, expected);
}

TEST(ParsePoly, ComplexCoefficientNegativeExponent) {
  const LaurentPoly p = parse_poly("(0+1i)*z1^-2", 2);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p.coefficient({-2, 0}), I);
}

TEST(ParsePoly, WhitespaceAndRepeatedFactorsAreCombined) {
  EXPECT_EQ(parse_poly("  2 * z1 *z1^ -3 * z2  ", 2), LaurentPoly(2, {{{-2, 1}, 2.0}}));
  EXPECT_EQ(parse_poly("-z1 + z1", 2).size(), 0u);
  EXPECT_EQ(parse_poly("(1.5e1-2i)", 1).coefficient({0}), Complex(15.0, -2.0));
}

TEST(ParsePoly, ErrorsCarryPositions) {
  try {
    parse_poly("z1 + * z2", 2);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 5u);
  }
  EXPECT_THROW(parse_poly("z3", 2), ParseError);
  EXPECT_THROW(parse_poly("z0", 2), ParseError);
  EXPECT_THROW(parse_poly("z1^1.5", 2), ParseError);
  EXPECT_THROW(parse_poly("z1^", 2), ParseError);
  EXPECT_THROW(parse_poly("(1+2)", 2), ParseError);
  EXPECT_THROW(parse_poly("", 2), ParseError);
  EXPECT_THROW(parse_poly("z1 z2", 2), ParseError);
  try {
    parse_poly("z1^1.5", 2);
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("non-integer exponent"), std::string::npos);
  }
}

TEST(Evaluate, Examples) {
  EXPECT_EQ(parse_poly("z1 + z2 - 1", 2).evaluate(Point{0.5, 0.5}), Complex(0.0));
  EXPECT_EQ(parse_poly("z1*z2 - 1", 2).evaluate(Point{2.0, 0.5}), Complex(0.0));
  EXPECT_EQ(parse_poly("z1^2 + z2", 2).evaluate(Point{1.0, -1.0}), Complex(0.0));
}

TEST(Evaluate, RejectsPointsOffTheTorus) {
  const LaurentPoly p = parse_poly("z1 + z2", 2);
  try {
    p.evaluate(Point{0.0, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OutsideTorus);
  }
  EXPECT_THROW(p.evaluate(Point{1.0}), Error);
}

TEST(PartialDerivative, Examples) {
  EXPECT_EQ(parse_poly("z1 + z2 - 1", 2).partial(0), parse_poly("1", 2));
  EXPECT_EQ(parse_poly("z1*z2 - 1", 2).partial(0), parse_poly("z2", 2));
  EXPECT_EQ(parse_poly("z1^-1", 2).partial(0), parse_poly("-z1^-2", 2));
  EXPECT_THROW(parse_poly("z1", 2).partial(2), Error);
}

TEST(LogGradient, Examples) {
  const auto g1 = parse_poly("z1 + z2 - 1", 2).log_gradient(Point{0.5, 0.5});
  EXPECT_EQ(g1[0], Complex(0.5));
  EXPECT_EQ(g1[1], Complex(0.5));
  const auto g2 = parse_poly("z1*z2 - 1", 2).log_gradient(Point{2.0, 0.5});
  EXPECT_EQ(g2[0], Complex(1.0));
  EXPECT_EQ(g2[1], Complex(1.0));
}

TEST(LogGradient, MatchesFiniteDifferencesOnParabola) {
  const LaurentPoly f = parse_poly("z1^2 + z2", 2);
  const Point z{1.0, -1.0};
  const auto fd = fd_log_gradient(f, z);
  // Frozen from the finite-difference oracle.
  EXPECT_NEAR(std::abs(fd[0] - Complex(2.0)), 0.0, 1e-8);
  EXPECT_NEAR(std::abs(fd[1] - Complex(-1.0)), 0.0, 1e-8);
  const auto g = f.log_gradient(z);
  EXPECT_NEAR(std::abs(g[0] - Complex(2.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(g[1] - Complex(-1.0)), 0.0, 1e-15);
}

TEST(LogGradient, AgreesWithPartialsTimesCoordinates) {
  auto rng = rng_stream(5, 0);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + t % 4;
    const LaurentPoly p = random_laurent(rng, n, 8, -3, 3);
    const Point z = random_torus_point(rng, n);
    const auto g = p.log_gradient(z);
    for (std::size_t j = 0; j < n; ++j) {
      const Complex expected = z[j] * p.partial(j).evaluate(z);
      EXPECT_LE(std::abs(g[j] - expected), 1e-12 * (1.0 + std::abs(expected)));
    }
  }
}

TEST(LogGradient, RandomPolynomialsMatchFiniteDifferences) {
  auto rng = rng_stream(11, 0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + t % 4;
    const LaurentPoly p = random_laurent(rng, n, 8, -3, 3);
    const Point z = random_torus_point(rng, n);
    const auto g = p.log_gradient(z);
    const auto fd = fd_log_gradient(p, z);
    double err = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      err = std::max(err, std::abs(g[j] - fd[j]));
      scale = std::max(scale, std::abs(g[j]));
    }
    if (scale == 0.0) continue;
    EXPECT_LT(err / scale, 1e-6) << to_string(p);
  }
}

TEST(LaurentPoly, DifferentiationIsLinear) {
  auto rng = rng_stream(17, 0);
  for (int t = 0; t < 30; ++t) {
    const LaurentPoly p = random_laurent(rng, 3, 6, -3, 3);
    const LaurentPoly q = random_laurent(rng, 3, 6, -3, 3);
    // Small-integer scalars keep every product exact, so equality is exact.
    const Complex alpha{2.0, -1.0}, beta{-3.0, 0.0};
    const LaurentPoly lhs = (alpha * p + beta * q).partial(1);
    const LaurentPoly rhs = alpha * p.partial(1) + beta * q.partial(1);
    ASSERT_EQ(lhs.size(), rhs.size());
    for (const auto& [e, c] : lhs.terms()) EXPECT_LE(std::abs(c - rhs.coefficient(e)), 1e-12 * std::abs(c));
  }
}

TEST(LaurentPoly, PrintParseRoundTrip) {
  auto rng = rng_stream(23, 0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 4;
    const LaurentPoly p = random_laurent(rng, n, 8, -3, 3, t % 2 == 0);
    EXPECT_EQ(parse_poly(to_string(p), n), p) << to_string(p);
  }
  EXPECT_EQ(to_string(LaurentPoly(2)), "0");
  EXPECT_EQ(parse_poly("0", 2), LaurentPoly(2));
}

TEST(LaurentPoly, TranslationMovesTheZeroSet) {
  const LaurentPoly f = parse_poly("z1 + z2 - 1", 2);
  const Point c{Complex{2.0, 1.0}, Complex{-0.5, 0.25}};
  const LaurentPoly g = f.translated(c);
  const Point z{0.3, 0.7};
  EXPECT_NEAR(std::abs(g.evaluate(Point{c[0] * z[0], c[1] * z[1]}) - f.evaluate(z)), 0.0, 1e-15);
}

TEST(Ipow, NegativeAndLargePowers) {
  EXPECT_EQ(ipow(Complex{2.0, 0.0}, -2), Complex(0.25));
  EXPECT_NEAR(std::abs(ipow(I, 7) - Complex(0.0, -1.0)), 0.0, 1e-15);
  EXPECT_EQ(ipow(Complex{3.0, 0.0}, 0), Complex(1.0));
}

}  // namespace
}  // namespace loggauss
