#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "battery.hpp"
#include "loggauss/variety.hpp"

namespace loggauss {
namespace {

constexpr Complex I{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::InvalidArgument;
}

CMatrix column(std::initializer_list<Complex> v) {
  CMatrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (const auto& c : v) m(i++, 0) = c;
  return m;
}

CVector vec(std::initializer_list<Complex> v) {
  CVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const auto& c : v) out(i++) = c;
  return out;
}

AffineLinearSpace real_line() { return AffineLinearSpace(column({1, 1}), vec({0, 1})); }
AffineLinearSpace complex_line() { return AffineLinearSpace(column({1, I}), vec({0, 1})); }
AffineLinearSpace real_plane4() {
  CMatrix a(4, 2);
  a << 1, 0, 0, 1, 1, 1, 1, -2;
  return AffineLinearSpace(a, vec({0.5, -1, 1, 2}));
}

TEST(NewtonRefine, Examples) {
  const VarietySystem line = VarietySystem::parse(2, {"z1 + z2 - 1"}, 1);
  const SamplePoint fixed = newton_refine(line, Point{0.5, 0.5});
  EXPECT_EQ(fixed.iterations, 0);
  EXPECT_EQ(fixed.residual, 0.0);
  EXPECT_TRUE(fixed.smooth);

  const SamplePoint moved = newton_refine(line, Point{0.6, 0.5});
  EXPECT_LT(moved.residual, 1e-12);
  EXPECT_LT(std::abs(moved.z[0] + moved.z[1] - 1.0), 1e-12);

  const VarietySystem hyp = VarietySystem::parse(2, {"z1*z2 - 1"}, 1);
  const SamplePoint h = newton_refine(hyp, Point{2.0, 0.6});
  EXPECT_LT(std::abs(h.z[0] * h.z[1] - 1.0), 1e-12);
}

TEST(NewtonRefine, Failures) {
  const VarietySystem far = VarietySystem::parse(2, {"z1^2 + 1"}, 1);
  EXPECT_EQ(kind_of([&] { newton_refine(far, Point{Complex{0.0, 0.0}, 1.0}); }), ErrorKind::OutsideTorus);
  // Newton on z1 drives z1 to 0, the torus boundary.
  const VarietySystem coord = VarietySystem::parse(2, {"z1"}, 1);
  EXPECT_EQ(kind_of([&] { newton_refine(coord, Point{1.0, 1.0}); }), ErrorKind::IterateLeftTorus);
  // z1^2 + 1 from a real start never leaves the real axis, so cannot converge.
  EXPECT_EQ(kind_of([&] { newton_refine(far, Point{0.5, 1.0}, 30); }), ErrorKind::NonConvergence);
}

TEST(PolynomialRoots, Quadratic) {
  const std::vector<Complex> a{-4.0, 0.0, 1.0};  // x^2 - 4
  const auto roots = polynomial_roots(a);
  ASSERT_TRUE(roots);
  ASSERT_EQ(roots->size(), 2u);
  std::vector<double> re{(*roots)[0].real(), (*roots)[1].real()};
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -2.0, 1e-12);
  EXPECT_NEAR(re[1], 2.0, 1e-12);
}

TEST(PolynomialRoots, RandomPolynomialsReconstruct) {
  auto rng = rng_stream(31, 0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t deg = 1 + t % 7;
    std::vector<Complex> roots(deg);
    for (auto& r : roots) r = testing::random_complex(rng);
    // Expand prod (x - r) in ascending order.
    std::vector<Complex> a{1.0};
    for (const auto& r : roots) {
      std::vector<Complex> next(a.size() + 1);
      for (std::size_t i = 0; i < a.size(); ++i) {
        next[i] -= r * a[i];
        next[i + 1] += a[i];
      }
      a = next;
    }
    const auto found = polynomial_roots(a);
    ASSERT_TRUE(found);
    for (const auto& r : roots) {
      double best = 1e300;
      for (const auto& f : *found) best = std::min(best, std::abs(f - r));
      EXPECT_LT(best, 1e-8);
    }
  }
  EXPECT_THROW(polynomial_roots(std::vector<Complex>{1.0, 0.0}), Error);
}

TEST(SampleHypersurfaceFibers, HyperbolaHasOneRootPerFiber) {
  const LaurentPoly f = parse_poly("z1*z2 - 1", 2);
  const Window window{{{-1.0, 1.0}, {-2.0, 2.0}}};
  const FiberGrid grid{9, 8};
  const FiberSamples s = sample_hypersurface_fibers(f, window, grid);
  EXPECT_EQ(s.fibers, 72u);
  ASSERT_EQ(s.points.size(), 72u);
  for (const auto& p : s.points) {
    EXPECT_LT(std::abs(p.z[1] - 1.0 / p.z[0]), 1e-12);
    EXPECT_LT(p.residual, kDefaultResidualTol);
  }
}

TEST(SampleHypersurfaceFibers, LineFiberThroughSixthRootOfUnity) {
  const LaurentPoly f = parse_poly("z1 + z2 - 1", 2);
  // Resolution 3 puts x1 = 0 in the middle; 6 arguments hit -2pi/3 .. pi.
  const FiberSamples s = sample_hypersurface_fibers(f, Window{{{-1.0, 1.0}, {-1.0, 1.0}}}, FiberGrid{3, 6});
  const Complex target = std::polar(1.0, kPi / 3.0);
  bool found = false;
  for (const auto& p : s.points) {
    if (std::abs(p.z[0] - target) < 1e-14) {
      found = true;
      EXPECT_LT(std::abs(p.z[1] - (1.0 - target)), 1e-14);
      EXPECT_NEAR(std::abs(p.z[1]), 1.0, 1e-14);
    }
  }
  EXPECT_TRUE(found);
}

TEST(SampleHypersurfaceFibers, ParabolaRootsPlusMinusTwo) {
  const LaurentPoly f = parse_poly("z2^2 - z1", 2);
  // Resolution 2 over [log 4, log 4 + 1]: first fiber column starts at z1 = 4.
  const Window window{{{std::log(4.0), std::log(4.0) + 1.0}, {-3.0, 3.0}}};
  const FiberSamples s = sample_hypersurface_fibers(f, window, FiberGrid{2, 2});
  std::vector<Complex> at4;
  for (const auto& p : s.points)
    if (std::abs(p.z[0] - 4.0) < 1e-12) at4.push_back(p.z[1]);
  ASSERT_EQ(at4.size(), 2u);
  std::sort(at4.begin(), at4.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
  EXPECT_LT(std::abs(at4[0] + 2.0), 1e-12);
  EXPECT_LT(std::abs(at4[1] - 2.0), 1e-12);
}

TEST(SampleHypersurfaceFibers, RootCountsPerFiber) {
  const Window wide{{{-2.0, 2.0}, {-30.0, 30.0}}};
  const FiberGrid grid{11, 10};
  const FiberSamples line = sample_hypersurface_fibers(parse_poly("z1 + z2 - 1", 2), wide, grid);
  // z1 = 1 (x1 = 0, arg 0) gives z2 = 0, outside the torus.
  EXPECT_EQ(line.points.size(), grid.resolution * grid.args_per_fiber - 1);
  const FiberSamples par = sample_hypersurface_fibers(parse_poly("z2^2 - z1", 2), wide, grid);
  EXPECT_EQ(par.points.size(), 2 * grid.resolution * grid.args_per_fiber);
  EXPECT_EQ(par.failed_fibers, 0u);
  for (const auto& p : par.points) EXPECT_LT(p.residual, kDefaultResidualTol);
}

TEST(SampleHypersurfaceFibers, DeterministicAcrossJobs) {
  const LaurentPoly f = parse_poly("z1^2*z2 + (0.5-1i)*z2^-1 + z1 - 2", 2);
  const Window window{{{-2.0, 2.0}, {-2.0, 2.0}}};
  const auto a = sample_hypersurface_fibers(f, window, FiberGrid{17, 9}, {}, 1);
  const auto b = sample_hypersurface_fibers(f, window, FiberGrid{17, 9}, {}, 4);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) EXPECT_EQ(a.points[i].z, b.points[i].z);
}

TEST(SampleHypersurfaceFibers, UnsupportedShapes) {
  const Window w{{{-1.0, 1.0}, {-1.0, 1.0}}};
  EXPECT_EQ(kind_of([&] { sample_hypersurface_fibers(parse_poly("z1 - 2", 2), w, {}); }),
            ErrorKind::UnsupportedShape);
  EXPECT_EQ(kind_of([&] { sample_hypersurface_fibers(parse_poly("z1 + z2 + z3", 3), w, {}); }),
            ErrorKind::UnsupportedShape);
}

TEST(AffineLinearSpace, PointAndValidation) {
  const AffineLinearSpace p = real_line();
  const Point z = p.point(Point{1.0});
  EXPECT_EQ(z, (Point{1.0, 2.0}));
  const Point zero = complex_line().point(Point{I});
  EXPECT_EQ(zero[1], Complex(0.0));
  EXPECT_FALSE(in_torus(zero));
  EXPECT_EQ(kind_of([] { AffineLinearSpace(column({0, 0}), vec({1, 1})); }), ErrorKind::RankDeficient);
  EXPECT_EQ(kind_of([] { AffineLinearSpace(column({1, 1}), vec({1, 1, 1})); }), ErrorKind::InvalidArgument);
  // The implicit equations vanish on the space.
  const VarietySystem sys = real_plane4().implicit_system();
  EXPECT_EQ(sys.l(), 2u);
  EXPECT_LT(sys.residual(real_plane4().point(Point{Complex{0.3, 1.1}, Complex{-2.0, 0.4}})), 1e-12);
}

TEST(SampleAffine, DeterministicAndOnTheSpace) {
  const AffineLinearSpace p = real_line();
  const auto a = sample_affine(p, 100, 9, 1);
  const auto b = sample_affine(p, 100, 9, 3);
  ASSERT_EQ(a.size(), 100u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].z, b[i].z);
    EXPECT_LT(std::abs(a[i].z[1] - a[i].z[0] - 1.0), 1e-15);
    EXPECT_LT(a[i].residual, kDefaultResidualTol);
  }
  EXPECT_NE(sample_affine(p, 5, 10)[0].z, a[0].z);
}

TEST(SampleAffine, DegenerateParametrization) {
  // z2 is identically 0.
  const AffineLinearSpace p(column({1, 0}), vec({0, 0}));
  EXPECT_EQ(kind_of([&] { sample_affine(p, 3, 1); }), ErrorKind::DegenerateParametrization);
}

TEST(IntersectionDimConjugate, Examples) {
  EXPECT_EQ(real_line().l_real(), 1);
  EXPECT_EQ(complex_line().l_real(), 0);
  EXPECT_EQ(real_plane4().l_real(), 2);
  // Parallel to its conjugate but shifted: empty intersection.
  EXPECT_EQ(intersection_dim_conjugate(column({1, 1}), vec({0, I})), -1);
}

TEST(IntersectionDimConjugate, MatchesAConstructedIntersection) {
  // P = span of l real directions and k - l complex ones through a real point.
  auto rng = rng_stream(55, 0);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 3 + t % 4;
    const std::size_t k = 1 + t % (n - 1);
    const std::size_t lmin = 2 * k > n ? 2 * k - n : 0;
    const std::size_t l = lmin + static_cast<std::size_t>(t) % (k - lmin + 1);
    const CMatrix a = testing::random_subspace(rng, n, k, l).transpose();
    CVector b(static_cast<Eigen::Index>(n));
    for (auto& c : b) c = g(rng);
    EXPECT_EQ(intersection_dim_conjugate(a, b), static_cast<int>(l));
  }
}

TEST(RealJacobianLogRank, Examples) {
  const VarietySystem hyp = VarietySystem::parse(2, {"z1*z2 - 1"}, 1);
  EXPECT_EQ(real_jacobian_log_rank(hyp, Point{2.0, 0.5}), 1u);
  EXPECT_TRUE(log_critical_by_jacobian(hyp, Point{2.0, 0.5}));
  const VarietySystem line = VarietySystem::parse(2, {"z1 + z2 - 1"}, 1);
  EXPECT_EQ(real_jacobian_log_rank(line, Point{Complex{0.5, 0.5}, Complex{0.5, -0.5}}), 2u);
  EXPECT_FALSE(log_critical_by_jacobian(line, Point{Complex{0.5, 0.5}, Complex{0.5, -0.5}}));
  EXPECT_EQ(real_jacobian_log_rank(line, Point{0.5, 0.5}), 1u);
}

}  // namespace
}  // namespace loggauss
