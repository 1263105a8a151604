#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cplx_linalg.hpp"
#include "error.hpp"
#include "gauss_map.hpp"
#include "laurent_poly.hpp"
#include "parallel.hpp"

namespace loggauss {

/// Coordinates closer to zero than this count as having left the torus.
inline constexpr double kTorusFloor = 1e-14;
inline constexpr double kRefineTol = 1e-12;

/// Axis-aligned box in Log-space, one closed interval per coordinate.
struct Window {
  std::vector<std::pair<double, double>> ranges;

  std::size_t dim() const { return ranges.size(); }

  bool contains(std::span<const double> x) const {
    if (x.size() != ranges.size()) return false;
    for (std::size_t j = 0; j < x.size(); ++j)
      if (!(x[j] >= ranges[j].first && x[j] <= ranges[j].second)) return false;
    return true;
  }

  void validate() const {
    if (ranges.empty()) throw Error(ErrorKind::InvalidArgument, "window has no axes");
    for (const auto& [lo, hi] : ranges)
      if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
        throw Error(ErrorKind::InvalidArgument, "window interval must satisfy lo < hi");
  }
};

struct SamplePoint {
  Point z;
  double residual = 0.0;
  bool smooth = false;
  /// Margin of the smoothness rank decision (0 when not smooth).
  double margin = 0.0;
  int iterations = 0;
};

namespace detail {

inline std::pair<bool, double> smoothness(const VarietySystem& v, std::span<const Complex> z,
                                          double tol) {
  try {
    return {true, generalized_gauss(v, z, tol).margin};
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SingularPoint || e.kind() == ErrorKind::UncertainRank)
      return {false, 0.0};
    throw;
  }
}

inline void require_inside_torus(std::span<const Complex> z) {
  for (std::size_t j = 0; j < z.size(); ++j)
    if (!(std::abs(z[j]) >= kTorusFloor))
      throw Error(ErrorKind::IterateLeftTorus,
                  "coordinate z" + std::to_string(j + 1) + " collapsed towards 0");
}

}  // namespace detail

/// Gauss-Newton least-squares refinement of z0 onto V using the complex
/// Jacobian. Each step is the minimum-norm least-squares correction, so
/// underdetermined and overdetermined generator lists both work.
inline SamplePoint newton_refine(const VarietySystem& v, Point z0, int max_iter = 50,
                                 double tol = kRefineTol, double rank_tol = kDefaultRankTol) {
  require_torus_point(z0, v.n());
  std::vector<std::vector<LaurentPoly>> partials(v.l());
  for (std::size_t i = 0; i < v.l(); ++i)
    for (std::size_t j = 0; j < v.n(); ++j) partials[i].push_back(v.generators()[i].partial(j));

  const auto n = static_cast<Eigen::Index>(v.n());
  const auto l = static_cast<Eigen::Index>(v.l());
  Point z = std::move(z0);
  for (int it = 0;; ++it) {
    const double res = v.residual(z);
    if (res < tol) {
      SamplePoint out;
      out.z = z;
      out.residual = res;
      out.iterations = it;
      std::tie(out.smooth, out.margin) = detail::smoothness(v, out.z, rank_tol);
      return out;
    }
    if (it == max_iter) {
      throw Error(ErrorKind::NonConvergence, "residual " + std::to_string(res) + " after " +
                                                 std::to_string(max_iter) + " iterations");
    }
    CVector f(l);
    CMatrix jac(l, n);
    for (Eigen::Index i = 0; i < l; ++i) {
      f(i) = v.generators()[static_cast<std::size_t>(i)].evaluate(z);
      for (Eigen::Index j = 0; j < n; ++j)
        jac(i, j) = partials[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].evaluate(z);
    }
    Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(jac);
    const CVector step = cod.solve(f);
    if (!step.allFinite()) throw Error(ErrorKind::NonConvergence, "Gauss-Newton step is not finite");
    for (Eigen::Index j = 0; j < n; ++j) z[static_cast<std::size_t>(j)] -= step(j);
    detail::require_inside_torus(z);
  }
}

/// All complex roots of sum_i a[i] x^i by simultaneous Aberth-Ehrlich
/// iteration. Requires a.front() != 0 and a.back() != 0. Returns nullopt
/// when the iteration does not settle within max_iter sweeps.
inline std::optional<std::vector<Complex>> polynomial_roots(std::span<const Complex> a,
                                                            double tol = kRefineTol,
                                                            int max_iter = 200) {
  if (a.empty() || a.back() == Complex{})
    throw Error(ErrorKind::InvalidArgument, "leading coefficient must be nonzero");
  const std::size_t deg = a.size() - 1;
  if (deg == 0) return std::vector<Complex>{};
  if (deg == 1) return std::vector<Complex>{-a[0] / a[1]};

  auto eval = [&](Complex x) {
    Complex p = a[deg], dp{};
    for (std::size_t i = deg; i-- > 0;) {
      dp = dp * x + p;
      p = p * x + a[i];
    }
    return std::pair{p, dp};
  };

  const double radius = std::pow(std::abs(a[0] / a[deg]), 1.0 / static_cast<double>(deg));
  std::vector<Complex> roots(deg);
  for (std::size_t k = 0; k < deg; ++k)
    roots[k] = std::polar(radius, 2.0 * std::numbers::pi * static_cast<double>(k) /
                                          static_cast<double>(deg) + 0.4);
  std::vector<bool> done(deg, false);
  bool converged = false;
  for (int it = 0; it < max_iter && !converged; ++it) {
    converged = true;
    for (std::size_t k = 0; k < deg; ++k) {
      if (done[k]) continue;
      const auto [p, dp] = eval(roots[k]);
      if (p == Complex{}) {
        done[k] = true;
        continue;
      }
      const Complex ratio = p / dp;
      Complex repulsion{};
      for (std::size_t j = 0; j < deg; ++j)
        if (j != k) repulsion += 1.0 / (roots[k] - roots[j]);
      const Complex w = ratio / (1.0 - ratio * repulsion);
      if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) return std::nullopt;
      roots[k] -= w;
      if (std::abs(w) <= tol * std::abs(roots[k]))
        done[k] = true;
      else
        converged = false;
    }
  }
  if (!converged) return std::nullopt;
  for (auto& r : roots) {
    for (int polish = 0; polish < 2; ++polish) {
      const auto [p, dp] = eval(r);
      if (dp == Complex{}) break;
      r -= p / dp;
    }
  }
  return roots;
}

struct FiberSamples {
  std::vector<SamplePoint> points;
  std::size_t fibers = 0;
  std::size_t failed_fibers = 0;
  /// Roots found but rejected by the residual gate.
  std::size_t rejected_roots = 0;
};

struct FiberGrid {
  std::size_t resolution = 64;
  std::size_t args_per_fiber = 32;
};

/// z1 for grid cell (i, a): modulus exp(x1_i) with x1 evenly spaced over the
/// window including both ends, argument -pi + 2 pi (a+1)/A so that pi (and
/// 0 for even A) is always hit.
inline Complex fiber_base_point(const Window& window, const FiberGrid& grid, std::size_t i,
                                std::size_t a) {
  const auto [lo, hi] = window.ranges[0];
  const double x1 = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.resolution - 1);
  const std::size_t numer = 2 * (a + 1);
  const std::size_t denom = grid.args_per_fiber;
  const double r = std::exp(x1);
  if (numer == 2 * denom) return {-r, 0.0};
  if (numer == denom) return {r, 0.0};
  const double theta = -std::numbers::pi + std::numbers::pi * static_cast<double>(numer) /
                                               static_cast<double>(denom);
  return std::polar(r, theta);
}

/// Samples a plane curve {f = 0} in (C*)^2 fiberwise: for each grid value of
/// (log|z1|, arg z1) all roots z2 of the univariate fiber polynomial are
/// found; points with log|z2| outside the window or residual above
/// `tol.residual` are dropped. Output order is fiber order, independent of
/// `jobs`.
inline FiberSamples sample_hypersurface_fibers(const LaurentPoly& f, const Window& window,
                                               const FiberGrid& grid, const Tolerances& tol = {},
                                               std::size_t jobs = 1) {
  if (f.n_vars() != 2) throw Error(ErrorKind::UnsupportedShape, "fiber sampling needs n = 2");
  if (!f.depends_on(1)) throw Error(ErrorKind::UnsupportedShape, "polynomial does not involve z2");
  window.validate();
  if (window.dim() != 2) throw Error(ErrorKind::InvalidArgument, "window must have 2 axes");
  if (grid.resolution < 2 || grid.args_per_fiber < 1)
    throw Error(ErrorKind::InvalidArgument, "grid needs resolution >= 2 and args_per_fiber >= 1");

  int emin = 0, emax = 0;
  bool first = true;
  for (const auto& [e, c] : f.terms()) {
    emin = first ? e[1] : std::min(emin, e[1]);
    emax = first ? e[1] : std::max(emax, e[1]);
    first = false;
  }
  const VarietySystem curve(2, {f}, 1);

  struct FiberResult {
    std::vector<SamplePoint> points;
    bool failed = false;
    std::size_t rejected = 0;
  };
  const std::size_t count = grid.resolution * grid.args_per_fiber;
  auto solve_fiber = [&](std::size_t idx) {
    FiberResult out;
    const Complex z1 = fiber_base_point(window, grid, idx / grid.args_per_fiber,
                                        idx % grid.args_per_fiber);
    std::vector<Complex> a(static_cast<std::size_t>(emax - emin + 1));
    for (const auto& [e, c] : f.terms())
      a[static_cast<std::size_t>(e[1] - emin)] += c * ipow(z1, e[0]);
    // Zero constant terms are roots at z2 = 0, outside the torus.
    std::size_t lo = 0, hi = a.size();
    while (lo < hi && a[lo] == Complex{}) ++lo;
    while (hi > lo && a[hi - 1] == Complex{}) --hi;
    if (hi - lo < 2) return out;
    const auto roots = polynomial_roots(std::span<const Complex>(a).subspan(lo, hi - lo));
    if (!roots) {
      out.failed = true;
      return out;
    }
    const auto [ylo, yhi] = window.ranges[1];
    for (const Complex& z2 : *roots) {
      if (z2 == Complex{} || !std::isfinite(std::abs(z2))) continue;
      const double x2 = std::log(std::abs(z2));
      if (!(x2 >= ylo && x2 <= yhi)) continue;
      SamplePoint s;
      s.z = {z1, z2};
      s.residual = curve.residual(s.z);
      if (!(s.residual < tol.residual)) {
        ++out.rejected;
        continue;
      }
      std::tie(s.smooth, s.margin) = detail::smoothness(curve, s.z, tol.rank);
      out.points.push_back(std::move(s));
    }
    return out;
  };

  const auto results = parallel_map(count, jobs, solve_fiber);
  FiberSamples samples;
  samples.fibers = count;
  for (const auto& r : results) {
    samples.failed_fibers += r.failed ? 1 : 0;
    samples.rejected_roots += r.rejected;
    samples.points.insert(samples.points.end(), r.points.begin(), r.points.end());
  }
  return samples;
}

/// Intersection of an affine space with its complex conjugate.
/// Returns dim_C(P intersected with conj P), or -1 when it is empty.
inline int intersection_dim_conjugate(const CMatrix& a, const CVector& b,
                                      double tol = kDefaultRankTol) {
  const auto n = a.rows();
  const auto k = a.cols();
  CMatrix pair(n, 2 * k);
  pair << a, a.conjugate();
  CMatrix augmented(n, 2 * k + 1);
  augmented << pair, (b - b.conjugate());
  const RankReport rp = rank_with_margin(pair, tol);
  const RankReport ra = rank_with_margin(augmented, tol);
  if (rp.uncertain() || ra.uncertain())
    throw Error(ErrorKind::UncertainRank, "conjugate intersection rank is ill-determined");
  if (ra.rank != rp.rank) return -1;
  return static_cast<int>(2 * static_cast<std::size_t>(k) - rp.rank);
}

/// Affine linear space w -> A w + b of complex dimension k in C^n.
class AffineLinearSpace {
 public:
  AffineLinearSpace(CMatrix a, CVector b, double tol = kDefaultRankTol)
      : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() != b_.size())
      throw Error(ErrorKind::InvalidArgument, "A and b have different row counts");
    if (a_.cols() < 1 || a_.cols() >= a_.rows())
      throw Error(ErrorKind::InvalidArgument, "affine space needs 1 <= k < n");
    const RankReport r = rank_with_margin(a_, tol);
    if (r.rank != static_cast<std::size_t>(a_.cols()) || r.uncertain())
      throw Error(ErrorKind::RankDeficient, "A must have full column rank");
    l_real_ = intersection_dim_conjugate(a_, b_, tol);
  }

  const CMatrix& a() const noexcept { return a_; }
  const CVector& b() const noexcept { return b_; }
  std::size_t n() const { return static_cast<std::size_t>(a_.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(a_.cols()); }
  /// dim_C(P intersected with conj P), -1 when empty.
  int l_real() const noexcept { return l_real_; }

  Point point(std::span<const Complex> w) const {
    if (w.size() != k()) throw Error(ErrorKind::InvalidArgument, "parameter has wrong length");
    const CVector wv = Eigen::Map<const CVector>(w.data(), static_cast<Eigen::Index>(w.size()));
    const CVector z = a_ * wv + b_;
    return Point(z.data(), z.data() + z.size());
  }

  /// Linear equations cutting out P: one per row c of a basis of the left
  /// kernel of A, namely sum_j c_j z_j - c.b.
  VarietySystem implicit_system() const {
    const CMatrix left = null_space(a_.transpose());
    std::vector<LaurentPoly> gens;
    for (Eigen::Index r = 0; r < left.rows(); ++r) {
      std::vector<std::pair<Exponent, Complex>> terms;
      Complex constant{};
      for (Eigen::Index j = 0; j < left.cols(); ++j) {
        Exponent e(n(), 0);
        e[static_cast<std::size_t>(j)] = 1;
        terms.emplace_back(e, left(r, j));
        constant -= left(r, j) * b_(j);
      }
      terms.emplace_back(Exponent(n(), 0), constant);
      gens.emplace_back(n(), terms);
    }
    return VarietySystem(n(), std::move(gens), k());
  }

 private:
  CMatrix a_;
  CVector b_;
  int l_real_ = -1;
};

inline int intersection_dim_conjugate(const AffineLinearSpace& p, double tol = kDefaultRankTol) {
  return intersection_dim_conjugate(p.a(), p.b(), tol);
}

/// Moduli of sampled parameters are uniform in this range, arguments uniform.
inline constexpr double kAnnulusInner = 0.3;
inline constexpr double kAnnulusOuter = 3.0;
inline constexpr double kAffineFloor = 1e-12;
inline constexpr int kMaxAttemptsPerSample = 100;

inline Point draw_annulus_parameter(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> modulus(kAnnulusInner, kAnnulusOuter);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  Point w(k);
  for (auto& c : w) {
    const double r = modulus(rng);
    c = std::polar(r, angle(rng));
  }
  return w;
}

inline bool in_torus(std::span<const Complex> z, double floor = kAffineFloor) {
  for (const auto& c : z)
    if (!(std::abs(c) >= floor)) return false;
  return true;
}

/// Draws `count` points of P from the parameter annulus. Sample i uses its
/// own stream rng_stream(seed, i), so the list depends only on the seed.
inline std::vector<SamplePoint> sample_affine(const AffineLinearSpace& p, std::size_t count,
                                              std::uint64_t seed, std::size_t jobs = 1) {
  const VarietySystem system = p.implicit_system();
  auto draw = [&](std::size_t i) {
    auto rng = rng_stream(seed, i);
    for (int attempt = 0; attempt < kMaxAttemptsPerSample; ++attempt) {
      const Point z = p.point(draw_annulus_parameter(rng, p.k()));
      if (!in_torus(z)) continue;
      SamplePoint s;
      s.z = z;
      s.residual = system.residual(z);
      s.smooth = true;
      s.margin = 1.0;
      return s;
    }
    throw Error(ErrorKind::DegenerateParametrization,
                "more than 99% of parameters map outside the torus");
  };
  return parallel_map(count, jobs, draw);
}

/// Rank of d(Re)|K for K = dLog(T_z V): the real n x 2k matrix with columns
/// Re(v_1..v_k), -Im(v_1..v_k) for a complex basis v of the kernel of the
/// gauss matrix. z is Log-critical iff the rank is below min(n, 2k).
inline RankReport real_jacobian_log_report(const VarietySystem& v, std::span<const Complex> z,
                                           double tol = kDefaultRankTol) {
  const CMatrix g = detail::screened_gauss_matrix(v, z, tol);
  if (g.isZero(0.0)) throw Error(ErrorKind::SingularPoint, "all logarithmic gradients vanish");
  if (rank_with_margin(g, tol).rank != v.codim())
    throw Error(ErrorKind::SingularPoint, "gauss matrix does not have rank n-k");
  const CMatrix kernel = null_space(g, tol);
  const auto n = static_cast<Eigen::Index>(v.n());
  const auto k = kernel.rows();
  RMatrix jac(n, 2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    jac.col(i) = kernel.row(i).transpose().real();
    jac.col(k + i) = -kernel.row(i).transpose().imag();
  }
  return rank_with_margin(jac, tol);
}

inline std::size_t real_jacobian_log_rank(const VarietySystem& v, std::span<const Complex> z,
                                          double tol = kDefaultRankTol) {
  return real_jacobian_log_report(v, z, tol).rank;
}

inline bool log_critical_by_jacobian(const VarietySystem& v, std::span<const Complex> z,
                                     double tol = kDefaultRankTol) {
  return real_jacobian_log_rank(v, z, tol) < std::min(v.n(), 2 * v.k());
}

}  // namespace loggauss
