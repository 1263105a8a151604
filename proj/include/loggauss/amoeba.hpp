#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cplx_linalg.hpp"
#include "error.hpp"
#include "gauss_map.hpp"
#include "laurent_poly.hpp"
#include "parallel.hpp"
#include "variety.hpp"

namespace loggauss {

/// (log|z1|, ..., log|zn|)
struct LogPoint {
  std::vector<double> x;
};

inline LogPoint log_map(std::span<const Complex> z) {
  require_torus_point(z, z.size());
  LogPoint p;
  p.x.reserve(z.size());
  for (const auto& c : z) p.x.push_back(std::log(std::abs(c)));
  return p;
}

/// Coordinatewise principal argument in (-pi, pi].
inline std::vector<double> arg_map(std::span<const Complex> z) {
  require_torus_point(z, z.size());
  std::vector<double> out;
  out.reserve(z.size());
  for (const auto& c : z) {
    double a = std::arg(c);
    if (a == -std::numbers::pi) a = std::numbers::pi;
    out.push_back(a);
  }
  return out;
}

struct AmoebaPoint {
  Point z;
  LogPoint x;
};

/// Point cloud of the amoeba: Log images of accepted sample points that fall
/// inside the window.
struct AmoebaCloud {
  std::vector<AmoebaPoint> points;
  std::size_t failed_fibers = 0;
  std::size_t rejected = 0;
};

inline AmoebaCloud compute_amoeba(const VarietySystem& v, const Window& window,
                                  const FiberGrid& grid, const Tolerances& tol = {},
                                  std::size_t jobs = 1) {
  if (v.n() != 2 || v.l() != 1)
    throw Error(ErrorKind::UnsupportedShape,
                "amoeba sampling supports plane curves (n = 2, one generator) or affine spaces");
  const FiberSamples fs = sample_hypersurface_fibers(v.generators()[0], window, grid, tol, jobs);
  AmoebaCloud cloud;
  cloud.failed_fibers = fs.failed_fibers;
  cloud.rejected = fs.rejected_roots;
  cloud.points.reserve(fs.points.size());
  for (const auto& s : fs.points) cloud.points.push_back({s.z, log_map(s.z)});
  return cloud;
}

inline AmoebaCloud compute_amoeba(const AffineLinearSpace& p, const Window& window,
                                  std::size_t count, std::uint64_t seed, std::size_t jobs = 1) {
  window.validate();
  if (window.dim() != p.n()) throw Error(ErrorKind::InvalidArgument, "window dimension differs from n");
  AmoebaCloud cloud;
  for (const auto& s : sample_affine(p, count, seed, jobs)) {
    LogPoint x = log_map(s.z);
    if (window.contains(x.x))
      cloud.points.push_back({s.z, std::move(x)});
    else
      ++cloud.rejected;
  }
  return cloud;
}

struct ContourPoint {
  AmoebaPoint point;
  CriticalClassification classification;
};

struct Contour {
  std::vector<ContourPoint> points;
  /// Cloud points the classifier refused (singular, uncertain, off V).
  std::size_t refused = 0;
};

/// Critical subset of an amoeba cloud, each point paired with its stratum.
inline Contour contour_from_cloud(const VarietySystem& v, const AmoebaCloud& cloud,
                                  const Tolerances& tol = {}, std::size_t jobs = 1) {
  const auto verdicts =
      parallel_map(cloud.points.size(), jobs, [&](std::size_t i) -> std::optional<CriticalClassification> {
        try {
          return classify_point(v, cloud.points[i].z, tol);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::SingularPoint || e.kind() == ErrorKind::UncertainRank ||
              e.kind() == ErrorKind::OffVariety)
            return std::nullopt;
          throw;
        }
      });
  Contour c;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (!verdicts[i]) {
      ++c.refused;
    } else if (verdicts[i]->critical) {
      c.points.push_back({cloud.points[i], *verdicts[i]});
    }
  }
  return c;
}

inline Contour compute_contour(const VarietySystem& v, const Window& window, const FiberGrid& grid,
                               const Tolerances& tol = {}, std::size_t jobs = 1) {
  return contour_from_cloud(v, compute_amoeba(v, window, grid, tol, jobs), tol, jobs);
}

/// Rank of d(Arg)|K: columns Im(v_1..v_k), Re(v_1..v_k) for a complex basis
/// of K = dLog(T_z V). Arg-critical iff the rank is below min(n, 2k).
inline RankReport real_jacobian_arg_report(const VarietySystem& v, std::span<const Complex> z,
                                           double tol = kDefaultRankTol) {
  const CMatrix g = detail::screened_gauss_matrix(v, z, tol);
  if (g.isZero(0.0) || rank_with_margin(g, tol).rank != v.codim())
    throw Error(ErrorKind::SingularPoint, "gauss matrix does not have rank n-k");
  const CMatrix kernel = null_space(g, tol);
  const auto k = kernel.rows();
  RMatrix jac(static_cast<Eigen::Index>(v.n()), 2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    jac.col(i) = kernel.row(i).transpose().imag();
    jac.col(k + i) = kernel.row(i).transpose().real();
  }
  return rank_with_margin(jac, tol);
}

inline bool arg_critical_by_jacobian(const VarietySystem& v, std::span<const Complex> z,
                                     double tol = kDefaultRankTol) {
  return real_jacobian_arg_report(v, z, tol).rank < std::min(v.n(), 2 * v.k());
}

struct PreimageCount {
  std::size_t count = 0;
  bool regular = true;
  /// True when the count is exact (closed form), false for a multistart
  /// lower bound.
  bool exact = true;
  std::vector<Point> preimages;
};

struct PreimageOptions {
  /// Tangency threshold on the normalized circle-circle discriminant.
  double discriminant_tol = 1e-9;
  double rank_tol = kDefaultRankTol;
  std::size_t starts = 64;
  std::uint64_t seed = 0;
  /// Distinct solutions are at least this far apart in parameter space.
  double dedup_distance = 1e-8;
  /// Optional extra starting parameter for the multistart search.
  std::optional<Point> hint;
};

namespace detail {

/// Preimages of x under Log on the line z = A w + b in (C*)^2: intersection
/// of the circles |A_j w + b_j| = e^{x_j} in the w-plane.
inline PreimageCount line_preimages(const AffineLinearSpace& p, std::span<const double> x,
                                    const PreimageOptions& opt) {
  PreimageCount out;
  const Complex a1 = p.a()(0, 0), a2 = p.a()(1, 0);
  const Complex b1 = p.b()(0), b2 = p.b()(1);
  if (a1 == Complex{} || a2 == Complex{}) {
    // One coordinate is constant along the line: fibers are arcs.
    out.regular = false;
    return out;
  }
  const Complex c1 = -b1 / a1, c2 = -b2 / a2;
  const double r1 = std::exp(x[0]) / std::abs(a1);
  const double r2 = std::exp(x[1]) / std::abs(a2);
  const double d = std::abs(c2 - c1);
  const double scale = std::max({r1, r2, d});
  if (d <= opt.discriminant_tol * scale) {
    out.regular = std::abs(r1 - r2) > opt.discriminant_tol * scale;
    return out;
  }
  const double s2 = scale * scale;
  const double disc = (((r1 + r2) * (r1 + r2) - d * d) / s2) * ((d * d - (r1 - r2) * (r1 - r2)) / s2);
  const Complex u = (c2 - c1) / d;
  const double along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d);
  auto emit = [&](Complex w) {
    const Point wv{w};
    out.preimages.push_back(p.point(wv));
  };
  if (std::abs(disc) <= opt.discriminant_tol) {
    out.regular = false;
    emit(c1 + along * u);
  } else if (disc > 0.0) {
    const double h = std::sqrt(std::max(0.0, r1 * r1 - along * along));
    const Complex iu = Complex{0.0, 1.0} * u;
    emit(c1 + along * u + h * iu);
    emit(c1 + along * u - h * iu);
  }
  out.count = out.preimages.size();
  return out;
}

/// Real Jacobian of w -> Log(A w + b) in coordinates (Re w, Im w).
inline RMatrix log_parameter_jacobian(const AffineLinearSpace& p, std::span<const Complex> z) {
  const auto n = p.a().rows();
  const auto k = p.a().cols();
  RMatrix jac(n, 2 * k);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const Complex q = p.a()(j, i) / z[static_cast<std::size_t>(j)];
      jac(j, i) = q.real();
      jac(j, k + i) = -q.imag();
    }
  }
  return jac;
}

/// Damped Gauss-Newton on Log(A w + b) = x from parameter w.
inline std::optional<Point> solve_log_fiber(const AffineLinearSpace& p, std::span<const double> x,
                                            Point w) {
  const auto n = static_cast<Eigen::Index>(p.n());
  const auto k = static_cast<Eigen::Index>(p.k());
  auto residual = [&](const Point& wv, Eigen::VectorXd& r) {
    const Point z = p.point(wv);
    if (!in_torus(z, kTorusFloor)) return false;
    r.resize(n);
    for (Eigen::Index j = 0; j < n; ++j)
      r(j) = std::log(std::abs(z[static_cast<std::size_t>(j)])) - x[static_cast<std::size_t>(j)];
    return r.allFinite();
  };
  Eigen::VectorXd r;
  if (!residual(w, r)) return std::nullopt;
  for (int it = 0; it < 100; ++it) {
    if (r.lpNorm<Eigen::Infinity>() < 1e-13) return w;
    const RMatrix jac = log_parameter_jacobian(p, p.point(w));
    const Eigen::VectorXd step = jac.completeOrthogonalDecomposition().solve(r);
    if (!step.allFinite()) return std::nullopt;
    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      Point trial = w;
      for (Eigen::Index i = 0; i < k; ++i)
        trial[static_cast<std::size_t>(i)] -= t * Complex{step(i), step(k + i)};
      Eigen::VectorXd rt;
      if (residual(trial, rt) && rt.norm() < r.norm()) {
        w = std::move(trial);
        r = std::move(rt);
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (r.lpNorm<Eigen::Infinity>() < 1e-10) return w;
  return std::nullopt;
}

inline PreimageCount multistart_preimages(const AffineLinearSpace& p, std::span<const double> x,
                                          const PreimageOptions& opt) {
  PreimageCount out;
  out.exact = false;
  std::vector<Point> params;
  auto rng = rng_stream(opt.seed, 0);
  // Spread starts over the same annulus scale as the sampler.
  for (std::size_t s = 0; s <= opt.starts; ++s) {
    Point start;
    if (s == opt.starts) {
      if (!opt.hint) break;
      start = *opt.hint;
    } else {
      start = draw_annulus_parameter(rng, p.k());
    }
    const auto sol = solve_log_fiber(p, x, std::move(start));
    if (!sol) continue;
    bool duplicate = false;
    for (const auto& q : params) {
      double dist = 0.0, mag = 1.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        dist += std::norm((*sol)[i] - q[i]);
        mag = std::max(mag, std::abs(q[i]));
      }
      if (std::sqrt(dist) < opt.dedup_distance * mag) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) params.push_back(*sol);
  }
  for (const auto& w : params) {
    const Point z = p.point(w);
    const RankReport rep = rank_with_margin(log_parameter_jacobian(p, z), opt.rank_tol);
    if (rep.rank < 2 * p.k() || rep.uncertain()) out.regular = false;
    out.preimages.push_back(z);
  }
  out.count = out.preimages.size();
  return out;
}

}  // namespace detail

/// Number of points of P over x under Log. Lines in (C*)^2 use the exact
/// circle-circle construction; other shapes use multistart Gauss-Newton and
/// report a lower bound (exact = false).
inline PreimageCount count_preimages(const AffineLinearSpace& p, std::span<const double> x,
                                     const PreimageOptions& opt = {}) {
  if (x.size() != p.n()) throw Error(ErrorKind::InvalidArgument, "log point has wrong dimension");
  for (double v : x)
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "log point is not finite");
  if (p.n() == 2 && p.k() == 1) return detail::line_preimages(p, x, opt);
  if (p.n() < 2 * p.k())
    throw Error(ErrorKind::UnsupportedShape, "preimages are positive-dimensional when n < 2k");
  return detail::multistart_preimages(p, x, opt);
}

struct CoveringReport {
  int l_real = -1;
  std::size_t bound = 1;
  /// Regular trials requested; attempts may be up to ten times as many.
  std::size_t trials = 0;
  std::size_t attempts = 0;
  std::size_t regular_trials = 0;
  /// Regular trials whose count reached the bound.
  std::size_t meeting_bound = 0;
  std::size_t min_preimages = 0;
  std::size_t max_preimages = 0;
  std::size_t rejected_nonregular = 0;
  /// Trials whose perturbed value left the amoeba (no preimage found).
  std::size_t rejected_outside = 0;
  bool exact_counts = true;
  bool success = false;
};

inline constexpr double kPerturbationRadius = 1e-2;

/// Checks the lower bound 2^l on |Log^{-1}(x)| over regular values x of the
/// amoeba of P, l = dim_C(P intersected with conj P). Attempt t draws from
/// rng_stream(seed, t); non-regular values and values that left the amoeba
/// are tallied and replaced until `trials` regular values were examined.
inline CoveringReport verify_covering(const AffineLinearSpace& p, std::size_t trials,
                                      std::uint64_t seed, std::size_t jobs = 1,
                                      std::size_t starts = 64) {
  if (p.n() < 2 * p.k())
    throw Error(ErrorKind::UnsupportedShape, "covering bound needs n >= 2k");
  if (trials == 0) throw Error(ErrorKind::InvalidArgument, "need at least one trial");
  CoveringReport rep;
  rep.l_real = p.l_real();
  rep.bound = std::size_t{1} << std::max(rep.l_real, 0);
  rep.trials = trials;

  auto run_trial = [&](std::size_t t) {
    auto rng = rng_stream(seed, t);
    Point w;
    Point z;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxAttemptsPerSample)
        throw Error(ErrorKind::DegenerateParametrization, "cannot draw a torus point on P");
      w = draw_annulus_parameter(rng, p.k());
      z = p.point(w);
      if (in_torus(z)) break;
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x = log_map(z).x;
    PreimageOptions opt;
    opt.seed = seed ^ (0x9e3779b97f4a7c15ULL * (t + 1));
    opt.starts = starts;
    if (p.n() == 2 * p.k()) {
      // The amoeba has interior; perturb the value itself.
      std::vector<double> dir(p.n());
      double norm = 0.0;
      for (auto& d : dir) {
        d = gauss(rng);
        norm += d * d;
      }
      const double radius = kPerturbationRadius * unit(rng) / std::sqrt(norm);
      for (std::size_t j = 0; j < p.n(); ++j) x[j] += radius * dir[j];
      opt.hint = w;
    } else {
      // Lower-dimensional amoeba: move along P so the value stays on it.
      for (auto& c : w) c += kPerturbationRadius * unit(rng) * Complex{gauss(rng), gauss(rng)};
      z = p.point(w);
      if (!in_torus(z)) return PreimageCount{0, false, false, {}};
      x = log_map(z).x;
      opt.hint = w;
    }
    return count_preimages(p, x, opt);
  };

  // Attempts run in batches of `trials` indices; results are consumed in
  // index order until enough regular trials are collected, so the report does
  // not depend on `jobs`.
  const std::size_t budget = 10 * trials;
  bool first = true;
  for (std::size_t start = 0; start < budget && rep.regular_trials < trials; start += trials) {
    const auto batch = parallel_map(trials, jobs, [&](std::size_t i) { return run_trial(start + i); });
    for (const auto& r : batch) {
      if (rep.regular_trials == trials) break;
      ++rep.attempts;
      rep.exact_counts = rep.exact_counts && r.exact;
      if (!r.regular) {
        ++rep.rejected_nonregular;
        continue;
      }
      if (r.count == 0) {
        ++rep.rejected_outside;
        continue;
      }
      ++rep.regular_trials;
      rep.min_preimages = first ? r.count : std::min(rep.min_preimages, r.count);
      rep.max_preimages = std::max(rep.max_preimages, r.count);
      first = false;
      if (r.count >= rep.bound) ++rep.meeting_bound;
    }
  }
  if (rep.regular_trials < trials)
    throw Error(ErrorKind::InsufficientRegularTrials,
                "only " + std::to_string(rep.regular_trials) + " regular trials in " +
                    std::to_string(rep.attempts) + " attempts");
  rep.success = rep.min_preimages >= rep.bound;
  return rep;
}

}  // namespace loggauss
