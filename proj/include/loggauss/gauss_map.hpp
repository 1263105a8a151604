#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cplx_linalg.hpp"
#include "error.hpp"
#include "laurent_poly.hpp"

namespace loggauss {

using Point = std::vector<Complex>;

inline constexpr double kDefaultResidualTol = 1e-9;

struct Tolerances {
  double rank = kDefaultRankTol;
  double residual = kDefaultResidualTol;
};

/// A subvariety V of the torus (C*)^n cut out by l Laurent polynomials,
/// with its expected complex dimension k (0 < k < n, l >= n - k).
class VarietySystem {
 public:
  VarietySystem(std::size_t n, std::vector<LaurentPoly> generators, std::size_t k)
      : n_(n), k_(k), generators_(std::move(generators)) {
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "ambient dimension must be at least 2");
    if (k < 1 || k > n - 1)
      throw Error(ErrorKind::InvalidArgument, "dimension k must satisfy 1 <= k <= n-1");
    if (generators_.size() < n - k)
      throw Error(ErrorKind::InvalidArgument, "need at least n-k generators");
    for (const auto& f : generators_)
      if (f.n_vars() != n) throw Error(ErrorKind::InvalidArgument, "generator has wrong n_vars");
  }

  /// Convenience constructor from grammar strings.
  static VarietySystem parse(std::size_t n, const std::vector<std::string>& polys, std::size_t k) {
    std::vector<LaurentPoly> gens;
    gens.reserve(polys.size());
    for (const auto& s : polys) gens.push_back(parse_poly(s, n));
    return VarietySystem(n, std::move(gens), k);
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }
  std::size_t l() const noexcept { return generators_.size(); }
  std::size_t codim() const noexcept { return n_ - k_; }
  const std::vector<LaurentPoly>& generators() const noexcept { return generators_; }

  std::vector<Complex> values(std::span<const Complex> z) const {
    std::vector<Complex> out;
    out.reserve(generators_.size());
    for (const auto& f : generators_) out.push_back(f.evaluate(z));
    return out;
  }

  /// max_i |f_i(z)|
  double residual(std::span<const Complex> z) const {
    double r = 0.0;
    for (const auto& f : generators_) r = std::max(r, std::abs(f.evaluate(z)));
    return r;
  }

  /// The system whose zero set is c*V (coordinatewise product).
  VarietySystem translated(std::span<const Complex> c) const {
    std::vector<LaurentPoly> gens;
    gens.reserve(generators_.size());
    for (const auto& f : generators_) gens.push_back(f.translated(c));
    return VarietySystem(n_, std::move(gens), k_);
  }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<LaurentPoly> generators_;
};

/// Matrix of logarithmic gradients: entry (i, j) = z_j * df_i/dz_j (z).
inline CMatrix gauss_matrix(const VarietySystem& v, std::span<const Complex> z) {
  require_torus_point(z, v.n());
  CMatrix g(static_cast<Eigen::Index>(v.l()), static_cast<Eigen::Index>(v.n()));
  for (std::size_t i = 0; i < v.l(); ++i) {
    const auto row = v.generators()[i].log_gradient(z);
    for (std::size_t j = 0; j < v.n(); ++j)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return g;
}

/// A point of CP^{n-1}, stored as its unit-norm representative whose first
/// nonzero coordinate is real and positive.
struct ProjectivePoint {
  std::vector<Complex> coords;
};

inline ProjectivePoint canonical_projective(std::vector<Complex> v, double tol = kDefaultRankTol) {
  double norm = 0.0;
  for (const auto& c : v) norm += std::norm(c);
  norm = std::sqrt(norm);
  if (norm == 0.0) throw Error(ErrorKind::SingularPoint, "zero vector has no projective class");
  for (auto& c : v) c /= norm;
  for (const auto& c : v) {
    if (std::abs(c) > tol) {
      const Complex phase = std::conj(c) / std::abs(c);
      for (auto& x : v) x *= phase;
      break;
    }
  }
  return {std::move(v)};
}

/// Logarithmic Gauss map of the hypersurface {f = 0}:
/// z -> [z1 df/dz1 : ... : zn df/dzn].
inline ProjectivePoint hypersurface_gauss(const LaurentPoly& f, std::span<const Complex> z,
                                          double tol = kDefaultRankTol) {
  auto v = f.log_gradient(z);
  double norm = 0.0;
  for (const auto& c : v) norm = std::max(norm, std::abs(c));
  if (norm <= tol * f.term_magnitude(z))
    throw Error(ErrorKind::SingularPoint, "logarithmic gradient vanishes");
  return canonical_projective(std::move(v), tol);
}

/// True when the class has a real representative, i.e. lies in RP^{n-1}.
inline bool has_real_representative(const ProjectivePoint& p, double tol = kDefaultRankTol) {
  CMatrix row(1, static_cast<Eigen::Index>(p.coords.size()));
  for (std::size_t j = 0; j < p.coords.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = p.coords[j];
  return real_intersection_dim(row, tol) == 1;
}

/// A point of the Grassmannian G(r, n), held as an r x n matrix with
/// orthonormal rows. Only the row space is meaningful; compare with
/// subspace_distance.
struct GrassmannPoint {
  CMatrix basis;
  /// Margin of the rank decision that produced the basis.
  double margin = 1.0;

  std::size_t dim() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t ambient() const { return static_cast<std::size_t>(basis.cols()); }
};

namespace detail {

/// gauss_matrix with rows whose gradient is negligible against the terms of
/// the generator set to zero, so a vanishing gradient cannot pass the
/// relative rank test.
inline CMatrix screened_gauss_matrix(const VarietySystem& v, std::span<const Complex> z, double tol) {
  CMatrix g = gauss_matrix(v, z);
  for (std::size_t i = 0; i < v.l(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (g.row(row).norm() <= tol * v.generators()[i].term_magnitude(z)) g.row(row).setZero();
  }
  return g;
}

}  // namespace detail

/// Generalized logarithmic Gauss map: the row space of gauss_matrix(v, z)
/// as a point of G(n-k, n). Refuses singular points and uncertain ranks.
inline GrassmannPoint generalized_gauss(const VarietySystem& v, std::span<const Complex> z,
                                        double tol = kDefaultRankTol) {
  const CMatrix g = detail::screened_gauss_matrix(v, z, tol);
  if (g.isZero(0.0)) throw Error(ErrorKind::SingularPoint, "all logarithmic gradients vanish");
  RowBasis rb = row_space_basis(g, tol);
  const std::size_t r = rb.report.rank;
  if (r < v.codim()) {
    throw Error(ErrorKind::SingularPoint, "gauss matrix has rank " + std::to_string(r) +
                                              " < codimension " + std::to_string(v.codim()));
  }
  if (r > v.codim()) {
    throw Error(ErrorKind::UncertainRank, "gauss matrix has rank " + std::to_string(r) +
                                              " > codimension " + std::to_string(v.codim()) +
                                              "; point is not on a k-dimensional stratum");
  }
  if (rb.report.uncertain()) {
    throw Error(ErrorKind::UncertainRank,
                "gauss matrix rank margin " + std::to_string(rb.report.margin) + " is too small");
  }
  return {std::move(rb.basis), rb.report.margin};
}

/// Schubert index m = dim_R(E intersected with R^n).
inline std::size_t schubert_index(const GrassmannPoint& e, double tol = kDefaultRankTol) {
  return real_intersection_dim(e.basis, tol);
}

/// m(n-m) + 2(k-m)(n-m), the stated real dimension of the cell sigma_m.
/// Informational only; no classification decision depends on it.
inline std::size_t schubert_cell_dimension(std::size_t m, std::size_t n, std::size_t k) {
  if (m > k || k > n)
    throw Error(ErrorKind::InvalidArgument, "schubert_cell_dimension needs 0 <= m <= k <= n");
  return m * (n - m) + 2 * (k - m) * (n - m);
}

struct CriticalClassification {
  std::size_t m = 0;          // Schubert index of E = gamma_G(z)
  std::size_t generic_m = 0;  // max(0, n - 2k)
  int j = 0;                  // excess m - generic_m
  bool critical = false;      // j >= 1
  double margin = 0.0;        // smallest rank margin met on the way
  std::size_t s_required = 1; // max(1, 2k - n + 1) purely imaginary tangent directions

  std::string stratum() const { return "sigma_" + std::to_string(m); }
};

inline std::size_t generic_schubert_index(std::size_t n, std::size_t k) {
  return n >= 2 * k ? n - 2 * k : 0;
}

inline std::size_t required_imaginary_directions(std::size_t n, std::size_t k) {
  return 2 * k + 1 > n ? std::max<std::size_t>(1, 2 * k + 1 - n) : 1;
}

/// Classifies a Grassmann point E in G(n-k, n) against the strata of
/// critical values: for n >= 2k critical iff m = n-2k+j with 1 <= j <= k,
/// for n < 2k critical iff m = j with 1 <= j <= n-k.
inline CriticalClassification classify_subspace(const GrassmannPoint& e, std::size_t k,
                                                double tol = kDefaultRankTol) {
  const std::size_t n = e.ambient();
  const RealIntersection ri = real_intersection(e.basis, tol);
  CriticalClassification c;
  c.m = ri.m;
  c.generic_m = generic_schubert_index(n, k);
  c.j = static_cast<int>(c.m) - static_cast<int>(c.generic_m);
  c.critical = c.j >= 1;
  c.margin = std::min(e.margin, ri.margin);
  c.s_required = required_imaginary_directions(n, k);
  if (c.margin < kUncertainFactor * tol) {
    throw Error(ErrorKind::UncertainRank,
                "Schubert index decided with margin " + std::to_string(c.margin));
  }
  return c;
}

/// Decides whether z is a critical point of Log restricted to V.
/// Refuses points off V (residual gate), singular points, and points whose
/// rank decisions are too close to the threshold.
inline CriticalClassification classify_point(const VarietySystem& v, std::span<const Complex> z,
                                             const Tolerances& tol = {}) {
  const double res = v.residual(z);
  if (!(res < tol.residual)) {
    throw Error(ErrorKind::OffVariety,
                "residual " + std::to_string(res) + " exceeds " + std::to_string(tol.residual));
  }
  return classify_subspace(generalized_gauss(v, z, tol.rank), v.k(), tol.rank);
}

}  // namespace loggauss
