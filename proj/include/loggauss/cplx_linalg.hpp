#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstddef>
#include <string>

#include "error.hpp"
#include "laurent_poly.hpp"

namespace loggauss {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

/// Relative tolerance for every rank decision unless overridden.
inline constexpr double kDefaultRankTol = 1e-10;
/// Rank decisions whose margin falls below this multiple of the tolerance are
/// reported as uncertain.
inline constexpr double kUncertainFactor = 10.0;

/// Outcome of a tolerance-based rank decision.
///
/// `margin` is sigma_rank / sigma_max, the relative size of the smallest
/// singular value that was counted (0 when the rank is 0).
struct RankReport {
  std::size_t rank = 0;
  double margin = 0.0;
  double tol_used = kDefaultRankTol;
  Eigen::VectorXd singular_values;

  bool uncertain() const { return rank > 0 && margin < kUncertainFactor * tol_used; }
};

namespace detail {

template <typename Derived>
void check_rank_input(const Eigen::MatrixBase<Derived>& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) throw Error(ErrorKind::InvalidArgument, "empty matrix");
  if (!(tol > 0.0 && tol < 1.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must lie in (0, 1)");
  if (!m.allFinite()) throw Error(ErrorKind::NonFinite, "matrix has non-finite entries");
}

inline RankReport rank_from_singular_values(const Eigen::VectorXd& sv, Eigen::Index rows,
                                            Eigen::Index cols, double tol) {
  RankReport r;
  r.tol_used = tol;
  r.singular_values = sv;
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  if (smax == 0.0) return r;
  const double threshold = tol * smax * static_cast<double>(std::max(rows, cols));
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++r.rank;
  r.margin = r.rank > 0 ? sv(static_cast<Eigen::Index>(r.rank) - 1) / smax : 0.0;
  return r;
}

}  // namespace detail

/// Numerical rank: singular values above tol * sigma_max * max(rows, cols)
/// are counted. Works for real and complex dense matrices.
template <typename Derived>
RankReport rank_with_margin(const Eigen::MatrixBase<Derived>& m, double tol = kDefaultRankTol) {
  detail::check_rank_input(m, tol);
  using Plain = typename Derived::PlainObject;
  Eigen::JacobiSVD<Plain> svd(m.eval());
  return detail::rank_from_singular_values(svd.singularValues(), m.rows(), m.cols(), tol);
}

/// Orthonormal basis (as rows) of the row space of `m`, with the rank report.
struct RowBasis {
  CMatrix basis;
  RankReport report;
};

inline RowBasis row_space_basis(const CMatrix& m, double tol = kDefaultRankTol) {
  detail::check_rank_input(m, tol);
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  RowBasis out;
  out.report = detail::rank_from_singular_values(svd.singularValues(), m.rows(), m.cols(), tol);
  const auto r = static_cast<Eigen::Index>(out.report.rank);
  // m = U S V^H, so the leading rows of V^H span the rows of m.
  out.basis = svd.matrixV().leftCols(r).adjoint();
  return out;
}

/// Rows form an orthonormal basis of {v : m v = 0}. The product is bilinear
/// (no conjugation), so the rows of `m` annihilate each returned row.
inline CMatrix null_space(const CMatrix& m, double tol = kDefaultRankTol) {
  detail::check_rank_input(m, tol);
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const RankReport rep =
      detail::rank_from_singular_values(svd.singularValues(), m.rows(), m.cols(), tol);
  const auto r = static_cast<Eigen::Index>(rep.rank);
  return svd.matrixV().rightCols(m.cols() - r).transpose();
}

/// Real dimension of (row space E) intersected with R^n, equal to the complex
/// dimension of E intersected with conj(E).
struct RealIntersection {
  std::size_t m = 0;
  /// Smallest margin of the two rank decisions involved.
  double margin = 0.0;
};

inline RealIntersection real_intersection(const CMatrix& m, double tol = kDefaultRankTol) {
  const RankReport own = rank_with_margin(m, tol);
  if (own.rank != static_cast<std::size_t>(m.rows())) {
    throw Error(ErrorKind::RankDeficient, "matrix has rank " + std::to_string(own.rank) + " but " +
                                              std::to_string(m.rows()) +
                                              " rows; pass a basis of the subspace");
  }
  CMatrix stacked(2 * m.rows(), m.cols());
  stacked << m, m.conjugate();
  const RankReport both = rank_with_margin(stacked, tol);
  return {2 * own.rank - both.rank, std::min(own.margin, both.margin)};
}

inline std::size_t real_intersection_dim(const CMatrix& m, double tol = kDefaultRankTol) {
  return real_intersection(m, tol).m;
}

/// Sine of the largest principal angle between the row spaces of a and b.
inline double subspace_distance(const CMatrix& a, const CMatrix& b, double tol = kDefaultRankTol) {
  if (a.cols() != b.cols())
    throw Error(ErrorKind::InvalidArgument, "subspaces live in different ambient spaces");
  const RowBasis ba = row_space_basis(a, tol);
  const RowBasis bb = row_space_basis(b, tol);
  if (ba.report.rank != static_cast<std::size_t>(a.rows()) ||
      bb.report.rank != static_cast<std::size_t>(b.rows()))
    throw Error(ErrorKind::RankDeficient, "subspace_distance needs full-row-rank inputs");
  if (a.rows() != b.rows())
    throw Error(ErrorKind::InvalidArgument, "subspaces have different dimensions");
  // Column bases of the two spaces; distance is the norm of the part of A's
  // basis not captured by the projector onto B.
  const CMatrix qa = ba.basis.transpose();
  const CMatrix qb = bb.basis.transpose();
  const CMatrix residual = qa - qb * (qb.adjoint() * qa);
  Eigen::JacobiSVD<CMatrix> svd(residual);
  return std::clamp(svd.singularValues()(0), 0.0, 1.0);
}

}  // namespace loggauss
