#pragma once

// Universal vector colorings: a matrix U on the active coordinates with
//   (i)   v^T U = 0 for every constraint v,
//   (ii)  ||sum_i w(i) u_i||^2 <= (1/beta) sum_i w(i)^2 ||u_i||^2,
//   (iii) ||u_i|| <= 1 and sum_i ||u_i||^2 >= (1 - delta - beta) |A|.
//
// The projection construction takes U = I - Q Q^T for an orthonormal basis Q
// of the constraints, adding coordinate drops e_i while some diagonal entry of
// U lies in (0, beta). min_i U_ii >= beta on the support gives (ii) because
// U U^T = U <= I <= (1/beta) Diag(U) there.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "l2disc/constraints.hpp"

namespace l2disc {

struct CertTolerance {
  double kernel = 1e-8;
  double spectral = 1e-6;
  double row_norm = 1e-9;
  double mass = 1e-6;
};

struct CertReport {
  double kernel_residual = 0.0;
  double spectral_margin = 0.0;
  double max_row_norm = 0.0;
  double mass = 0.0;
  double mass_floor = 0.0;
  /// ||U||^2 (top eigenvalue of U U^T), by power iteration.
  double operator_norm_sq = 0.0;
  bool passed = false;
};

/// Rows with squared norm at or below this are outside the support.
inline constexpr double kSupportThreshold = 1e-10;

class VectorColoring {
 public:
  enum class Kind { kProjector, kDense };

  VectorColoring() = default;

  static VectorColoring projector(std::vector<Index> active, Index n, Matrix basis,
                                  std::vector<Index> drops) {
    VectorColoring u;
    u.kind_ = Kind::kProjector;
    u.active_ = std::move(active);
    u.n_ = n;
    u.basis_ = std::move(basis);
    u.drops_ = std::move(drops);
    return u;
  }

  /// Any k x k matrix on the active coordinates (rows u_i).
  static VectorColoring dense(std::vector<Index> active, Index n, Matrix local) {
    VectorColoring u;
    u.kind_ = Kind::kDense;
    u.active_ = std::move(active);
    u.n_ = n;
    u.local_ = std::move(local);
    return u;
  }

  Kind kind() const { return kind_; }
  const std::vector<Index>& active() const { return active_; }
  Index k() const { return static_cast<Index>(active_.size()); }
  Index n() const { return n_; }
  /// Orthonormal basis of the annihilated subspace (projector kind only).
  const Matrix& basis() const { return basis_; }
  /// Active positions removed from the support by coordinate drops.
  const std::vector<Index>& drops() const { return drops_; }

  /// Spectral margin computed exactly during construction, if any.
  std::optional<double> exact_margin() const { return exact_margin_; }
  void set_exact_margin(double m) { exact_margin_ = m; }

  const CertReport& certificate() const { return certificate_; }
  bool certified() const { return certified_; }
  void set_certificate(const CertReport& report) {
    certificate_ = report;
    certified_ = true;
  }

  /// U y for y in active coordinates.
  Vector apply_local(const Vector& y) const {
    if (kind_ == Kind::kDense) return local_ * y;
    return y - basis_ * (basis_.transpose() * y);
  }

  /// U^T y for y in active coordinates.
  Vector apply_transpose_local(const Vector& y) const {
    if (kind_ == Kind::kDense) return local_.transpose() * y;
    return apply_local(y);
  }

  /// The k x k matrix of rows u_i.
  Matrix local_matrix() const {
    if (kind_ == Kind::kDense) return local_;
    Matrix p = -basis_ * basis_.transpose();
    p.diagonal().array() += 1.0;
    return p;
  }

  /// U embedded in n x n, zero outside A(t).
  Matrix dense_matrix() const {
    const Matrix local = local_matrix();
    Matrix full = Matrix::Zero(n_, n_);
    for (Index a = 0; a < k(); ++a) {
      for (Index b = 0; b < k(); ++b) {
        full(active_[static_cast<std::size_t>(a)], active_[static_cast<std::size_t>(b)]) = local(a, b);
      }
    }
    return full;
  }

  /// ||u_i||^2 per active position.
  Vector row_norms_sq() const {
    if (kind_ == Kind::kDense) return local_.rowwise().squaredNorm();
    Vector diag = Vector::Ones(k()) - basis_.rowwise().squaredNorm();
    return diag.cwiseMax(0.0);
  }

  double frobenius_sq() const {
    if (kind_ == Kind::kDense) return local_.squaredNorm();
    return std::max(0.0, static_cast<double>(k()) - static_cast<double>(basis_.cols()));
  }

  /// ||C U||_F^2 where C has columns `cols` (active positions) and zeros elsewhere.
  double masked_product_frobenius_sq(const Matrix& cols, const std::vector<Index>& positions) const {
    if (positions.empty()) return 0.0;
    const auto s = static_cast<Index>(positions.size());
    if (kind_ == Kind::kDense) {
      Matrix rows(s, k());
      for (Index a = 0; a < s; ++a) rows.row(a) = local_.row(positions[static_cast<std::size_t>(a)]);
      return (cols * rows).squaredNorm();
    }
    Matrix q(s, basis_.cols());
    for (Index a = 0; a < s; ++a) q.row(a) = basis_.row(positions[static_cast<std::size_t>(a)]);
    return std::max(0.0, cols.squaredNorm() - (cols * q).squaredNorm());
  }

  /// ||C U||_F^2 for C with k columns in active coordinates.
  double product_frobenius_sq(const Matrix& c) const {
    if (kind_ == Kind::kDense) return (c * local_).squaredNorm();
    return std::max(0.0, c.squaredNorm() - (c * basis_).squaredNorm());
  }

 private:
  Kind kind_ = Kind::kProjector;
  std::vector<Index> active_;
  Index n_ = 0;
  Matrix basis_;
  Matrix local_;
  std::vector<Index> drops_;
  CertReport certificate_;
  bool certified_ = false;
  std::optional<double> exact_margin_;
};

/// Top eigenvalue of A^T A for the operator y -> apply(y), by power iteration.
template <typename Apply, typename ApplyT>
double power_iteration_sq(Index dim, Apply&& apply, ApplyT&& apply_t, int iterations = 60) {
  if (dim == 0) return 0.0;
  Vector z = Vector::Ones(dim) / std::sqrt(static_cast<double>(dim));
  // A deterministic, non-symmetric start avoids landing exactly in a null space.
  for (Index i = 0; i < dim; ++i) z(i) += 1e-3 * std::sin(static_cast<double>(i + 1));
  z.normalize();
  double value = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Vector w = apply_t(apply(z));
    const double norm = w.norm();
    if (!(norm > 0.0)) return 0.0;
    value = z.dot(w);
    z = w / norm;
  }
  const Vector az = apply(z);
  return std::max(value, az.squaredNorm());
}

inline double operator_norm_sq(const VectorColoring& u) {
  return power_iteration_sq(
      u.k(), [&](const Vector& y) { return u.apply_local(y); },
      [&](const Vector& y) { return u.apply_transpose_local(y); });
}

/// Compute every CertReport field by direct linear algebra.
inline CertReport verify_uvc(const VectorColoring& u, const ConstraintSet& set, const RunConfig& config,
                             const CertTolerance& tol = {}) {
  if (u.k() != set.k()) throw Error(ErrorCode::kInvalidArgument, "coloring and constraints disagree on A(t)");
  CertReport r;
  const Matrix local = u.local_matrix();
  for (Index j = 0; j < set.local().cols(); ++j) {
    const double norm = set.local().col(j).norm();
    if (norm < kZeroConstraintNorm) continue;
    const double residual = (local.transpose() * set.local().col(j)).norm() / norm;
    r.kernel_residual = std::max(r.kernel_residual, residual);
  }

  Matrix gram;
  if (u.kind() == VectorColoring::Kind::kProjector &&
      (u.basis().transpose() * u.basis() - Matrix::Identity(u.basis().cols(), u.basis().cols())).norm() <= 1e-10) {
    // U U^T = U for an orthogonal projector.
    gram = local;
  } else {
    gram = Matrix::Zero(local.rows(), local.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(local);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  }
  std::vector<Index> support;
  for (Index i = 0; i < gram.rows(); ++i) {
    if (gram(i, i) > kSupportThreshold) support.push_back(i);
  }
  if (!support.empty()) {
    const auto s = static_cast<Index>(support.size());
    Matrix m(s, s);
    for (Index a = 0; a < s; ++a) {
      for (Index b = 0; b < s; ++b) m(a, b) = -gram(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
      m(a, a) += gram(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(a)]) / config.beta;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::kNumericalFailure, "eigensolver failed");
    r.spectral_margin = eig.eigenvalues()(0);
  }
  r.max_row_norm = gram.rows() ? std::sqrt(gram.diagonal().maxCoeff()) : 0.0;
  r.mass = gram.trace();
  r.mass_floor = (1.0 - config.delta - config.beta) * static_cast<double>(u.k());
  r.operator_norm_sq = operator_norm_sq(u);
  r.passed = r.kernel_residual <= tol.kernel && r.spectral_margin >= -tol.spectral &&
             r.max_row_norm <= 1.0 + tol.row_norm && r.mass >= r.mass_floor - tol.mass;
  return r;
}

/// Cheap certificate for projector colorings: with an orthonormal basis Q and
/// P = I - Q Q^T, min_i P_ii >= beta on the support gives
/// Diag(P)/beta - P >= Diag(P)/beta - I >= 0, so spectral_margin here is the
/// lower bound min_i P_ii / beta - 1. The kernel residual is not recomputed.
inline CertReport quick_certify(const VectorColoring& u, const RunConfig& config, const CertTolerance& tol = {}) {
  if (u.kind() != VectorColoring::Kind::kProjector) {
    throw Error(ErrorCode::kInvalidArgument, "quick certificate needs a projector coloring");
  }
  CertReport r;
  const Matrix& q = u.basis();
  Matrix gram = Matrix::Zero(q.cols(), q.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(q.transpose());
  gram.diagonal().array() -= 1.0;
  const double orth = gram.triangularView<Eigen::Lower>().toDenseMatrix().cwiseAbs().maxCoeff();
  const Vector diag = u.row_norms_sq();
  double min_diag = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < diag.size(); ++i) {
    if (diag(i) > kSupportThreshold) min_diag = std::min(min_diag, diag(i));
  }
  r.spectral_margin = std::isfinite(min_diag) ? min_diag / config.beta - 1.0 : 0.0;
  if (!(q.cols() == 0 || orth <= 1e-10)) r.spectral_margin = -std::numeric_limits<double>::infinity();
  r.max_row_norm = diag.size() ? std::sqrt(diag.maxCoeff()) : 0.0;
  r.mass = diag.sum();
  r.mass_floor = (1.0 - config.delta - config.beta) * static_cast<double>(u.k());
  r.operator_norm_sq = diag.size() && r.mass > 0.0 ? 1.0 : 0.0;
  r.passed = r.spectral_margin >= -tol.spectral && r.max_row_norm <= 1.0 + tol.row_norm &&
             r.mass >= r.mass_floor - tol.mass;
  return r;
}

namespace detail {

/// Orthonormal basis of span(columns), with unit-normalized inputs and a
/// rank cut at `rank_tol` relative to the largest pivot. A blocked QR does the
/// bulk of the work; rank is then revealed on the small triangular factor.
inline Matrix orthonormal_basis(const Matrix& vectors, double rank_tol = 1e-10) {
  if (vectors.cols() == 0) return Matrix(vectors.rows(), 0);
  Matrix scaled = vectors;
  for (Index c = 0; c < scaled.cols(); ++c) {
    const double norm = scaled.col(c).norm();
    if (!std::isfinite(norm)) throw Error(ErrorCode::kNumericalFailure, "non-finite constraint");
    if (norm > 0.0) scaled.col(c) /= norm;
  }
  const Index rows = scaled.rows();
  const Index m = std::min(rows, scaled.cols());
  Eigen::HouseholderQR<Matrix> qr(scaled);
  const Matrix r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  Eigen::ColPivHouseholderQR<Matrix> reveal(r);
  reveal.setThreshold(rank_tol);
  const Index rank = reveal.rank();
  Matrix q = qr.householderQ() * Matrix::Identity(rows, m);
  if (rank < m) q = q * (reveal.householderQ() * Matrix::Identity(m, rank));
  if (!q.allFinite()) throw Error(ErrorCode::kNumericalFailure, "orthonormalization broke down");
  return q;
}

/// Extend an orthonormal basis by unit vectors e_i (two Gram-Schmidt passes).
inline void extend_basis(Matrix& q, const std::vector<Index>& positions) {
  for (Index i : positions) {
    Vector v = Vector::Unit(q.rows(), i);
    for (int pass = 0; pass < 2; ++pass) v -= q * (q.transpose() * v);
    const double norm = v.norm();
    if (!(norm > 1e-8)) continue;
    q.conservativeResize(Eigen::NoChange, q.cols() + 1);
    q.col(q.cols() - 1) = v / norm;
  }
}

inline void check_mass(Index k, Index rank, const RunConfig& config) {
  const double mass = static_cast<double>(k - rank);
  const double floor = (1.0 - config.delta - config.beta) * static_cast<double>(k);
  if (mass < floor - 1e-9) {
    throw Error(ErrorCode::kUvcInfeasible, "support drops push mass " + std::to_string(mass) +
                                               " below floor " + std::to_string(floor));
  }
}

inline bool mass_ok(Index k, Index rank, const RunConfig& config) {
  return static_cast<double>(k - rank) >=
         (1.0 - config.delta - config.beta) * static_cast<double>(k) - 1e-9;
}

/// Returns nullopt when the drops needed by the min-diagonal rule would break
/// the mass floor.
inline std::optional<VectorColoring> construct_projection(const ConstraintSet& set, const RunConfig& config) {
  const Index k = set.k();
  Matrix q = orthonormal_basis(set.local());
  std::vector<Index> drops;
  for (Index round = 0; round <= k; ++round) {
    if (!mass_ok(k, q.cols(), config)) {
      if (drops.empty()) check_mass(k, q.cols(), config);
      return std::nullopt;
    }
    const Vector diag = Vector::Ones(k) - q.rowwise().squaredNorm();
    std::vector<Index> low;
    for (Index i = 0; i < k; ++i) {
      if (diag(i) > kSupportThreshold && diag(i) < config.beta) low.push_back(i);
    }
    if (low.empty()) return VectorColoring::projector(set.active(), set.n(), std::move(q), std::move(drops));
    extend_basis(q, low);
    drops.insert(drops.end(), low.begin(), low.end());
  }
  return std::nullopt;
}

/// Smallest eigenvalue of Diag(P)/beta - P on the support of a projector P.
inline double spectral_margin_of(const VectorColoring& u, const RunConfig& config) {
  const Matrix p = u.local_matrix();
  std::vector<Index> support;
  for (Index i = 0; i < p.rows(); ++i) {
    if (p(i, i) > kSupportThreshold) support.push_back(i);
  }
  if (support.empty()) return 0.0;
  const auto s = static_cast<Index>(support.size());
  Matrix m(s, s);
  for (Index a = 0; a < s; ++a) {
    for (Index b = 0; b < s; ++b) m(a, b) = -p(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
    m(a, a) += p(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(a)]) / config.beta;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::kNumericalFailure, "eigensolver failed");
  return eig.eigenvalues()(0);
}

/// Exact-certificate variant: checks property (ii) on the projector itself
/// and drops the weakest coordinate one at a time until it holds.
inline VectorColoring construct_certified(const ConstraintSet& set, const RunConfig& config,
                                          const CertTolerance& tol) {
  const Index k = set.k();
  Matrix q = orthonormal_basis(set.local());
  std::vector<Index> drops;
  for (Index round = 0; round <= k; ++round) {
    check_mass(k, q.cols(), config);
    auto u = VectorColoring::projector(set.active(), set.n(), q, drops);
    const double margin = spectral_margin_of(u, config);
    u.set_exact_margin(margin);
    if (margin >= -tol.spectral) return u;
    const Vector diag = Vector::Ones(k) - q.rowwise().squaredNorm();
    Index weakest = -1;
    for (Index i = 0; i < k; ++i) {
      if (diag(i) > kSupportThreshold && (weakest < 0 || diag(i) < diag(weakest))) weakest = i;
    }
    if (weakest < 0) return u;
    extend_basis(q, {weakest});
    drops.push_back(weakest);
  }
  throw Error(ErrorCode::kUvcInfeasible, "no certified coloring found");
}

/// Projection with batch drops first; when those exhaust the mass budget,
/// the exact-certificate variant decides.
inline VectorColoring construct_any(const ConstraintSet& set, const RunConfig& config, const CertTolerance& tol) {
  if (config.uvc_method == UvcMethod::kProjection) {
    if (auto u = construct_projection(set, config)) return std::move(*u);
  }
  return construct_certified(set, config, tol);
}

}  // namespace detail

/// Build U_t for the constraint set; the returned coloring carries a certificate.
inline VectorColoring construct_uvc(const ConstraintSet& set, const RunConfig& config,
                                    const CertTolerance& tol = {}) {
  const Index k = set.k();
  if (static_cast<double>(set.size()) > config.delta * static_cast<double>(k) + 1e-9) {
    throw ConstraintBudgetExceeded(set.counts(), static_cast<std::size_t>(k));
  }
  VectorColoring u = detail::construct_any(set, config, tol);
  u.set_certificate(verify_uvc(u, set, config, tol));
  if (!u.certificate().passed) {
    throw Error(ErrorCode::kCertificationFailed, "coloring violates the UVC properties");
  }
  return u;
}

/// Same construction without the eigen-certificate, for use inside the walk
/// where certification is sampled.
inline VectorColoring construct_uvc_unverified(const ConstraintSet& set, const RunConfig& config,
                                               const CertTolerance& tol = {}) {
  const Index k = set.k();
  if (static_cast<double>(set.size()) > config.delta * static_cast<double>(k) + 1e-9) {
    throw ConstraintBudgetExceeded(set.counts(), static_cast<std::size_t>(k));
  }
  return detail::construct_any(set, config, tol);
}

}  // namespace l2disc
