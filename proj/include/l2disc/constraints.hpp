#pragma once

// Per-step constraint set Y(t): active-set selection, the three signed-series
// constraint families, budget accounting and the corruption tracker.
//
// Constraint vectors are stored restricted to the active coordinates: column j
// of a block is a length-k vector whose entry p belongs to column active[p] of
// the instance. Support inside A(t) therefore holds by construction.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "l2disc/core.hpp"

namespace l2disc {

/// Constraint vectors with norm below this are vacuous and never emitted.
inline constexpr double kZeroConstraintNorm = 1e-12;

enum class Family : std::uint8_t { kRow, kSingular, kOrtho, kHeavyRow, kGlobalSingular, kSupportDrop };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::kRow: return "row";
    case Family::kSingular: return "singular";
    case Family::kOrtho: return "ortho";
    case Family::kHeavyRow: return "heavy_row";
    case Family::kGlobalSingular: return "global_singular";
    case Family::kSupportDrop: return "support_drop";
  }
  return "unknown";
}

inline Family parse_family(const std::string& s) {
  for (Family f : {Family::kRow, Family::kSingular, Family::kOrtho, Family::kHeavyRow,
                   Family::kGlobalSingular, Family::kSupportDrop}) {
    if (s == to_string(f)) return f;
  }
  throw Error(ErrorCode::kParse, "unknown constraint family '" + s + "'");
}

/// Output of one builder: k x c matrix of constraint columns in active coordinates.
struct ConstraintBlock {
  Family family;
  Matrix vectors;
};

class ConstraintSet {
 public:
  ConstraintSet() = default;
  ConstraintSet(std::vector<Index> active, Index n, Matrix local, std::vector<Family> family)
      : active_(std::move(active)), n_(n), local_(std::move(local)), family_(std::move(family)) {}

  const std::vector<Index>& active() const { return active_; }
  Index k() const { return static_cast<Index>(active_.size()); }
  Index n() const { return n_; }
  std::size_t size() const { return family_.size(); }
  bool empty() const { return family_.empty(); }
  const Matrix& local() const { return local_; }
  const std::vector<Family>& family() const { return family_; }

  /// Constraint j as a length-n vector.
  Vector embedded(std::size_t j) const {
    Vector v = Vector::Zero(n_);
    for (Index p = 0; p < k(); ++p) v(active_[static_cast<std::size_t>(p)]) = local_(p, static_cast<Index>(j));
    return v;
  }

  bool has(Family f) const { return std::find(family_.begin(), family_.end(), f) != family_.end(); }

  FamilyCounts counts() const {
    FamilyCounts c;
    for (Family f : family_) {
      switch (f) {
        case Family::kRow: ++c.row; break;
        case Family::kSingular: ++c.singular; break;
        case Family::kOrtho: ++c.ortho; break;
        case Family::kHeavyRow: ++c.heavy_row; break;
        case Family::kGlobalSingular: ++c.global_singular; break;
        case Family::kSupportDrop: ++c.support_drop; break;
      }
    }
    return c;
  }

  /// Columns of one family, in emission order.
  Matrix of_family(Family f) const {
    std::vector<Index> cols;
    for (std::size_t j = 0; j < family_.size(); ++j) {
      if (family_[j] == f) cols.push_back(static_cast<Index>(j));
    }
    Matrix out(k(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = local_.col(cols[c]);
    return out;
  }

 private:
  std::vector<Index> active_;
  Index n_ = 0;
  Matrix local_;
  std::vector<Family> family_;
};

/// Number of least-indexed alive variables made active in the signed-series walk.
inline Index signed_series_cap(Index d, const RunConfig& config) {
  return static_cast<Index>(std::ceil(static_cast<double>(d) / config.delta_prime - 1e-9));
}

/// The min(|N(t)|, cap) smallest alive indices, ascending.
inline std::vector<Index> compute_active_set(const WalkState& state, Index cap) {
  std::vector<Index> active;
  for (Index i = 0; i < state.n() && static_cast<Index>(active.size()) < cap; ++i) {
    if (state.alive(i)) active.push_back(i);
  }
  return active;
}

inline std::vector<Index> compute_active_set(const WalkState& state, const Instance& inst,
                                             const RunConfig& config) {
  return compute_active_set(state, signed_series_cap(inst.d(), config));
}

/// B restricted to the active columns (d x k).
inline Matrix active_columns(const Instance& inst, std::span<const Index> active) {
  Matrix out(inst.d(), static_cast<Index>(active.size()));
  for (std::size_t p = 0; p < active.size(); ++p) out.col(static_cast<Index>(p)) = inst.column(active[p]);
  return out;
}

/// Largest number of constraints allowed for k active variables.
inline std::size_t constraint_budget(Index k, double delta) {
  return static_cast<std::size_t>(std::floor(delta * static_cast<double>(k) + 1e-9));
}

namespace detail {

inline Matrix keep_nonzero_columns(const Matrix& m) {
  std::vector<Index> keep;
  for (Index c = 0; c < m.cols(); ++c) {
    if (m.col(c).norm() >= kZeroConstraintNorm) keep.push_back(c);
  }
  Matrix out(m.rows(), static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) out.col(static_cast<Index>(c)) = m.col(keep[c]);
  return out;
}

}  // namespace detail

/// One constraint per row of B restricted to A(t), only when A(t) is at the cap.
inline Matrix build_row_constraints(const Instance& inst, std::span<const Index> active,
                                    const RunConfig& config) {
  const auto k = static_cast<Index>(active.size());
  if (k == 0 || k < signed_series_cap(inst.d(), config)) return Matrix(k, 0);
  return detail::keep_nonzero_columns(active_columns(inst, active).transpose());
}

/// Right singular vectors with sigma^2 > sqrt(d) of the prefix matrices B_{L_j}.
///
/// The active set is cut into max(1, floor(alpha1 sqrt d)) contiguous blocks;
/// prefix j spans the first min(j * blocksize, k) active columns. When more
/// candidates exist than `limit` (default ceil(alpha1 k) + #blocks), the ones
/// with the largest sigma^2 are kept, in emission order.
inline Matrix build_singular_constraints(const Instance& inst, std::span<const Index> active,
                                         const RunConfig& config,
                                         std::optional<std::size_t> limit = std::nullopt) {
  const auto k = static_cast<Index>(active.size());
  if (k == 0) return Matrix(0, 0);
  const double sqrt_d = std::sqrt(static_cast<double>(inst.d()));
  const Index blocks = std::max<Index>(1, static_cast<Index>(std::floor(config.alpha1 * sqrt_d + 1e-9)));
  const Index block_size = (k + blocks - 1) / blocks;
  const std::size_t cap =
      limit.value_or(static_cast<std::size_t>(std::ceil(config.alpha1 * static_cast<double>(k) - 1e-9)) +
                     static_cast<std::size_t>(blocks));

  const Matrix b_active = active_columns(inst, active);
  if (!b_active.allFinite()) throw Error(ErrorCode::kNumericalFailure, "SVD input is not finite");

  struct Candidate {
    double sigma_sq;
    std::size_t order;
    Vector v;
  };
  std::vector<Candidate> candidates;
  for (Index j = 1; j <= blocks; ++j) {
    if ((j - 1) * block_size >= k) break;
    const Index cols = std::min(j * block_size, k);
    const auto prefix = b_active.leftCols(cols);
    const Matrix gram = prefix * prefix.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw Error(ErrorCode::kNumericalFailure, "SVD did not converge");
    for (Index l = eig.eigenvalues().size() - 1; l >= 0; --l) {
      const double sigma_sq = eig.eigenvalues()(l);
      if (!(sigma_sq > sqrt_d)) break;
      Vector v = Vector::Zero(k);
      v.head(cols) = prefix.transpose() * eig.eigenvectors().col(l) / std::sqrt(sigma_sq);
      candidates.push_back({sigma_sq, candidates.size(), std::move(v)});
    }
  }
  if (candidates.size() > cap) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.sigma_sq > b.sigma_sq; });
    candidates.resize(cap);
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.order < b.order; });
  }
  Matrix out(k, static_cast<Index>(candidates.size()));
  for (std::size_t c = 0; c < candidates.size(); ++c) out.col(static_cast<Index>(c)) = candidates[c].v;
  return out;
}

/// Orthogonality constraints w_j = B_{S_j}^T B_{S_j} x for prefix blocks S_j of
/// ceil(1/alpha2) active indices (the last block may be short). Vanishing w_j
/// are dropped; at most `limit` blocks, counted from the first, are considered.
inline Matrix build_ortho_constraints(const Instance& inst, std::span<const Index> active,
                                      const Vector& x, const RunConfig& config,
                                      std::optional<std::size_t> limit = std::nullopt) {
  const auto k = static_cast<Index>(active.size());
  if (k == 0) return Matrix(0, 0);
  const Index block_size = static_cast<Index>(std::ceil(1.0 / config.alpha2 - 1e-9));
  const Index blocks = (k + block_size - 1) / block_size;
  const Index considered =
      limit ? std::min<Index>(blocks, static_cast<Index>(*limit)) : blocks;

  const Matrix b_active = active_columns(inst, active);
  Vector xa(k);
  for (Index p = 0; p < k; ++p) xa(p) = x(active[static_cast<std::size_t>(p)]);

  std::vector<Vector> kept;
  Vector prefix_sum = Vector::Zero(inst.d());
  Index covered = 0;
  for (Index j = 1; j <= considered; ++j) {
    const Index cols = std::min(j * block_size, k);
    prefix_sum += b_active.middleCols(covered, cols - covered) * xa.segment(covered, cols - covered);
    covered = cols;
    Vector w = Vector::Zero(k);
    w.head(cols) = b_active.leftCols(cols).transpose() * prefix_sum;
    if (w.norm() >= kZeroConstraintNorm) kept.push_back(std::move(w));
  }
  Matrix out(k, static_cast<Index>(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) out.col(static_cast<Index>(c)) = kept[c];
  return out;
}

/// Concatenate builder outputs and enforce |Y(t)| <= delta |A(t)|.
inline ConstraintSet assemble_constraint_set(std::vector<Index> active, Index n,
                                             std::span<const ConstraintBlock> blocks, double delta) {
  const auto k = static_cast<Index>(active.size());
  Index total = 0;
  for (const auto& b : blocks) {
    if (b.vectors.cols() > 0 && b.vectors.rows() != k) {
      throw Error(ErrorCode::kInvalidArgument, "constraint block does not match the active set");
    }
    total += b.vectors.cols();
  }
  Matrix local(k, total);
  std::vector<Family> family;
  family.reserve(static_cast<std::size_t>(total));
  Index c = 0;
  for (const auto& b : blocks) {
    for (Index j = 0; j < b.vectors.cols(); ++j) {
      if (b.vectors.col(j).norm() < kZeroConstraintNorm) continue;
      local.col(c++) = b.vectors.col(j);
      family.push_back(b.family);
    }
  }
  local.conservativeResize(k, c);
  ConstraintSet set(std::move(active), n, std::move(local), std::move(family));
  if (static_cast<double>(set.size()) > delta * static_cast<double>(k) + 1e-9) {
    throw ConstraintBudgetExceeded(set.counts(), static_cast<std::size_t>(k));
  }
  return set;
}

/// Full signed-series constraint set for the current state. Rows take priority,
/// then orthogonality blocks, then singular vectors, inside the delta budget.
inline ConstraintSet build_signed_series_constraints(const Instance& inst, const WalkState& state,
                                                     std::vector<Index> active, const RunConfig& config,
                                                     const Matrix* cached_rows = nullptr,
                                                     const Matrix* cached_singular = nullptr) {
  const auto k = static_cast<Index>(active.size());
  const std::size_t budget = constraint_budget(k, config.delta);
  Matrix rows = cached_rows ? *cached_rows : build_row_constraints(inst, active, config);
  const std::size_t n_rows = static_cast<std::size_t>(rows.cols());
  const std::size_t ortho_room = budget > n_rows ? budget - n_rows : 0;
  Matrix ortho = build_ortho_constraints(inst, active, state.x, config, ortho_room);
  const std::size_t used = n_rows + static_cast<std::size_t>(ortho.cols());
  const std::size_t singular_room = budget > used ? budget - used : 0;
  Matrix singular;
  if (cached_singular) {
    singular = cached_singular->leftCols(std::min<Index>(cached_singular->cols(),
                                                         static_cast<Index>(singular_room)));
  } else {
    singular = build_singular_constraints(inst, active, config, singular_room);
  }
  const std::vector<ConstraintBlock> blocks{{Family::kRow, std::move(rows)},
                                            {Family::kSingular, std::move(singular)},
                                            {Family::kOrtho, std::move(ortho)}};
  return assemble_constraint_set(std::move(active), inst.n(), blocks, config.delta);
}

/// Conservative protection/corruption tracker for prefix sets S = [i].
///
/// A column k in A(t) with k < i is protected at t when row constraints are
/// present and A(t) lies inside the prefix. It becomes corrupted the first
/// time it is active without ever having been protected.
class CorruptionLog {
 public:
  struct Entry {
    Index prefix = 0;
    std::vector<std::uint8_t> ever_protected;
    std::vector<std::uint8_t> in_corrupted;
    std::vector<Index> corrupted;
    std::optional<std::uint64_t> first_corruption_time;
  };

  CorruptionLog() = default;
  CorruptionLog(std::vector<Index> prefixes, Index n) {
    for (Index p : prefixes) {
      if (p < 1 || p > n) throw Error(ErrorCode::kInvalidArgument, "monitored prefix out of range");
      Entry e;
      e.prefix = p;
      e.ever_protected.assign(static_cast<std::size_t>(n), 0);
      e.in_corrupted.assign(static_cast<std::size_t>(n), 0);
      entries_.push_back(std::move(e));
    }
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  bool is_corrupted(std::size_t entry, Index column) const {
    return entries_[entry].in_corrupted[static_cast<std::size_t>(column)] != 0;
  }

  /// Apply step t. Returns, per entry, the columns that joined this step.
  std::vector<std::vector<Index>> update(const ConstraintSet& set, std::uint64_t t) {
    std::vector<std::vector<Index>> joined(entries_.size());
    const bool has_rows = set.has(Family::kRow);
    const auto& active = set.active();
    for (std::size_t e = 0; e < entries_.size(); ++e) {
      Entry& entry = entries_[e];
      const bool inside = !active.empty() && active.back() < entry.prefix;
      const bool protected_now = has_rows && inside;
      for (Index col : active) {
        if (col >= entry.prefix) break;
        const auto c = static_cast<std::size_t>(col);
        if (protected_now) {
          if (!entry.in_corrupted[c]) entry.ever_protected[c] = 1;
        } else if (!entry.ever_protected[c] && !entry.in_corrupted[c]) {
          entry.in_corrupted[c] = 1;
          entry.corrupted.push_back(col);
          joined[e].push_back(col);
          if (!entry.first_corruption_time) entry.first_corruption_time = t;
        }
      }
    }
    return joined;
  }

 private:
  std::vector<Entry> entries_;
};

inline std::vector<std::vector<Index>> update_corruption(CorruptionLog& log, const ConstraintSet& set,
                                                         std::uint64_t t) {
  return log.update(set, t);
}

}  // namespace l2disc
