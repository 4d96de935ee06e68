#pragma once

// Discrepancy measurements and the per-prefix quadratic/linear decomposition
//   ||B_S x_t||^2 - ||B_S x_0||^2 = Q_t + 2 L_t,
//   ||I_S x_t||^2 - ||I_S x_0||^2 = Qt_t + 2 Lt_t,
// where B_S keeps the corrupted columns of prefix S and I_S selects them.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "l2disc/constraints.hpp"
#include "l2disc/uvc.hpp"

namespace l2disc {

struct PrefixDiscrepancy {
  double value = 0.0;
  /// Prefix length (1-based) attaining the maximum.
  Index argmax = 0;
};

/// max_i ||sum_{j<=i} x(j) v_j||_2 in one running-sum pass.
inline PrefixDiscrepancy max_prefix_discrepancy(const Instance& inst, const Vector& x) {
  if (x.size() != inst.n()) throw Error(ErrorCode::kInvalidArgument, "coloring length mismatch");
  PrefixDiscrepancy best{-1.0, 0};
  Vector sum = Vector::Zero(inst.d());
  for (Index j = 0; j < inst.n(); ++j) {
    sum += x(j) * inst.column(j);
    const double norm = sum.norm();
    if (norm > best.value) best = {norm, j + 1};
  }
  return best;
}

/// All prefix norms ||sum_{j<=i} x(j) v_j||_2, i = 1..n.
inline Vector prefix_norms(const Instance& inst, const Vector& x) {
  Vector out(inst.n());
  Vector sum = Vector::Zero(inst.d());
  for (Index j = 0; j < inst.n(); ++j) {
    sum += x(j) * inst.column(j);
    out(j) = sum.norm();
  }
  return out;
}

struct SetDiscrepancy {
  std::vector<Index> rows;
  double sum = 0.0;
  /// sum / (ln n + |F|).
  double ratio = 0.0;
};

/// sum_{i in F} (e_i^T M x)^2 for each set F of row indices.
inline std::vector<SetDiscrepancy> local_mean_sq_discrepancy(const Instance& m, const Vector& x,
                                                             const std::vector<std::vector<Index>>& sets) {
  if (x.size() != m.n()) throw Error(ErrorCode::kInvalidArgument, "coloring length mismatch");
  const Vector mx = m.matrix() * x;
  const double log_n = std::log(static_cast<double>(m.n()));
  std::vector<SetDiscrepancy> out;
  out.reserve(sets.size());
  for (const auto& f : sets) {
    if (f.empty()) throw Error(ErrorCode::kInvalidArgument, "empty row set");
    SetDiscrepancy s;
    s.rows = f;
    for (Index i : f) {
      if (i < 0 || i >= m.d()) throw Error(ErrorCode::kInvalidArgument, "row index " + std::to_string(i) + " out of range");
      s.sum += mx(i) * mx(i);
    }
    s.ratio = s.sum / (log_n + static_cast<double>(f.size()));
    out.push_back(std::move(s));
  }
  return out;
}

/// One walk step: r on A(t) and the applied increment delta_x = gamma_used U r.
struct StepSample {
  Vector r;
  Vector delta_x;
  double gamma_used = 0.0;
  int halvings = 0;
};

struct PrefixRecord {
  Index prefix = 0;
  double q = 0.0;
  double l = 0.0;
  double q_tilde = 0.0;
  double l_tilde = 0.0;
  Index corr_size = 0;
};

struct StepRecord {
  std::uint64_t t = 0;
  Index alive = 0;
  double v_b = 0.0;
  double max_prefix_disc = 0.0;
  std::vector<PrefixRecord> prefixes;
};

/// Counters for the runtime-checked invariants. Every *_violations field is
/// expected to stay zero.
struct InvariantReport {
  std::uint64_t steps_checked = 0;
  std::uint64_t verifications = 0;
  /// Support-drop steps certified by the min-diagonal test.
  std::uint64_t drop_certifications = 0;
  /// Steps where batch drops would break the mass floor and the exact variant ran.
  std::uint64_t certified_fallbacks = 0;
  std::uint64_t box_violations = 0;
  std::uint64_t cert_failures = 0;
  std::uint64_t operator_norm_violations = 0;
  std::uint64_t ortho_violations = 0;
  std::uint64_t op_bound_violations = 0;
  std::uint64_t energy_violations = 0;
  std::uint64_t linear_variance_violations = 0;
  std::uint64_t heavy_row_violations = 0;
  std::uint64_t support_drops = 0;
  std::uint64_t halved_steps = 0;
  double max_kernel_residual = 0.0;
  double min_spectral_margin = std::numeric_limits<double>::infinity();
  double max_operator_norm_sq = 0.0;
  /// max |w_j^T delta_x| / gamma over all steps and orthogonality blocks.
  double max_ortho_residual = 0.0;
  /// max |e_i^T M delta_x| / (gamma ||row|| sqrt|A|) over heavy-row constraints.
  double max_heavy_row_residual = 0.0;
  /// max ||B_S U||^2 / ||U||^2 at verification steps.
  double max_op_ratio = 0.0;
};

/// Empirical counterparts of the analysis constants.
struct FittedConstants {
  /// max beta ||x^T B_S^T B_S U||^2 / ||U||_F^2 over sampled steps.
  double c_l_hat = 0.0;
  /// max_S beta * sum_t Z_t / V_B.
  double energy_ratio = 0.0;
  /// max ||B_S U||^2 / ||U||^2 relative to the bound 4 sqrt(d) / (alpha1 delta').
  double op_ratio_over_bound = 0.0;
};

struct TraceSummary {
  double max_prefix_discrepancy = 0.0;
  Index argmax_prefix = 0;
  std::uint64_t steps = 0;
  Index frozen_count = 0;
  double wall_time_s = 0.0;
};

struct DiagnosticsTrace {
  std::vector<StepRecord> records;
  double v_b = 0.0;
  /// (U_t Frobenius norm squared, gamma used) per step when recording is enabled.
  std::vector<std::pair<double, double>> unorms;
  InvariantReport checks;
  FittedConstants fitted;
  TraceSummary summary;
  /// The tracker uses single-constraint protection witnesses only.
  bool conservative_corruption = true;
};

/// Running Q, L, Qt, Lt for one monitored prefix.
struct PrefixAccumulator {
  Index prefix = 0;
  double q = 0.0;
  double l = 0.0;
  double q_tilde = 0.0;
  double l_tilde = 0.0;
  double energy = 0.0;  // sum_t Z_t
  Vector bsx;           // B_S x_t
  double isx_sq = 0.0;  // ||I_S x_t||^2
};

class PrefixDiagnostics {
 public:
  PrefixDiagnostics() = default;
  PrefixDiagnostics(const Instance& inst, const std::vector<Index>& prefixes) {
    for (Index p : prefixes) {
      PrefixAccumulator a;
      a.prefix = p;
      a.bsx = Vector::Zero(inst.d());
      acc_.push_back(std::move(a));
    }
  }

  const std::vector<PrefixAccumulator>& accumulators() const { return acc_; }

  /// Fold in newly corrupted columns (their x_{t-1} enters B_S x).
  void add_columns(const Instance& inst, const Vector& x_before,
                   const std::vector<std::vector<Index>>& joined) {
    for (std::size_t e = 0; e < acc_.size() && e < joined.size(); ++e) {
      for (Index col : joined[e]) {
        acc_[e].bsx += x_before(col) * inst.column(col);
        acc_[e].isx_sq += x_before(col) * x_before(col);
      }
    }
  }

  /// Increments of Q, L, Qt, Lt for the step from x_before by sample.delta_x.
  void decompose(const Instance& inst, const Vector& x_before, const StepSample& sample,
                 const CorruptionLog& log, std::span<const Index> active) {
    for (std::size_t e = 0; e < acc_.size(); ++e) {
      PrefixAccumulator& a = acc_[e];
      Vector bs_dx = Vector::Zero(inst.d());
      double dq_tilde = 0.0;
      double dl_tilde = 0.0;
      for (Index col : active) {
        if (!log.is_corrupted(e, col)) continue;
        const double dx = sample.delta_x(col);
        bs_dx += dx * inst.column(col);
        dq_tilde += dx * dx;
        dl_tilde += x_before(col) * dx;
      }
      a.q += bs_dx.squaredNorm();
      a.l += a.bsx.dot(bs_dx);
      a.bsx += bs_dx;
      a.q_tilde += dq_tilde;
      a.l_tilde += dl_tilde;
      a.isx_sq += 2.0 * dl_tilde + dq_tilde;
    }
  }

  std::vector<PrefixAccumulator>& mutable_accumulators() { return acc_; }

 private:
  std::vector<PrefixAccumulator> acc_;
};

/// Free-function form of one decomposition update, including V_B.
inline void decompose_increments(DiagnosticsTrace& trace, PrefixDiagnostics& diag, const Instance& inst,
                                 const Vector& x_before, const StepSample& sample, const CorruptionLog& log,
                                 const VectorColoring& u) {
  diag.decompose(inst, x_before, sample, log, u.active());
  trace.v_b += sample.gamma_used * sample.gamma_used * u.frobenius_sq();
}

/// ||B_S x||^2 and ||I_S x||^2 recomputed from scratch for a corrupted set.
struct DirectNorms {
  double bsx_sq = 0.0;
  double isx_sq = 0.0;
};

inline DirectNorms direct_corrupted_norms(const Instance& inst, const Vector& x,
                                          const std::vector<Index>& corrupted) {
  Vector bsx = Vector::Zero(inst.d());
  double isx = 0.0;
  for (Index col : corrupted) {
    bsx += x(col) * inst.column(col);
    isx += x(col) * x(col);
  }
  return {bsx.squaredNorm(), isx};
}

}  // namespace l2disc
