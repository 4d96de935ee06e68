#pragma once

// The constrained random walk x_t = x_{t-1} + gamma U_t r_t and its driver.

#include <chrono>
#include <memory>
#include <vector>

#include "l2disc/constraints.hpp"
#include "l2disc/metrics.hpp"
#include "l2disc/uvc.hpp"

namespace l2disc {

/// Apply one step. The increment is scaled by gamma, halved (same r) until no
/// coordinate leaves [-1, 1]; coordinates reaching 1 - 1/n freeze.
inline StepSample walk_step(WalkState& state, const VectorColoring& u, const RunConfig& config) {
  const std::uint64_t t = state.t + 1;
  const CounterRng rng(state.seed);
  const Index k = u.k();
  const auto& active = u.active();

  Vector r_local(k);
  for (Index p = 0; p < k; ++p) {
    r_local(p) = rng.rademacher(Stream::kWalkSigns, t, static_cast<std::uint64_t>(active[static_cast<std::size_t>(p)]));
  }
  const Vector ur = u.apply_local(r_local);

  double gamma = config.gamma;
  int halvings = 0;
  for (;; ++halvings) {
    bool inside = true;
    for (Index p = 0; p < k; ++p) {
      if (std::abs(state.x(active[static_cast<std::size_t>(p)]) + gamma * ur(p)) > 1.0) {
        inside = false;
        break;
      }
    }
    if (inside) break;
    if (halvings >= config.max_halvings) {
      throw Error(ErrorCode::kStepOverflow,
                  "step " + std::to_string(t) + " leaves the unit box after " +
                      std::to_string(halvings) + " halvings");
    }
    gamma *= 0.5;
  }

  StepSample sample;
  sample.r = Vector::Zero(state.n());
  sample.delta_x = Vector::Zero(state.n());
  sample.gamma_used = gamma;
  sample.halvings = halvings;
  const double threshold = state.freeze_threshold();
  for (Index p = 0; p < k; ++p) {
    const Index i = active[static_cast<std::size_t>(p)];
    const double dx = gamma * ur(p);
    sample.r(i) = r_local(p);
    sample.delta_x(i) = dx;
    state.x(i) += dx;
    if (std::abs(state.x(i)) >= threshold) state.status[static_cast<std::size_t>(i)] = VarStatus::kFrozen;
  }
  state.t = t;
  return sample;
}

struct RunResult {
  Coloring coloring;
  DiagnosticsTrace trace;
  WalkState state;
  CorruptionLog corruption;
  PrefixDiagnostics prefixes;
};

/// Thrown when the step budget runs out; carries everything computed so far.
class MaxStepsExceeded : public Error {
 public:
  explicit MaxStepsExceeded(std::shared_ptr<RunResult> partial)
      : Error(ErrorCode::kMaxStepsExceeded,
              std::to_string(partial->state.alive_count()) + " variables still alive after " +
                  std::to_string(partial->state.t) + " steps"),
        partial_(std::move(partial)) {}

  const RunResult& partial() const { return *partial_; }

 private:
  std::shared_ptr<RunResult> partial_;
};

/// Operator-norm budget 4 sqrt(d) / (alpha1 delta') for B_S U_t.
inline double op_norm_budget(Index d, const RunConfig& config) {
  return 4.0 * std::sqrt(static_cast<double>(d)) / (config.alpha1 * config.delta_prime);
}

namespace detail {

/// B_S restricted to A(t): columns of corrupted active indices, zeros elsewhere.
inline Matrix corrupted_active_columns(const Instance& inst, const CorruptionLog& log, std::size_t entry,
                                       std::span<const Index> active, bool& any) {
  Matrix out = Matrix::Zero(inst.d(), static_cast<Index>(active.size()));
  any = false;
  for (std::size_t p = 0; p < active.size(); ++p) {
    if (log.is_corrupted(entry, active[p])) {
      out.col(static_cast<Index>(p)) = inst.column(active[p]);
      any = true;
    }
  }
  return out;
}

inline StepRecord make_record(const Instance& inst, const WalkState& state, Index alive, double v_b,
                              const CorruptionLog& log, const PrefixDiagnostics& diag) {
  StepRecord rec;
  rec.t = state.t;
  rec.alive = alive;
  rec.v_b = v_b;
  rec.max_prefix_disc = max_prefix_discrepancy(inst, state.x).value;
  for (std::size_t e = 0; e < diag.accumulators().size(); ++e) {
    const auto& a = diag.accumulators()[e];
    rec.prefixes.push_back({a.prefix, a.q, a.l, a.q_tilde, a.l_tilde,
                            static_cast<Index>(log.entries()[e].corrupted.size())});
  }
  return rec;
}

}  // namespace detail

/// Constraint policy for the signed-series walk: least-indexed active window
/// capped at ceil(d / delta'), with row and singular constraints cached per A(t).
class SignedSeriesPolicy {
 public:
  SignedSeriesPolicy(const Instance& inst, const RunConfig& config) : inst_(inst), config_(config) {}

  Index active_cap(const WalkState&) const { return signed_series_cap(inst_.d(), config_); }

  ConstraintSet build(const WalkState& state, std::vector<Index> active, bool changed) {
    if (changed) {
      rows_ = build_row_constraints(inst_, active, config_);
      const std::size_t budget = constraint_budget(static_cast<Index>(active.size()), config_.delta);
      const auto n_rows = static_cast<std::size_t>(rows_.cols());
      singular_ = build_singular_constraints(inst_, active, config_, budget > n_rows ? budget - n_rows : 0);
    }
    return build_signed_series_constraints(inst_, state, std::move(active), config_, &rows_, &singular_);
  }

 private:
  const Instance& inst_;
  const RunConfig& config_;
  Matrix rows_;
  Matrix singular_;
};

/// Generic walk driver. Policy supplies active_cap(state) and
/// build(state, active, active_changed) -> ConstraintSet.
template <typename Policy>
RunResult run_walk(const Instance& inst, const RunConfig& config, Policy& policy,
                   const CertTolerance& tol = {}) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const Index n = inst.n();
  const std::uint64_t max_steps = config.effective_max_steps(n);

  auto result = std::make_shared<RunResult>();
  result->state = WalkState(n, config.seed);
  result->corruption = CorruptionLog(config.monitored_prefixes, n);
  result->prefixes = PrefixDiagnostics(inst, config.monitored_prefixes);
  WalkState& state = result->state;
  DiagnosticsTrace& trace = result->trace;
  CorruptionLog& log = result->corruption;
  PrefixDiagnostics& diag = result->prefixes;
  InvariantReport& checks = trace.checks;

  const double b_op = op_norm_budget(inst.d(), config);
  Index alive = n;
  std::vector<Index> previous_active;

  auto finish = [&]() {
    trace.records.push_back(detail::make_record(inst, state, alive, trace.v_b, log, diag));
    result->coloring = round_coloring(state);
    const auto disc = max_prefix_discrepancy(inst, result->coloring.as_vector());
    trace.summary.max_prefix_discrepancy = disc.value;
    trace.summary.argmax_prefix = disc.argmax;
    trace.summary.steps = state.t;
    trace.summary.frozen_count = n - alive;
    for (const auto& a : diag.accumulators()) {
      if (trace.v_b > 0.0) {
        trace.fitted.energy_ratio = std::max(trace.fitted.energy_ratio, config.beta * a.energy / trace.v_b);
      }
    }
    trace.fitted.op_ratio_over_bound = checks.max_op_ratio / b_op;
    trace.summary.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  };

  while (alive > 0) {
    if (state.t >= max_steps) {
      finish();
      throw MaxStepsExceeded(result);
    }
    if (config.time_budget_s > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() > config.time_budget_s) {
      throw Error(ErrorCode::kTimeout, "time budget exhausted after " + std::to_string(state.t) + " steps");
    }
    const std::uint64_t t = state.t + 1;
    std::vector<Index> active = compute_active_set(state, policy.active_cap(state));
    const bool changed = active != previous_active;
    previous_active = active;

    const ConstraintSet set = policy.build(state, std::move(active), changed);
    VectorColoring u = construct_uvc_unverified(set, config, tol);
    checks.support_drops += u.drops().size();

    const bool verify_now = t == 1 || t % config.verify_every == 0;
    if (u.exact_margin() && config.uvc_method == UvcMethod::kProjection) ++checks.certified_fallbacks;
    if (!verify_now && !u.drops().empty() && u.kind() == VectorColoring::Kind::kProjector) {
      const bool passed = u.exact_margin() ? *u.exact_margin() >= -tol.spectral
                                           : quick_certify(u, config, tol).passed;
      ++checks.drop_certifications;
      if (!passed) {
        ++checks.cert_failures;
        finish();
        throw Error(ErrorCode::kCertificationFailed, "support-drop certificate failed at step " + std::to_string(t));
      }
    }
    if (verify_now) {
      const CertReport report = verify_uvc(u, set, config, tol);
      ++checks.verifications;
      checks.max_kernel_residual = std::max(checks.max_kernel_residual, report.kernel_residual);
      checks.min_spectral_margin = std::min(checks.min_spectral_margin, report.spectral_margin);
      checks.max_operator_norm_sq = std::max(checks.max_operator_norm_sq, report.operator_norm_sq);
      if (report.operator_norm_sq > 1.0 / config.beta + 1e-6) ++checks.operator_norm_violations;
      u.set_certificate(report);
      if (!report.passed) {
        ++checks.cert_failures;
        finish();
        throw Error(ErrorCode::kCertificationFailed, "UVC certificate failed at step " + std::to_string(t));
      }
    }

    const auto joined = log.update(set, t);
    diag.add_columns(inst, state.x, joined);
    const Vector x_before = state.x;
    const StepSample sample = walk_step(state, u, config);
    ++checks.steps_checked;
    if (sample.halvings > 0) ++checks.halved_steps;

    // Box, freezing and orthogonality consequences.
    Vector r_local(u.k());
    for (Index p = 0; p < u.k(); ++p) {
      const Index i = u.active()[static_cast<std::size_t>(p)];
      r_local(p) = sample.r(i);
      if (std::abs(state.x(i)) > 1.0) ++checks.box_violations;
      if (!state.alive(i)) --alive;
    }
    const Vector ur = u.apply_local(r_local);
    const double scale = std::sqrt(static_cast<double>(u.k()));
    for (std::size_t j = 0; j < set.size(); ++j) {
      const auto col = set.local().col(static_cast<Index>(j));
      if (set.family()[j] == Family::kOrtho) {
        const double residual = std::abs(col.dot(ur));
        checks.max_ortho_residual = std::max(checks.max_ortho_residual, residual);
        if (residual > 1e-6 * config.gamma) ++checks.ortho_violations;
      } else if (set.family()[j] == Family::kHeavyRow) {
        const double residual = std::abs(col.dot(ur)) / (col.norm() * scale);
        checks.max_heavy_row_residual = std::max(checks.max_heavy_row_residual, residual);
        if (residual > 1e-8) ++checks.heavy_row_violations;
      }
    }

    // Per-prefix energy and spectral spot checks.
    const double u_frob = u.frobenius_sq();
    const double g2 = sample.gamma_used * sample.gamma_used;
    for (std::size_t e = 0; e < log.size(); ++e) {
      std::vector<Index> positions;
      for (Index p = 0; p < u.k(); ++p) {
        if (log.is_corrupted(e, u.active()[static_cast<std::size_t>(p)])) positions.push_back(p);
      }
      if (positions.empty()) continue;
      Matrix bsc(inst.d(), static_cast<Index>(positions.size()));
      for (std::size_t a = 0; a < positions.size(); ++a) {
        bsc.col(static_cast<Index>(a)) = inst.column(u.active()[static_cast<std::size_t>(positions[a])]);
      }
      auto& acc = diag.mutable_accumulators()[e];
      const double z = g2 * u.masked_product_frobenius_sq(bsc, positions);
      acc.energy += z;
      if (z > g2 * u_frob / config.beta + 1e-9 * (1.0 + g2 * u_frob)) ++checks.energy_violations;
      if (!verify_now) continue;

      bool any = false;
      const Matrix bsa = detail::corrupted_active_columns(inst, log, e, u.active(), any);
      const double op_sq = power_iteration_sq(
          u.k(), [&](const Vector& y) -> Vector { return bsa * u.apply_local(y); },
          [&](const Vector& w) -> Vector { return u.apply_transpose_local(bsa.transpose() * w); });
      const double u_op = u.certificate().operator_norm_sq;
      if (u_op > 0.0) checks.max_op_ratio = std::max(checks.max_op_ratio, op_sq / u_op);
      if (op_sq > b_op * u_op + 1e-4) ++checks.op_bound_violations;

      const Vector g = bsa.transpose() * (acc.bsx);
      if (u_frob > 0.0) {
        const double lin = u.apply_transpose_local(g).squaredNorm();
        trace.fitted.c_l_hat = std::max(trace.fitted.c_l_hat, config.beta * lin / u_frob);
      }
      Vector h = Vector::Zero(u.k());
      for (Index p = 0; p < u.k(); ++p) {
        const Index i = u.active()[static_cast<std::size_t>(p)];
        if (log.is_corrupted(e, i)) h(p) = x_before(i);
      }
      if (u.apply_transpose_local(h).squaredNorm() > u_frob + 1e-9) ++checks.linear_variance_violations;
    }

    decompose_increments(trace, diag, inst, x_before, sample, log, u);
    if (config.record_unorms) trace.unorms.emplace_back(u_frob, sample.gamma_used);

    if (t % config.record_every == 0 && alive > 0) {
      trace.records.push_back(detail::make_record(inst, state, alive, trace.v_b, log, diag));
    }
  }
  finish();
  return std::move(*result);
}

/// Signed-series walk: a coloring with small l2 prefix discrepancy.
inline RunResult run_signed_series(const Instance& inst, const RunConfig& config,
                                   const CertTolerance& tol = {}) {
  SignedSeriesPolicy policy(inst, config);
  return run_walk(inst, config, policy, tol);
}

}  // namespace l2disc
