#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "l2disc/error.hpp"
#include "l2disc/rng.hpp"

namespace l2disc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Column-norm tolerance applied when an Instance is constructed.
inline constexpr double kColumnNormTolerance = 1e-12;
/// Looser tolerance used when reading a matrix from disk.
inline constexpr double kLoadColumnNormTolerance = 1e-9;

/// A d x n matrix whose columns v_1..v_n have l2 norm at most one.
class Instance {
 public:
  Instance() = default;

  explicit Instance(Matrix columns, double norm_tolerance = kColumnNormTolerance)
      : b_(std::move(columns)) {
    if (b_.rows() < 1 || b_.cols() < 1) {
      throw Error(ErrorCode::kInvalidArgument, "instance needs d >= 1 and n >= 1");
    }
    for (Index j = 0; j < b_.cols(); ++j) {
      for (Index r = 0; r < b_.rows(); ++r) {
        if (!std::isfinite(b_(r, j))) {
          throw Error(ErrorCode::kNonFinite, "entry (" + std::to_string(r) + ", " +
                                                 std::to_string(j) + ") is not finite");
        }
      }
      const double norm = b_.col(j).norm();
      if (norm > 1.0 + norm_tolerance) {
        throw ColumnNormExceeded(static_cast<std::size_t>(j), norm);
      }
    }
  }

  Index d() const { return b_.rows(); }
  Index n() const { return b_.cols(); }
  const Matrix& matrix() const { return b_; }
  auto column(Index j) const { return b_.col(j); }

 private:
  Matrix b_;
};

enum class UvcMethod { kProjection, kCertifiedFeasibility };

inline const char* to_string(UvcMethod m) {
  return m == UvcMethod::kProjection ? "projection" : "certified_feasibility";
}

inline UvcMethod parse_uvc_method(const std::string& s) {
  if (s == "projection") return UvcMethod::kProjection;
  if (s == "certified_feasibility") return UvcMethod::kCertifiedFeasibility;
  throw Error(ErrorCode::kInvalidArgument, "unknown uvc method '" + s + "'");
}

struct RunConfig {
  double gamma = 0.1;
  /// 0 selects the practical default 10 * ceil(n / gamma^2).
  std::uint64_t max_steps = 0;
  double beta = 0.25;
  double delta = 0.25;
  double delta_prime = 1.0 / 16.0;
  double alpha1 = 1.0 / 16.0;
  double alpha2 = 1.0 / 8.0;
  std::uint64_t seed = 0;
  UvcMethod uvc_method = UvcMethod::kProjection;
  std::uint64_t verify_every = 25;
  /// Prefix lengths in [1, n] tracked by the diagnostics.
  std::vector<Index> monitored_prefixes;
  /// Trace sampling cadence; 1 records every step.
  std::uint64_t record_every = 50;
  /// Row-mass threshold for heavy-row protection in the Komlos mode.
  double heavy_row_threshold = 32.0;
  int max_halvings = 20;
  /// Keep gamma_t^2 ||U_t||_F^2 for every step in the trace.
  bool record_unorms = false;
  /// Wall-clock limit for one run in seconds; 0 disables it.
  double time_budget_s = 0.0;

  void validate() const {
    auto open_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw Error(ErrorCode::kInvalidArgument, "gamma must be positive");
    }
    if (!open_unit(beta) || !open_unit(delta) || !open_unit(delta_prime) || !open_unit(alpha1) ||
        !open_unit(alpha2)) {
      throw Error(ErrorCode::kInvalidArgument, "beta, delta, delta', alpha1, alpha2 must lie in (0,1)");
    }
    if (!(beta + delta < 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "beta + delta must be < 1");
    }
    if (delta_prime + alpha1 + alpha2 > delta + 1e-12) {
      throw Error(ErrorCode::kInvalidArgument, "delta' + alpha1 + alpha2 must be <= delta");
    }
    if (verify_every == 0 || record_every == 0) {
      throw Error(ErrorCode::kInvalidArgument, "verify_every and record_every must be positive");
    }
    if (!(time_budget_s >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "time budget must be non-negative");
    }
    if (max_halvings < 0) {
      throw Error(ErrorCode::kInvalidArgument, "max_halvings must be non-negative");
    }
  }

  std::uint64_t effective_max_steps(Index n) const {
    if (max_steps != 0) return max_steps;
    const double steps = 10.0 * std::ceil(static_cast<double>(n) / (gamma * gamma));
    return clamp_steps(steps);
  }

  /// The asymptotic parameters from the analysis: gamma = (n^10 m^4 log(nm))^-1
  /// and T = 60 n log n / ((1 - delta - beta) gamma^2). Only useful for tiny n;
  /// T saturates at the largest representable step count.
  static RunConfig theoretical(Index n, Index m) {
    RunConfig cfg;
    const double nd = static_cast<double>(n);
    const double md = static_cast<double>(m);
    const double log_nm = std::max(std::log(nd * md), std::numeric_limits<double>::min());
    cfg.gamma = 1.0 / (std::pow(nd, 10.0) * std::pow(md, 4.0) * log_nm);
    const double t = 60.0 * nd * std::log(std::max(nd, 2.0)) /
                     ((1.0 - cfg.delta - cfg.beta) * cfg.gamma * cfg.gamma);
    cfg.max_steps = clamp_steps(t);
    return cfg;
  }

 private:
  static std::uint64_t clamp_steps(double steps) {
    constexpr double kMax = 1.8e19;
    if (!std::isfinite(steps) || steps >= kMax) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(std::max(1.0, steps));
  }
};

enum class VarStatus : std::uint8_t { kAlive, kFrozen };

/// Fractional coloring x_t with alive/frozen status. Frozen is absorbing.
struct WalkState {
  Vector x;
  std::vector<VarStatus> status;
  std::uint64_t t = 0;
  std::uint64_t seed = 0;

  WalkState() = default;
  WalkState(Index n, std::uint64_t rng_seed)
      : x(Vector::Zero(n)), status(static_cast<std::size_t>(n), VarStatus::kAlive), seed(rng_seed) {}

  Index n() const { return x.size(); }
  bool alive(Index i) const { return status[static_cast<std::size_t>(i)] == VarStatus::kAlive; }
  Index alive_count() const {
    return static_cast<Index>(std::count(status.begin(), status.end(), VarStatus::kAlive));
  }
  double freeze_threshold() const { return 1.0 - 1.0 / static_cast<double>(n()); }
};

enum class SignProvenance : std::uint8_t { kRoundedFrozen, kForcedAlive };

struct Coloring {
  std::vector<int> signs;
  std::vector<SignProvenance> provenance;

  Index n() const { return static_cast<Index>(signs.size()); }
  Vector as_vector() const {
    Vector v(n());
    for (Index i = 0; i < n(); ++i) v(i) = signs[static_cast<std::size_t>(i)];
    return v;
  }
};

/// Frozen entries round to their sign, alive entries to +1.
inline Coloring round_coloring(const WalkState& state) {
  Coloring out;
  const auto n = static_cast<std::size_t>(state.n());
  out.signs.resize(n);
  out.provenance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (state.status[i] == VarStatus::kFrozen) {
      out.signs[i] = state.x(static_cast<Index>(i)) < 0.0 ? -1 : 1;
      out.provenance[i] = SignProvenance::kRoundedFrozen;
    } else {
      out.signs[i] = 1;
      out.provenance[i] = SignProvenance::kForcedAlive;
    }
  }
  return out;
}

/// Per-prefix upper bound on how far rounding can move ||sum_{j<=i} x(j) v_j||.
inline Vector rounding_perturbation_bound(const Instance& inst, const WalkState& state) {
  Vector bound(inst.n());
  double acc = 0.0;
  for (Index j = 0; j < inst.n(); ++j) {
    const double norm = inst.column(j).norm();
    acc += state.alive(j) ? 2.0 * norm : (1.0 - std::abs(state.x(j))) * norm;
    bound(j) = acc;
  }
  return bound;
}

enum class InstanceKind { kSphere, kBasis, kGaussianNormalized, kZeroSumSphere };

inline InstanceKind parse_instance_kind(const std::string& s) {
  if (s == "sphere") return InstanceKind::kSphere;
  if (s == "basis") return InstanceKind::kBasis;
  if (s == "gaussian_normalized") return InstanceKind::kGaussianNormalized;
  if (s == "zero_sum_sphere") return InstanceKind::kZeroSumSphere;
  throw Error(ErrorCode::kInvalidArgument, "unknown instance kind '" + s + "'");
}

namespace detail {

inline Vector gaussian_column(const CounterRng& rng, std::uint64_t salt, Index d, Index j) {
  Vector v(d);
  for (Index r = 0; r < d; ++r) {
    v(r) = rng.normal(Stream::kInstance, salt + static_cast<std::uint64_t>(j),
                      static_cast<std::uint64_t>(r));
  }
  return v;
}

inline Vector unit_gaussian_column(const CounterRng& rng, std::uint64_t salt, Index d, Index j) {
  Vector v = gaussian_column(rng, salt, d, j);
  double norm = v.norm();
  // A zero Gaussian draw has probability zero; fall back to e_1 regardless.
  if (!(norm > 0.0)) {
    v.setZero();
    v(0) = 1.0;
    norm = 1.0;
  }
  return v / norm;
}

}  // namespace detail

/// Deterministic test instances. sphere and gaussian_normalized both yield
/// columns uniform on the unit sphere but draw from disjoint counter ranges.
inline Instance generate_instance(InstanceKind kind, Index d, Index n, std::uint64_t seed) {
  if (d < 1 || n < 1) throw Error(ErrorCode::kInvalidArgument, "d and n must be >= 1");
  const CounterRng rng(seed);
  Matrix b(d, n);
  switch (kind) {
    case InstanceKind::kSphere:
      for (Index j = 0; j < n; ++j) b.col(j) = detail::unit_gaussian_column(rng, 0, d, j);
      break;
    case InstanceKind::kGaussianNormalized:
      for (Index j = 0; j < n; ++j) b.col(j) = detail::unit_gaussian_column(rng, 1ULL << 40, d, j);
      break;
    case InstanceKind::kBasis:
      b.setZero();
      for (Index j = 0; j < n; ++j) {
        const auto axis = static_cast<Index>(
            rng.bits(Stream::kInstance, static_cast<std::uint64_t>(j), 0) % static_cast<std::uint64_t>(d));
        b(axis, j) = rng.rademacher(Stream::kInstance, static_cast<std::uint64_t>(j), 1);
      }
      break;
    case InstanceKind::kZeroSumSphere: {
      if (n < 2) throw Error(ErrorCode::kInvalidArgument, "zero_sum_sphere needs n >= 2");
      // Antipodal pairs, plus a closed triangle (or a zero column when d = 1)
      // for odd n, then shuffled.
      Index j = 0;
      const Index pairs = (n % 2 == 0) ? n / 2 : (n - 3) / 2;
      for (Index p = 0; p < pairs; ++p) {
        const Vector u = detail::unit_gaussian_column(rng, 2ULL << 40, d, p);
        b.col(j++) = u;
        b.col(j++) = -u;
      }
      if (n % 2 == 1) {
        if (d >= 2) {
          const Vector a = detail::unit_gaussian_column(rng, 3ULL << 40, d, 0);
          Vector c = detail::gaussian_column(rng, 3ULL << 40, d, 1);
          c -= a.dot(c) * a;
          if (!(c.norm() > 1e-8)) {
            Index k = 0;
            a.cwiseAbs().minCoeff(&k);
            c = Vector::Unit(d, k) - a(k) * a;
          }
          c.normalize();
          const Vector second = -0.5 * a + (std::sqrt(3.0) / 2.0) * c;
          b.col(j++) = a;
          b.col(j++) = second;
          b.col(j++) = -(a + second);
        } else {
          b(0, j++) = 1.0;
          b(0, j++) = -1.0;
          b(0, j++) = 0.0;
        }
      }
      for (Index k = n - 1; k > 0; --k) {
        const auto r = static_cast<Index>(rng.bits(Stream::kShuffle, static_cast<std::uint64_t>(k), 0) %
                                          static_cast<std::uint64_t>(k + 1));
        b.col(k).swap(b.col(r));
      }
      break;
    }
  }
  return Instance(std::move(b));
}

}  // namespace l2disc
