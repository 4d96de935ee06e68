#pragma once

// Martingale tail bounds and their Monte-Carlo validation.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "l2disc/error.hpp"
#include "l2disc/rng.hpp"

namespace l2disc {

namespace detail {

inline void require_finite_nonneg(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must be a finite non-negative number");
  }
}

inline void require_tail_range(double a, double b) {
  require_finite_nonneg(a, "a");
  require_finite_nonneg(b, "b");
  if (!(a > 0.0)) throw Error(ErrorCode::kInvalidArgument, "a must be positive");
  if (a > b) throw Error(ErrorCode::kInvalidArgument, "the bound needs a <= b");
}

inline double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

/// x / y with x / 0 = +inf for x > 0.
inline double ratio_or_inf(double x, double y) {
  return y > 0.0 ? x / y : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// min(1, 2 exp(-a^2 / (2 (a + b)))).
inline double freedman_bound(double a, double b) {
  detail::require_finite_nonneg(a, "a");
  detail::require_finite_nonneg(b, "b");
  if (a == 0.0 && b == 0.0) throw Error(ErrorCode::kInvalidArgument, "a and b cannot both be zero");
  return detail::clamp_probability(2.0 * std::exp(-a * a / (2.0 * (a + b))));
}

/// min(1, exp(-min(a^2 / (4 C b), c_tilde a / 2))) for 0 < a <= b.
inline double modified_freedman_bound(double a, double b, double c, double c_tilde) {
  detail::require_tail_range(a, b);
  detail::require_finite_nonneg(c, "C");
  if (!(c_tilde > 0.0) || !std::isfinite(c_tilde)) throw Error(ErrorCode::kInvalidArgument, "c_tilde must be positive");
  const double e = std::min(detail::ratio_or_inf(a * a, 4.0 * c * b), c_tilde * a / 2.0);
  return detail::clamp_probability(std::exp(-e));
}

/// min(1, 2 exp(-min(a^2 / (4 C b), c a / (2 c'^2)))) for 0 < a <= b.
inline double hw_martingale_bound(double a, double b, double c_big, double c, double c_prime) {
  detail::require_tail_range(a, b);
  detail::require_finite_nonneg(c_big, "C");
  if (!(c > 0.0) || !(c_prime > 0.0)) throw Error(ErrorCode::kInvalidArgument, "c and c' must be positive");
  const double e = std::min(detail::ratio_or_inf(a * a, 4.0 * c_big * b), c * a / (2.0 * c_prime * c_prime));
  return detail::clamp_probability(2.0 * std::exp(-e));
}

enum class TailBound { kFreedman, kModifiedFreedman, kHansonWright };

inline const char* to_string(TailBound w) {
  switch (w) {
    case TailBound::kFreedman: return "freedman";
    case TailBound::kModifiedFreedman: return "mfreedman";
    case TailBound::kHansonWright: return "hw";
  }
  return "unknown";
}

inline TailBound parse_tail_bound(const std::string& s) {
  if (s == "freedman") return TailBound::kFreedman;
  if (s == "mfreedman") return TailBound::kModifiedFreedman;
  if (s == "hw") return TailBound::kHansonWright;
  throw Error(ErrorCode::kInvalidArgument, "unknown inequality '" + s + "'");
}

/// Small 4 x 4 chaos matrices and exact Rademacher moment generating functions.
using Matrix4 = Eigen::Matrix4d;

/// log E exp(lambda (r^T A r - tr A)) over all 16 sign vectors.
inline double chaos_log_mgf(const Matrix4& a, double lambda) {
  double sum = 0.0;
  const double shift = a.trace();
  for (int mask = 0; mask < 16; ++mask) {
    Eigen::Vector4d r;
    for (int i = 0; i < 4; ++i) r(i) = (mask >> i) & 1 ? 1.0 : -1.0;
    sum += std::exp(lambda * (r.dot(a * r) - shift));
  }
  return std::log(sum / 16.0);
}

inline double chaos_variance(const Matrix4& a) {
  double s1 = 0.0, s2 = 0.0;
  const double shift = a.trace();
  for (int mask = 0; mask < 16; ++mask) {
    Eigen::Vector4d r;
    for (int i = 0; i < 4; ++i) r(i) = (mask >> i) & 1 ? 1.0 : -1.0;
    const double y = r.dot(a * r) - shift;
    s1 += y;
    s2 += y * y;
  }
  return s2 / 16.0 - (s1 / 16.0) * (s1 / 16.0);
}

/// Smallest C with E exp(lambda Y) <= exp(C lambda^2 ||A||_F^2) on the grid
/// |lambda| = (j / steps) c / ||A||, j = 1..steps, together with the
/// lambda -> 0 limit Var(Y) / (2 ||A||_F^2).
inline double fit_chaos_constant(const Matrix4& a, double c, int steps = 200) {
  const double fro_sq = a.squaredNorm();
  if (!(fro_sq > 0.0)) return 0.0;
  const double op = a.cwiseAbs().maxCoeff() > 0.0
                        ? Eigen::SelfAdjointEigenSolver<Matrix4>(a, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff()
                        : 0.0;
  double best = chaos_variance(a) / (2.0 * fro_sq);
  for (int j = 1; j <= steps; ++j) {
    const double lambda = (static_cast<double>(j) / steps) * c / op;
    for (double l : {lambda, -lambda}) best = std::max(best, chaos_log_mgf(a, l) / (l * l * fro_sq));
  }
  return best;
}

struct TailConstants {
  double c_big = 0.0;       // C
  double c_big_default = 2.0;
  double c = 0.5;           // c
  double c_tilde = 0.0;     // c~
  double c_prime = 0.0;     // c'
};

struct TailPoint {
  double a = 0.0;
  double b = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool pass = false;
};

struct ValidationReport {
  TailBound which = TailBound::kFreedman;
  std::string scenario;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  TailConstants constants;
  std::vector<TailPoint> points;
  bool passed = false;
};

/// Allowed excess of an empirical frequency over its bound.
inline double statistical_slack(double bound, std::uint64_t trials) {
  const auto n = static_cast<double>(trials);
  return 3.0 * std::sqrt(bound * (1.0 - bound) / n) + 10.0 / n;
}

inline std::vector<std::string> tail_scenarios(TailBound which) {
  switch (which) {
    case TailBound::kFreedman:
    case TailBound::kModifiedFreedman: return {"rademacher", "adaptive"};
    case TailBound::kHansonWright: return {"adaptive_chaos", "degenerate"};
  }
  return {};
}

namespace detail {

inline constexpr std::uint64_t kTailSteps = 100;

struct ChaosFamily {
  std::array<Matrix4, 2> m;  // M_t chosen by the sign of the centered sum
  std::array<Matrix4, 2> a;  // A_t = M_t^T M_t
};

inline ChaosFamily chaos_family(const std::string& scenario) {
  ChaosFamily f;
  if (scenario == "degenerate") {
    f.m[0] = f.m[1] = Matrix4::Identity() * 0.5;
  } else {
    f.m[0] << 1, 1, 0, 0,  //
        0, 1, 1, 0,        //
        0, 0, 1, 1,        //
        1, 0, 0, 1;
    f.m[0] *= 0.5;
    f.m[1] = Matrix4::Zero();
    f.m[1].row(0).setConstant(0.5);
  }
  for (int s = 0; s < 2; ++s) f.a[s] = f.m[s].transpose() * f.m[s];
  return f;
}

/// Grid of (a, b) values for a scenario.
inline void tail_grid(TailBound which, const std::string& scenario, std::vector<double>& as, std::vector<double>& bs) {
  switch (which) {
    case TailBound::kFreedman:
      as = {5, 10, 20, 30, 40};
      bs = {10, 25, 50, 75, 100};
      return;
    case TailBound::kModifiedFreedman:
      as = {4, 8, 12, 16, 20};
      bs = {25, 40, 60, 80, 100};
      return;
    case TailBound::kHansonWright:
      if (scenario == "degenerate") {
        as = {1, 2, 3, 4, 5};
        bs = {5, 10, 15, 20, 25};
      } else {
        as = {2, 4, 6, 8, 10};
        bs = {20, 40, 60, 80, 100};
      }
      return;
  }
}

}  // namespace detail

/// Simulate `trials` paths of the scenario martingale and compare the event
/// frequency with the bound at every grid point. Freedman and the chaos
/// variant use the two-sided event |S_t| > a, the modified bound S_t > a,
/// each intersected with V_t <= b.
inline ValidationReport mc_tail_validate(TailBound which, const std::string& scenario, std::uint64_t trials,
                                         std::uint64_t seed) {
  if (trials < 10000) throw Error(ErrorCode::kInvalidArgument, "at least 10^4 trials are required");
  const auto known = tail_scenarios(which);
  if (std::find(known.begin(), known.end(), scenario) == known.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown scenario '" + scenario + "' for " + to_string(which));
  }
  ValidationReport report;
  report.which = which;
  report.scenario = scenario;
  report.trials = trials;
  report.seed = seed;
  report.steps = detail::kTailSteps;

  std::vector<double> as, bs;
  detail::tail_grid(which, scenario, as, bs);
  const bool chaos = which == TailBound::kHansonWright;
  const bool two_sided = which != TailBound::kModifiedFreedman;
  const detail::ChaosFamily family = detail::chaos_family(scenario);

  // Variance proxies per regime: sigma_t for scaled sign steps, ||A||_F^2 for chaos.
  const std::array<double, 2> sigma{1.0, scenario == "adaptive" ? 0.5 : 1.0};
  std::array<double, 2> v_step{};
  for (int s = 0; s < 2; ++s) v_step[s] = chaos ? family.a[s].squaredNorm() : sigma[s] * sigma[s];

  TailConstants& k = report.constants;
  if (chaos) {
    double op_m = 0.0;
    k.c_big = 0.0;
    for (int s = 0; s < 2; ++s) {
      k.c_big = std::max(k.c_big, fit_chaos_constant(family.a[s], k.c));
      Eigen::JacobiSVD<Matrix4> svd(family.m[s]);
      op_m = std::max(op_m, svd.singularValues()(0));
    }
    k.c_prime = op_m;
    k.c_tilde = k.c / (op_m * op_m);
  } else if (which == TailBound::kModifiedFreedman) {
    // E exp(lambda sigma eps) = cosh(lambda sigma) <= exp(lambda^2 sigma^2 / 2): the
    // fitted ratio log cosh(u) / u^2 peaks at its u -> 0 limit of 1/2.
    k.c_tilde = 1.0;
    k.c_big = 0.0;
    for (double s : sigma) {
      for (int j = 1; j <= 200; ++j) {
        const double u = s * k.c_tilde * j / 200.0;
        k.c_big = std::max(k.c_big, std::log(std::cosh(u)) / (u * u));
      }
    }
    k.c_big = std::max(k.c_big, 0.5);
  }

  // hits[ai][bi]: paths with the event at (a, b).
  std::vector<std::uint64_t> hits(as.size() * bs.size(), 0);
  const CounterRng rng(seed);
  const auto salt = static_cast<std::uint64_t>(which) << 48 |
                    static_cast<std::uint64_t>(std::find(known.begin(), known.end(), scenario) - known.begin()) << 40;
  std::vector<double> max_at_b(bs.size());
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    double sum = 0.0, vsum = 0.0, run_max = 0.0;
    std::size_t next_b = 0;
    for (std::uint64_t t = 1; t <= detail::kTailSteps; ++t) {
      const int regime = (scenario == "rademacher" || sum >= 0.0) ? 0 : 1;
      const auto blk = rng.block(Stream::kConcentration, salt | trial, t);
      double x;
      if (chaos) {
        Eigen::Vector4d r;
        for (int i = 0; i < 4; ++i) r(i) = (blk[static_cast<std::size_t>(i)] & 1u) ? 1.0 : -1.0;
        x = r.dot(family.a[regime] * r) - family.a[regime].trace();
      } else {
        x = sigma[regime] * ((blk[0] & 1u) ? 1.0 : -1.0);
      }
      const double v_next = vsum + v_step[regime];
      // V_t is predictable: it is known before S_t is revealed.
      while (next_b < bs.size() && v_next > bs[next_b] + 1e-12) max_at_b[next_b++] = run_max;
      sum += x;
      vsum = v_next;
      run_max = std::max(run_max, two_sided ? std::abs(sum) : sum);
    }
    while (next_b < bs.size()) max_at_b[next_b++] = run_max;
    for (std::size_t bi = 0; bi < bs.size(); ++bi) {
      for (std::size_t ai = 0; ai < as.size(); ++ai) {
        if (max_at_b[bi] > as[ai]) ++hits[ai * bs.size() + bi];
      }
    }
  }

  report.passed = true;
  for (std::size_t ai = 0; ai < as.size(); ++ai) {
    for (std::size_t bi = 0; bi < bs.size(); ++bi) {
      TailPoint p;
      p.a = as[ai];
      p.b = bs[bi];
      p.empirical = static_cast<double>(hits[ai * bs.size() + bi]) / static_cast<double>(trials);
      switch (which) {
        case TailBound::kFreedman: p.bound = freedman_bound(p.a, p.b); break;
        case TailBound::kModifiedFreedman: p.bound = modified_freedman_bound(p.a, p.b, k.c_big, k.c_tilde); break;
        case TailBound::kHansonWright: p.bound = hw_martingale_bound(p.a, p.b, k.c_big, k.c, k.c_prime); break;
      }
      p.slack = statistical_slack(p.bound, trials);
      p.pass = p.empirical <= p.bound + p.slack;
      report.passed = report.passed && p.pass;
      report.points.push_back(p);
    }
  }
  return report;
}

}  // namespace l2disc
