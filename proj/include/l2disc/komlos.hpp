#pragma once

// Walk configuration for local mean squared discrepancy over a row cover.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "l2disc/walk.hpp"

namespace l2disc {

struct RowCover {
  std::vector<std::vector<Index>> sets;

  Index width() const {
    if (sets.empty()) return 0;
    std::size_t w = sets.front().size();
    for (const auto& s : sets) w = std::min(w, s.size());
    return static_cast<Index>(w);
  }
};

inline Index minimum_cover_width(Index n) {
  return std::max<Index>(1, static_cast<Index>(std::ceil(std::log(static_cast<double>(n)) - 1e-12)));
}

/// Throws kInvalidCover unless every row of an m x n matrix is covered, all
/// indices are in range, each set has at least ceil(ln n) rows and there are at
/// most `max_sets` sets (default n^3).
inline void validate_cover(const RowCover& cover, Index m, Index n,
                           std::optional<std::uint64_t> max_sets = std::nullopt) {
  const auto nn = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = max_sets.value_or(nn * nn * nn);
  if (cover.sets.empty()) throw Error(ErrorCode::kInvalidCover, "cover has no sets");
  if (cover.sets.size() > limit) {
    throw Error(ErrorCode::kInvalidCover, std::to_string(cover.sets.size()) + " sets exceed the limit " +
                                              std::to_string(limit));
  }
  const Index need = minimum_cover_width(n);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(m), 0);
  for (std::size_t s = 0; s < cover.sets.size(); ++s) {
    const auto& set = cover.sets[s];
    if (static_cast<Index>(set.size()) < need) {
      throw Error(ErrorCode::kInvalidCover, "set " + std::to_string(s) + " has " + std::to_string(set.size()) +
                                                " rows, width must be at least " + std::to_string(need));
    }
    for (Index row : set) {
      if (row < 0 || row >= m) {
        throw Error(ErrorCode::kInvalidCover, "row index " + std::to_string(row) + " out of range");
      }
      seen[static_cast<std::size_t>(row)] = 1;
    }
  }
  for (Index row = 0; row < m; ++row) {
    if (!seen[static_cast<std::size_t>(row)]) {
      throw Error(ErrorCode::kInvalidCover, "row " + std::to_string(row) + " is not covered");
    }
  }
}

/// Consecutive blocks of `width` rows; a short remainder joins the last block.
inline RowCover disjoint_cover(Index m, Index width) {
  if (width < 1 || width > m) throw Error(ErrorCode::kInvalidArgument, "cover width out of range");
  RowCover cover;
  for (Index start = 0; start + width <= m; start += width) {
    std::vector<Index> set(static_cast<std::size_t>(width));
    for (Index i = 0; i < width; ++i) set[static_cast<std::size_t>(i)] = start + i;
    cover.sets.push_back(std::move(set));
  }
  for (Index row = static_cast<Index>(cover.sets.size()) * width; row < m; ++row) {
    cover.sets.back().push_back(row);
  }
  return cover;
}

/// One set per line, space-separated zero-based row indices. Blank lines are skipped.
inline RowCover parse_cover(std::istream& in) {
  RowCover cover;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<Index> set;
    std::string token;
    while (ls >> token) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        set.push_back(static_cast<Index>(v));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParse, "bad row index '" + token + "'");
      }
    }
    if (!set.empty()) cover.sets.push_back(std::move(set));
  }
  return cover;
}

inline RowCover load_cover(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return parse_cover(in);
}

inline void save_cover(const RowCover& cover, const std::string& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  for (const auto& set : cover.sets) {
    for (std::size_t i = 0; i < set.size(); ++i) out << (i ? " " : "") << set[i];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

/// Right singular vectors of M with sigma^2 > 1/delta', largest first.
struct GlobalSpectrum {
  Vector sigma_sq;
  Matrix vectors;  // n x r
};

inline GlobalSpectrum global_spectrum(const Instance& m, const RunConfig& config) {
  const double threshold = 1.0 / config.delta_prime;
  GlobalSpectrum out;
  const Matrix& a = m.matrix();
  // Smaller Gram matrix of the two.
  const bool by_rows = a.rows() <= a.cols();
  const Matrix gram = by_rows ? Matrix(a * a.transpose()) : Matrix(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::kNumericalFailure, "SVD did not converge");
  std::vector<Index> keep;
  for (Index l = eig.eigenvalues().size() - 1; l >= 0; --l) {
    if (!(eig.eigenvalues()(l) > threshold)) break;
    keep.push_back(l);
  }
  out.sigma_sq.resize(static_cast<Index>(keep.size()));
  out.vectors.resize(a.cols(), static_cast<Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const double s2 = eig.eigenvalues()(keep[c]);
    out.sigma_sq(static_cast<Index>(c)) = s2;
    out.vectors.col(static_cast<Index>(c)) =
        by_rows ? Vector(a.transpose() * eig.eigenvectors().col(keep[c]) / std::sqrt(s2))
                : Vector(eig.eigenvectors().col(keep[c]));
  }
  return out;
}

/// Global singular vectors restricted to the active columns, at most
/// floor(delta' k) of them, largest sigma first.
inline Matrix restrict_global_singular(const GlobalSpectrum& spectrum, std::span<const Index> active,
                                       const RunConfig& config) {
  const auto k = static_cast<Index>(active.size());
  const auto cap = static_cast<Index>(std::floor(config.delta_prime * static_cast<double>(k) + 1e-9));
  const Index count = std::min<Index>(cap, spectrum.vectors.cols());
  Matrix out(k, count);
  for (Index c = 0; c < count; ++c) {
    for (Index p = 0; p < k; ++p) out(p, c) = spectrum.vectors(active[static_cast<std::size_t>(p)], c);
  }
  return detail::keep_nonzero_columns(out);
}

/// Rows i with sum_{j in A} m_ij^2 > C_heavy, restricted to A.
inline Matrix build_heavy_row_constraints(const Instance& m, std::span<const Index> active,
                                          const RunConfig& config) {
  const Matrix ma = active_columns(m, active);
  std::vector<Index> heavy;
  for (Index i = 0; i < ma.rows(); ++i) {
    if (ma.row(i).squaredNorm() > config.heavy_row_threshold) heavy.push_back(i);
  }
  Matrix out(ma.cols(), static_cast<Index>(heavy.size()));
  for (std::size_t c = 0; c < heavy.size(); ++c) out.col(static_cast<Index>(c)) = ma.row(heavy[c]).transpose();
  return out;
}

inline ConstraintSet assemble_komlos_constraints(const Instance& m, const WalkState& state,
                                                 std::vector<Index> active, const RunConfig& config,
                                                 const Matrix& global, const Matrix& heavy) {
  const auto k = static_cast<Index>(active.size());
  const std::size_t budget = constraint_budget(k, config.delta);
  const auto used = static_cast<std::size_t>(global.cols() + heavy.cols());
  Matrix ortho = build_ortho_constraints(m, active, state.x, config, budget > used ? budget - used : 0);
  const std::vector<ConstraintBlock> blocks{{Family::kHeavyRow, heavy},
                                            {Family::kGlobalSingular, global},
                                            {Family::kOrtho, std::move(ortho)}};
  return assemble_constraint_set(std::move(active), m.n(), blocks, config.delta);
}

/// Every alive column is active; constraints are heavy rows, restricted global
/// singular vectors and orthogonality blocks.
inline ConstraintSet build_komlos_constraints(const Instance& m, const WalkState& state, const RunConfig& config) {
  std::vector<Index> active = compute_active_set(state, m.n());
  const GlobalSpectrum spectrum = global_spectrum(m, config);
  const Matrix global = restrict_global_singular(spectrum, active, config);
  const Matrix heavy = build_heavy_row_constraints(m, active, config);
  return assemble_komlos_constraints(m, state, std::move(active), config, global, heavy);
}

class KomlosPolicy {
 public:
  KomlosPolicy(const Instance& m, const RunConfig& config)
      : m_(m), config_(config), spectrum_(global_spectrum(m, config)) {}

  Index active_cap(const WalkState&) const { return m_.n(); }

  ConstraintSet build(const WalkState& state, std::vector<Index> active, bool changed) {
    if (changed) {
      global_ = restrict_global_singular(spectrum_, active, config_);
      heavy_ = build_heavy_row_constraints(m_, active, config_);
    }
    return assemble_komlos_constraints(m_, state, std::move(active), config_, global_, heavy_);
  }

  const GlobalSpectrum& spectrum() const { return spectrum_; }

 private:
  const Instance& m_;
  const RunConfig& config_;
  GlobalSpectrum spectrum_;
  Matrix global_;
  Matrix heavy_;
};

struct KomlosResult {
  Coloring coloring;
  std::vector<SetDiscrepancy> per_set;
  DiagnosticsTrace trace;
  WalkState state;

  double max_ratio() const {
    double best = 0.0;
    for (const auto& s : per_set) best = std::max(best, s.ratio);
    return best;
  }
};

inline KomlosResult run_komlos(const Instance& m, const RowCover& cover, const RunConfig& config,
                               const CertTolerance& tol = {}) {
  validate_cover(cover, m.d(), m.n());
  KomlosPolicy policy(m, config);
  RunResult run = run_walk(m, config, policy, tol);
  KomlosResult out;
  out.per_set = local_mean_sq_discrepancy(m, run.coloring.as_vector(), cover.sets);
  out.coloring = std::move(run.coloring);
  out.trace = std::move(run.trace);
  out.state = std::move(run.state);
  return out;
}

}  // namespace l2disc
