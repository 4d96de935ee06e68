#pragma once

// Reference signers: independent random signs, greedy prefix signing and an
// exact branch-and-bound search for small n.

#include <limits>
#include <vector>

#include "l2disc/metrics.hpp"

namespace l2disc {

inline Coloring random_signing(const Instance& inst, std::uint64_t seed) {
  const CounterRng rng(seed);
  Coloring c;
  c.signs.resize(static_cast<std::size_t>(inst.n()));
  c.provenance.assign(c.signs.size(), SignProvenance::kRoundedFrozen);
  for (Index j = 0; j < inst.n(); ++j) {
    c.signs[static_cast<std::size_t>(j)] =
        rng.rademacher(Stream::kBaseline, 0, static_cast<std::uint64_t>(j)) > 0 ? 1 : -1;
  }
  return c;
}

/// Each sign minimizes the next prefix norm; <prefix, v_j> = 0 picks +1.
inline Coloring greedy_signing(const Instance& inst) {
  Coloring c;
  c.signs.resize(static_cast<std::size_t>(inst.n()));
  c.provenance.assign(c.signs.size(), SignProvenance::kRoundedFrozen);
  Vector sum = Vector::Zero(inst.d());
  for (Index j = 0; j < inst.n(); ++j) {
    const int s = sum.dot(inst.column(j)) > 0.0 ? -1 : 1;
    c.signs[static_cast<std::size_t>(j)] = s;
    sum += s * inst.column(j);
  }
  return c;
}

inline constexpr Index kBruteForceMaxN = 22;

struct BruteForceResult {
  double value = 0.0;
  Coloring coloring;
};

/// Exact min over signings of the max prefix norm. Signs are tried +1 first,
/// so the first optimum found is the lexicographically smallest under
/// +1 < -1; branches whose running maximum reaches the incumbent are cut.
inline BruteForceResult brute_force_min_prefix(const Instance& inst) {
  const Index n = inst.n();
  if (n > kBruteForceMaxN) {
    throw Error(ErrorCode::kInvalidArgument, "brute force supports n <= " + std::to_string(kBruteForceMaxN));
  }
  const Index d = inst.d();
  std::vector<int> signs(static_cast<std::size_t>(n), 1);
  std::vector<int> best_signs;
  // Start from the greedy value so the search prunes from the beginning.
  const Coloring greedy = greedy_signing(inst);
  double best = max_prefix_discrepancy(inst, greedy.as_vector()).value;
  best_signs = greedy.signs;
  bool found = false;
  Matrix prefix = Matrix::Zero(d, n + 1);

  auto recurse = [&](auto&& self, Index j, double running) -> void {
    if (j == n) {
      if (!found || running < best) {
        best = running;
        best_signs = signs;
        found = true;
      }
      return;
    }
    for (int s : {1, -1}) {
      prefix.col(j + 1) = prefix.col(j) + s * inst.column(j);
      const double norm = std::max(running, prefix.col(j + 1).norm());
      // Equal values may still give the lexicographically first optimum
      // until one is found; afterwards only strict improvements matter.
      if (found ? norm >= best : norm > best) continue;
      signs[static_cast<std::size_t>(j)] = s;
      self(self, j + 1, norm);
    }
  };
  recurse(recurse, 0, 0.0);

  BruteForceResult r;
  r.value = best;
  r.coloring.signs = best_signs;
  r.coloring.provenance.assign(best_signs.size(), SignProvenance::kRoundedFrozen);
  return r;
}

}  // namespace l2disc
