#include "test_util.hpp"

namespace l2disc {
namespace {

using test::error_code_of;

WalkState alive_only(Index n, std::initializer_list<Index> alive) {
  WalkState st(n, 0);
  std::fill(st.status.begin(), st.status.end(), VarStatus::kFrozen);
  for (Index i : alive) st.status[static_cast<std::size_t>(i)] = VarStatus::kAlive;
  return st;
}

Instance constant_row(Index d, Index n, double v) { return Instance(Matrix::Constant(d, n, v)); }

TEST(ActiveSet, BelowCap) {
  RunConfig cfg;
  EXPECT_EQ(signed_series_cap(1, cfg), 16);
  const WalkState st = alive_only(12, {2, 5, 9});
  EXPECT_EQ(compute_active_set(st, 16), (std::vector<Index>{2, 5, 9}));
}

TEST(ActiveSet, LeastIndexedAtCap) {
  WalkState st(40, 0);
  std::vector<Index> expect(16);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(compute_active_set(st, 16), expect);
  EXPECT_TRUE(compute_active_set(alive_only(5, {}), 16).empty());
}

TEST(RowConstraints, NoneBelowCap) {
  RunConfig cfg;
  const Instance inst = constant_row(1, 10, 0.25);
  const std::vector<Index> active{0, 1, 2};
  EXPECT_EQ(build_row_constraints(inst, active, cfg).cols(), 0);
}

TEST(RowConstraints, OnePerRowAtCap) {
  RunConfig cfg;
  const Instance inst = constant_row(1, 20, 0.25);
  std::vector<Index> active(16);
  std::iota(active.begin(), active.end(), 0);
  const Matrix rows = build_row_constraints(inst, active, cfg);
  ASSERT_EQ(rows.cols(), 1);
  EXPECT_EQ(rows, Matrix::Constant(16, 1, 0.25));

  const Instance two = generate_instance(InstanceKind::kSphere, 2, 40, 1);
  std::vector<Index> a2(32);
  std::iota(a2.begin(), a2.end(), 0);
  EXPECT_EQ(build_row_constraints(two, a2, cfg).cols(), 2);
}

TEST(SingularConstraints, OrthonormalColumnsGiveNone) {
  RunConfig cfg;
  const Instance inst(Matrix::Identity(4, 4));
  const std::vector<Index> active{0, 1, 2, 3};
  EXPECT_EQ(build_singular_constraints(inst, active, cfg).cols(), 0);
}

TEST(SingularConstraints, RepeatedColumnGivesUniformVector) {
  RunConfig cfg;
  const Instance inst = constant_row(1, 16, 1.0);
  std::vector<Index> active(16);
  std::iota(active.begin(), active.end(), 0);
  const Matrix s = build_singular_constraints(inst, active, cfg);
  ASSERT_EQ(s.cols(), 1);
  // Oracle: the 1x16 all-ones matrix has sigma^2 = 16 and right vector 1/4 * ones.
  const Vector ones = Vector::Constant(16, 0.25);
  EXPECT_NEAR(std::abs(s.col(0).dot(ones)), 1.0, 1e-12);
  EXPECT_NEAR(s.col(0).norm(), 1.0, 1e-12);
}

TEST(OrthoConstraints, VanishAtOrigin) {
  RunConfig cfg;
  const Instance inst = generate_instance(InstanceKind::kSphere, 3, 20, 2);
  std::vector<Index> active(16);
  std::iota(active.begin(), active.end(), 0);
  EXPECT_EQ(build_ortho_constraints(inst, active, Vector::Zero(20), cfg).cols(), 0);
}

TEST(OrthoConstraints, BlockCountAndOracle) {
  RunConfig cfg;
  const Instance inst = generate_instance(InstanceKind::kSphere, 3, 20, 2);
  std::vector<Index> active(16);
  std::iota(active.begin(), active.end(), 2);
  Vector x = Vector::Zero(20);
  for (Index i = 2; i < 18; ++i) x(i) = 0.01 * static_cast<double>(i - 8);
  const Matrix w = build_ortho_constraints(inst, active, x, cfg);
  ASSERT_EQ(w.cols(), 2);
  for (Index j = 1; j <= 2; ++j) {
    const Index cols = 8 * j;
    Vector disc = Vector::Zero(3);
    for (Index p = 0; p < cols; ++p) disc += x(active[p]) * inst.column(active[p]);
    for (Index p = 0; p < 16; ++p) {
      const double expect = p < cols ? inst.column(active[p]).dot(disc) : 0.0;
      EXPECT_NEAR(w(p, j - 1), expect, 1e-14);
    }
  }
  EXPECT_EQ(build_ortho_constraints(inst, active, x, cfg, 1).cols(), 1);
}

TEST(Assemble, EmptyIsValid) {
  const ConstraintSet s = assemble_constraint_set({}, 5, {}, 0.25);
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(s.k(), 0);
}

TEST(Assemble, WithinBudget) {
  std::vector<Index> active(16);
  std::iota(active.begin(), active.end(), 0);
  const std::vector<ConstraintBlock> blocks{{Family::kRow, Matrix::Random(16, 1)},
                                            {Family::kSingular, Matrix(16, 0)},
                                            {Family::kOrtho, Matrix::Random(16, 2)}};
  const ConstraintSet s = assemble_constraint_set(active, 16, blocks, 0.25);
  EXPECT_EQ(s.size(), 3u);
  const FamilyCounts c = s.counts();
  EXPECT_EQ(c.row, 1u);
  EXPECT_EQ(c.ortho, 2u);
  EXPECT_EQ(s.family(), (std::vector<Family>{Family::kRow, Family::kOrtho, Family::kOrtho}));
}

TEST(Assemble, OverBudget) {
  std::vector<Index> active(16);
  std::iota(active.begin(), active.end(), 0);
  const std::vector<ConstraintBlock> blocks{{Family::kOrtho, Matrix::Random(16, 10)}};
  try {
    assemble_constraint_set(active, 16, blocks, 0.25);
    FAIL();
  } catch (const ConstraintBudgetExceeded& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConstraintBudgetExceeded);
  }
}

TEST(Assemble, SignedSeriesRespectsBudget) {
  RunConfig cfg;
  const Instance inst = generate_instance(InstanceKind::kSphere, 16, 400, 5);
  WalkState st(400, 0);
  const CounterRng rng(3);
  for (Index i = 0; i < 400; ++i) st.x(i) = 0.5 * (rng.uniform(Stream::kInstance, 1, static_cast<std::uint64_t>(i)) - 0.5);
  const auto active = compute_active_set(st, inst, cfg);
  ASSERT_EQ(active.size(), 256u);
  const ConstraintSet s = build_signed_series_constraints(inst, st, active, cfg);
  EXPECT_LE(s.size(), constraint_budget(256, cfg.delta));
  EXPECT_EQ(s.counts().row, 16u);
  EXPECT_GT(s.counts().ortho, 0u);
}

TEST(ConstraintFile, RoundTrip) {
  RunConfig cfg;
  const Instance inst = generate_instance(InstanceKind::kSphere, 2, 40, 5);
  WalkState st(40, 0);
  for (Index i = 0; i < 40; ++i) st.x(i) = 0.01 * static_cast<double>(i % 7);
  st.status[3] = VarStatus::kFrozen;
  const ConstraintSet s = build_signed_series_constraints(inst, st, compute_active_set(st, inst, cfg), cfg);
  std::istringstream in(format_constraints(s));
  const ConstraintSet back = parse_constraints(in);
  EXPECT_EQ(back.active(), s.active());
  EXPECT_EQ(back.family(), s.family());
  EXPECT_EQ(back.local(), s.local());
}

TEST(ConstraintFile, RejectsSupportOutsideActive) {
  std::istringstream in("l2disc-constraints v1 3 1\nactive 0 1\northo 1 2 3\n");
  EXPECT_EQ(error_code_of([&] { parse_constraints(in); }), ErrorCode::kParse);
}

ConstraintSet bare_set(std::vector<Index> active, Index n, bool rows) {
  const auto k = static_cast<Index>(active.size());
  Matrix local = rows ? Matrix::Ones(k, 1) : Matrix(k, 0);
  std::vector<Family> fam;
  if (rows) fam.push_back(Family::kRow);
  return ConstraintSet(std::move(active), n, std::move(local), std::move(fam));
}

TEST(Corruption, ProtectedInsidePrefix) {
  CorruptionLog log({10}, 20);
  const auto joined = log.update(bare_set({0, 1, 2, 3}, 20, true), 1);
  EXPECT_TRUE(joined[0].empty());
  EXPECT_FALSE(log.entries()[0].first_corruption_time);
}

TEST(Corruption, NoRowsCorruptsActive) {
  CorruptionLog log({10}, 20);
  const auto joined = log.update(bare_set({0, 1, 2}, 20, false), 1);
  EXPECT_EQ(joined[0], (std::vector<Index>{0, 1, 2}));
  EXPECT_EQ(*log.entries()[0].first_corruption_time, 1u);
}

TEST(Corruption, StraddlingActiveSet) {
  CorruptionLog log({4}, 20);
  log.update(bare_set({0, 1, 2}, 20, true), 1);
  const auto joined = log.update(bare_set({1, 2, 3, 4, 5}, 20, true), 2);
  // 1 and 2 were protected at t = 1; only 3 is new and unprotected.
  EXPECT_EQ(joined[0], std::vector<Index>{3});
  EXPECT_TRUE(log.is_corrupted(0, 3));
  EXPECT_FALSE(log.is_corrupted(0, 1));
}

struct RecordingPolicy {
  SignedSeriesPolicy inner;
  std::vector<std::vector<Index>> actives;
  std::vector<bool> rows;

  Index active_cap(const WalkState& s) const { return inner.active_cap(s); }
  ConstraintSet build(const WalkState& s, std::vector<Index> active, bool changed) {
    ConstraintSet set = inner.build(s, std::move(active), changed);
    actives.push_back(set.active());
    rows.push_back(set.has(Family::kRow));
    return set;
  }
};

// Direct rule: k in [i] ends up corrupted iff at the first step where it was
// active, row constraints were absent or A(t) reached past the prefix.
TEST(Corruption, MatchesDirectDefinitionOnWalk) {
  RunConfig cfg;
  cfg.seed = 4;
  cfg.monitored_prefixes = {3, 7, 12, 16, 17, 20};
  const Instance inst = generate_instance(InstanceKind::kSphere, 1, 20, 8);
  RecordingPolicy policy{SignedSeriesPolicy(inst, cfg), {}, {}};
  const RunResult r = run_walk(inst, cfg, policy);
  for (std::size_t e = 0; e < cfg.monitored_prefixes.size(); ++e) {
    const Index prefix = cfg.monitored_prefixes[e];
    std::vector<int> first(20, -1);
    for (std::size_t t = 0; t < policy.actives.size(); ++t) {
      for (Index k : policy.actives[t]) {
        if (first[static_cast<std::size_t>(k)] < 0) first[static_cast<std::size_t>(k)] = static_cast<int>(t);
      }
    }
    for (Index k = 0; k < prefix; ++k) {
      const int t = first[static_cast<std::size_t>(k)];
      bool direct = false;
      if (t >= 0) {
        const auto& a = policy.actives[static_cast<std::size_t>(t)];
        direct = !(policy.rows[static_cast<std::size_t>(t)] && a.back() < prefix);
      }
      EXPECT_EQ(r.corruption.is_corrupted(e, k), direct) << "prefix " << prefix << " column " << k;
    }
  }
}

}  // namespace
}  // namespace l2disc
