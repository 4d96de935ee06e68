#include "test_util.hpp"

namespace l2disc {
namespace {

using test::error_code_of;

TEST(Instance, RejectsLongColumn) {
  Matrix m(2, 1);
  m << 0.8, 0.8;
  try {
    Instance inst(m);
    FAIL();
  } catch (const ColumnNormExceeded& e) {
    EXPECT_EQ(e.code(), ErrorCode::kColumnNormExceeded);
    EXPECT_NEAR(e.norm(), std::sqrt(1.28), 1e-12);
    EXPECT_EQ(e.column(), 0u);
  }
}

TEST(Instance, RejectsNonFinite) {
  Matrix m(1, 2);
  m << 0.5, std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(error_code_of([&] { Instance inst(m); }), ErrorCode::kNonFinite);
}

TEST(Generate, BasisColumnsAreSignedAxes) {
  const Instance inst = generate_instance(InstanceKind::kBasis, 2, 3, 7);
  for (Index j = 0; j < 3; ++j) {
    const auto c = inst.column(j);
    EXPECT_EQ(c.norm(), 1.0);
    EXPECT_EQ(c.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_EQ((c.array() != 0.0).count(), 1);
  }
}

TEST(Generate, SphereColumnsAreUnit) {
  const Instance inst = generate_instance(InstanceKind::kSphere, 16, 64, 1);
  for (Index j = 0; j < inst.n(); ++j) EXPECT_LE(std::abs(inst.column(j).norm() - 1.0), 1e-12);
}

TEST(Generate, ZeroSumSphereSumsToZero) {
  for (Index n : {32, 33}) {
    const Instance inst = generate_instance(InstanceKind::kZeroSumSphere, 4, n, 3);
    EXPECT_LE(inst.matrix().rowwise().sum().norm(), 1e-9) << n;
    for (Index j = 0; j < n; ++j) EXPECT_LE(std::abs(inst.column(j).norm() - 1.0), 1e-12);
  }
}

TEST(Generate, Deterministic) {
  const auto a = generate_instance(InstanceKind::kGaussianNormalized, 5, 9, 11);
  const auto b = generate_instance(InstanceKind::kGaussianNormalized, 5, 9, 11);
  EXPECT_EQ(a.matrix(), b.matrix());
  const auto c = generate_instance(InstanceKind::kGaussianNormalized, 5, 9, 12);
  EXPECT_NE(a.matrix(), c.matrix());
}

TEST(Rounding, FrozenTakeTheirSign) {
  WalkState st(2, 0);
  st.x << 0.999, -0.995;
  st.status = {VarStatus::kFrozen, VarStatus::kFrozen};
  const Coloring c = round_coloring(st);
  EXPECT_EQ(c.signs, (std::vector<int>{1, -1}));
  EXPECT_EQ(c.provenance[0], SignProvenance::kRoundedFrozen);
}

TEST(Rounding, AliveForcedToPlusOne) {
  WalkState st(1, 0);
  st.x << 0.5;
  const Coloring c = round_coloring(st);
  EXPECT_EQ(c.signs, std::vector<int>{1});
  EXPECT_EQ(c.provenance[0], SignProvenance::kForcedAlive);
}

TEST(Rounding, AllFrozenMovesPrefixesByAtMostOne) {
  const Index n = 100;
  const Instance inst = generate_instance(InstanceKind::kSphere, 3, n, 4);
  const CounterRng rng(9);
  WalkState st(n, 0);
  for (Index i = 0; i < n; ++i) {
    const double mag = 1.0 - rng.uniform(Stream::kInstance, 99, static_cast<std::uint64_t>(i)) / n;
    st.x(i) = rng.rademacher(Stream::kInstance, 98, static_cast<std::uint64_t>(i)) * mag;
    st.status[static_cast<std::size_t>(i)] = VarStatus::kFrozen;
  }
  const Vector bound = rounding_perturbation_bound(inst, st);
  EXPECT_LE(bound(n - 1), 1.0 + 1e-12);
  const Vector before = prefix_norms(inst, st.x);
  const Vector after = prefix_norms(inst, round_coloring(st).as_vector());
  for (Index i = 0; i < n; ++i) EXPECT_LE(std::abs(after(i) - before(i)), bound(i) + 1e-12);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.beta = 0.8;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = RunConfig{};
  c.gamma = 0.0;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c = RunConfig{};
  c.alpha2 = 0.2;
  EXPECT_EQ(error_code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(RunConfig, DefaultStepBudget) {
  RunConfig c;
  EXPECT_EQ(c.effective_max_steps(512), 10u * 51200u);
  c.max_steps = 7;
  EXPECT_EQ(c.effective_max_steps(512), 7u);
}

TEST(RunConfig, TheoreticalSaturates) {
  const RunConfig c = RunConfig::theoretical(16, 4);
  EXPECT_GT(c.gamma, 0.0);
  EXPECT_LT(c.gamma, 1e-15);
  EXPECT_EQ(c.max_steps, std::numeric_limits<std::uint64_t>::max());
}

TEST(Rng, CounterBasedAndSeeded) {
  const CounterRng a(5), b(5), c(6);
  EXPECT_EQ(a.bits(Stream::kWalkSigns, 3, 4), b.bits(Stream::kWalkSigns, 3, 4));
  EXPECT_NE(a.bits(Stream::kWalkSigns, 3, 4), c.bits(Stream::kWalkSigns, 3, 4));
  EXPECT_NE(a.bits(Stream::kWalkSigns, 3, 4), a.bits(Stream::kBaseline, 3, 4));
  double mean = 0.0;
  for (std::uint64_t i = 0; i < 20000; ++i) mean += a.rademacher(Stream::kWalkSigns, 1, i);
  EXPECT_LT(std::abs(mean / 20000.0), 0.03);
}

}  // namespace
}  // namespace l2disc
