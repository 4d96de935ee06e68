#include "test_util.hpp"

namespace l2disc {
namespace {

TEST(MaxPrefix, TwoOnes) {
  const Instance inst = test::from_rows({{1.0, 1.0}});
  Vector x(2);
  x << 1, -1;
  const auto r = max_prefix_discrepancy(inst, x);
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_EQ(r.argmax, 1);
}

TEST(MaxPrefix, AlternatingAxes) {
  const Instance inst = test::from_rows({{1, 0, 1, 0}, {0, 1, 0, 1}});
  Vector x(4);
  x << 1, 1, -1, -1;
  const auto r = max_prefix_discrepancy(inst, x);
  EXPECT_DOUBLE_EQ(r.value, std::sqrt(2.0));
  EXPECT_EQ(r.argmax, 2);
}

TEST(MaxPrefix, AllSigningsMatchDirectSums) {
  const Instance inst = generate_instance(InstanceKind::kSphere, 2, 4, 12);
  for (int mask = 0; mask < 16; ++mask) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x(j) = (mask >> j) & 1 ? -1.0 : 1.0;
    double best = 0.0;
    for (Index i = 1; i <= 4; ++i) {
      double s0 = 0.0, s1 = 0.0;
      for (Index j = 0; j < i; ++j) {
        s0 += x(j) * inst.matrix()(0, j);
        s1 += x(j) * inst.matrix()(1, j);
      }
      best = std::max(best, std::hypot(s0, s1));
    }
    EXPECT_NEAR(max_prefix_discrepancy(inst, x).value, best, 1e-14);
  }
}

TEST(LocalMeanSq, ZeroColoring) {
  const Instance m = generate_instance(InstanceKind::kSphere, 5, 5, 1);
  for (const auto& s : local_mean_sq_discrepancy(m, Vector::Zero(5), {{0, 1}, {2, 3, 4}})) EXPECT_EQ(s.sum, 0.0);
}

TEST(LocalMeanSq, Identity) {
  const Instance m(Matrix::Identity(4, 4));
  const auto s = local_mean_sq_discrepancy(m, Vector::Ones(4), {{0, 1}});
  EXPECT_DOUBLE_EQ(s[0].sum, 2.0);
  EXPECT_DOUBLE_EQ(s[0].ratio, 2.0 / (std::log(4.0) + 2.0));
}

TEST(LocalMeanSq, SingletonsMatchRowDiscrepancies) {
  const Instance m = generate_instance(InstanceKind::kSphere, 16, 16, 4);
  const CounterRng rng(1);
  Vector x(16);
  for (Index i = 0; i < 16; ++i) x(i) = rng.rademacher(Stream::kBaseline, 0, static_cast<std::uint64_t>(i));
  std::vector<std::vector<Index>> sets;
  for (Index i = 0; i < 16; ++i) sets.push_back({i});
  const auto s = local_mean_sq_discrepancy(m, x, sets);
  for (Index i = 0; i < 16; ++i) {
    double row = 0.0;
    for (Index j = 0; j < 16; ++j) row += m.matrix()(i, j) * x(j);
    EXPECT_NEAR(s[static_cast<std::size_t>(i)].sum, row * row, 1e-13);
  }
}

TEST(Decomposition, EmptyCorruptionGivesZeroIncrements) {
  const Instance inst = generate_instance(InstanceKind::kSphere, 3, 10, 1);
  CorruptionLog log({5}, 10);
  PrefixDiagnostics diag(inst, {5});
  DiagnosticsTrace trace;
  StepSample s;
  s.delta_x = Vector::Constant(10, 0.1);
  s.r = Vector::Ones(10);
  s.gamma_used = 0.1;
  const auto u = VectorColoring::dense({0, 1, 2}, 10, Matrix::Identity(3, 3));
  decompose_increments(trace, diag, inst, Vector::Zero(10), s, log, u);
  const auto& a = diag.accumulators()[0];
  EXPECT_EQ(a.q, 0.0);
  EXPECT_EQ(a.l, 0.0);
  EXPECT_EQ(a.q_tilde, 0.0);
  EXPECT_EQ(a.l_tilde, 0.0);
  EXPECT_NEAR(trace.v_b, 0.01 * 3.0, 1e-15);
}

TEST(Decomposition, IdentityHoldsAfterRun) {
  RunConfig cfg;
  cfg.seed = 3;
  const Index n = 120;
  cfg.monitored_prefixes = {n / 4, n / 2, n};
  const Instance inst = generate_instance(InstanceKind::kSphere, 3, n, 21);
  const RunResult r = run_signed_series(inst, cfg);
  for (std::size_t e = 0; e < r.corruption.size(); ++e) {
    const auto& acc = r.prefixes.accumulators()[e];
    const DirectNorms direct = direct_corrupted_norms(inst, r.state.x, r.corruption.entries()[e].corrupted);
    EXPECT_NEAR(direct.bsx_sq, acc.q + 2.0 * acc.l, 1e-6 * (1.0 + direct.bsx_sq));
    EXPECT_NEAR(direct.isx_sq, acc.q_tilde + 2.0 * acc.l_tilde, 1e-6 * (1.0 + direct.isx_sq));
  }
}

TEST(Trace, VbAndQuadraticTermsNonDecreasing) {
  RunConfig cfg;
  cfg.record_every = 1;
  cfg.monitored_prefixes = {20, 40};
  const Instance inst = generate_instance(InstanceKind::kSphere, 2, 40, 2);
  const RunResult r = run_signed_series(inst, cfg);
  for (std::size_t i = 1; i < r.trace.records.size(); ++i) {
    const auto& a = r.trace.records[i - 1];
    const auto& b = r.trace.records[i];
    EXPECT_LE(a.v_b, b.v_b);
    for (std::size_t e = 0; e < a.prefixes.size(); ++e) {
      EXPECT_LE(a.prefixes[e].q, b.prefixes[e].q);
      EXPECT_LE(a.prefixes[e].q_tilde, b.prefixes[e].q_tilde);
      EXPECT_LE(a.prefixes[e].corr_size, b.prefixes[e].corr_size);
    }
  }
}

TEST(Report, DiagnosticsCsvSchema) {
  RunConfig cfg;
  cfg.monitored_prefixes = {5, 10};
  cfg.record_every = 3;
  const Instance inst = generate_instance(InstanceKind::kSphere, 2, 10, 2);
  const RunResult r = run_signed_series(inst, cfg);
  const std::string csv = diagnostics_csv(r.trace);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,alive,V_B,max_prefix_disc,prefix_i,Q,L,Qt,Lt,corr_size");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
  }
  EXPECT_EQ(rows, 2 * r.trace.records.size());
}

TEST(Report, SummaryJsonKeys) {
  RunConfig cfg;
  const Instance inst = generate_instance(InstanceKind::kSphere, 2, 10, 2);
  const RunResult r = run_signed_series(inst, cfg);
  const nlohmann::json j = summary_json(r.trace, r.state, r.coloring, cfg);
  for (const char* key : {"max_prefix_discrepancy", "argmax_prefix", "steps", "frozen_count", "fitted_constants",
                          "config", "checks", "V_B"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["config"]["gamma"].get<double>(), 0.1);
  EXPECT_EQ(j["steps"].get<std::uint64_t>(), r.trace.summary.steps);
  EXPECT_DOUBLE_EQ(j["max_prefix_discrepancy"].get<double>(), r.trace.summary.max_prefix_discrepancy);
}

}  // namespace
}  // namespace l2disc
