#include <fstream>

#include "test_util.hpp"

namespace l2disc {
namespace {

using test::error_code_of;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string header_of(const std::string& csv) { return csv.substr(0, csv.find('\n')); }

std::string joined(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

TEST(Emit, EmptyBundleIsHeaderOnly) {
  ReportBundle b;
  b.suite = "scaling_signed_series";
  b.columns = suite_columns(Suite::kScalingSignedSeries);
  EXPECT_EQ(to_csv(b), joined(b.columns) + "\n");
  EXPECT_EQ(timing_csv(b), "row,runtime_s\n");
}

TEST(Emit, FloatsRoundTripAndEscaping) {
  ReportBundle b;
  b.suite = "x";
  b.columns = {"a", "b", "c"};
  b.rows = {{0.1, std::int64_t{7}, std::string("has,comma \"q\"")}};
  b.runtimes = {1.5};
  const std::string csv = to_csv(b);
  EXPECT_EQ(csv, "a,b,c\n0.10000000000000001,7,\"has,comma \"\"q\"\"\"\n");
  EXPECT_EQ(std::stod("0.10000000000000001"), 0.1);
}

TEST(Emit, JsonRoundTrip) {
  ReportBundle b;
  b.suite = "uvc_cert";
  b.columns = {"x", "y", "z"};
  b.rows = {{1.0 / 3.0, std::int64_t{-4}, std::string("e")}, {2.5, std::int64_t{0}, std::string()}};
  b.runtimes = {0.25, 0.5};
  b.summary = {{"k", 3}};
  const ReportBundle back = bundle_from_json(nlohmann::json::parse(to_json(b).dump()));
  EXPECT_TRUE(back == b);
  const auto dir = test::scratch_dir();
  emit_report(b, ReportFormat::kJson, (dir / "b.json").string());
  std::ifstream in(dir / "b.json");
  EXPECT_TRUE(bundle_from_json(nlohmann::json::parse(in)) == b);
  EXPECT_EQ(error_code_of([] { bundle_from_json(nlohmann::json::parse("{\"suite\": 1}")); }), ErrorCode::kParse);
}

TEST(Emit, UnwritablePath) {
  ReportBundle b;
  EXPECT_EQ(error_code_of([&] { emit_report(b, ReportFormat::kCsv, "/nonexistent-dir/x.csv"); }), ErrorCode::kIo);
}

TEST(Grid, Parsing) {
  const GridOverrides g = parse_grid("d=4,16; n = 64 ;seeds=2");
  EXPECT_EQ(g.at("d"), (std::vector<std::string>{"4", "16"}));
  EXPECT_EQ(g.at("n"), std::vector<std::string>{"64"});
  EXPECT_EQ(error_code_of([] { parse_grid("d"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { parse_grid("d="); }), ErrorCode::kInvalidArgument);
  BenchOptions o;
  o.grid = "bogus=1";
  EXPECT_EQ(error_code_of([&] { run_benchmark(Suite::kScalingSignedSeries, o, ""); }), ErrorCode::kInvalidArgument);
}

TEST(Suite, Names) {
  for (Suite s : {Suite::kScalingSignedSeries, Suite::kKomlosCover, Suite::kConcSuite, Suite::kUvcCert}) {
    EXPECT_EQ(parse_suite(to_string(s)), s);
  }
  EXPECT_EQ(error_code_of([] { parse_suite("nope"); }), ErrorCode::kInvalidArgument);
}

TEST(ScalingSuite, SingleCellDryRun) {
  const auto dir = test::scratch_dir();
  BenchOptions o;
  o.grid = "d=4;n=64;seeds=1;aux=2";
  o.workers = 1;
  const ReportBundle b = run_benchmark(Suite::kScalingSignedSeries, o, dir.string());
  ASSERT_EQ(b.rows.size(), 1u);
  ASSERT_EQ(b.rows[0].size(), b.columns.size());
  const std::string csv = slurp(dir / "scaling_signed_series.csv");
  EXPECT_EQ(header_of(csv), joined(suite_columns(Suite::kScalingSignedSeries)));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_TRUE(std::filesystem::exists(dir / "scaling_signed_series.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "scaling_signed_series_timing.csv"));
  EXPECT_EQ(std::get<std::string>(b.rows[0].back()), "");
  EXPECT_GT(std::get<double>(b.rows[0][8]), 0.0);
  EXPECT_EQ(b.summary["aux"]["violations"].get<int>(), 0);
}

TEST(ScalingSuite, ByteIdenticalAcrossRunsAndWorkers) {
  const auto dir = test::scratch_dir();
  BenchOptions o;
  o.seed = 42;
  o.grid = "d=2,4;n=32;seeds=2;aux=0";
  o.workers = 1;
  run_benchmark(Suite::kScalingSignedSeries, o, (dir / "a").string());
  o.workers = 3;
  run_benchmark(Suite::kScalingSignedSeries, o, (dir / "b").string());
  const std::string a = slurp(dir / "a" / "scaling_signed_series.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b" / "scaling_signed_series.csv"));
  o.seed = 43;
  run_benchmark(Suite::kScalingSignedSeries, o, (dir / "c").string());
  EXPECT_NE(a, slurp(dir / "c" / "scaling_signed_series.csv"));
}

TEST(ScalingSuite, TimeoutKeepsPartialRow) {
  BenchOptions o;
  o.grid = "d=4;n=256;seeds=1;aux=0";
  o.cell_time_budget_s = 1e-9;
  const ReportBundle b = run_benchmark(Suite::kScalingSignedSeries, o, "");
  ASSERT_EQ(b.rows.size(), 1u);
  EXPECT_NE(std::get<std::string>(b.rows[0].back()), "");
  EXPECT_EQ(b.summary["errors"].get<int>(), 1);
}

TEST(KomlosSuite, SmallGrid) {
  BenchOptions o;
  o.grid = "n=32,64;seeds=2";
  const ReportBundle b = run_benchmark(Suite::kKomlosCover, o, "");
  EXPECT_EQ(b.rows.size(), 4u);
  EXPECT_EQ(b.columns, suite_columns(Suite::kKomlosCover));
  EXPECT_TRUE(b.summary["all_covers_valid"].get<bool>());
  EXPECT_GT(b.summary["k2_max_over_min"].get<double>(), 0.0);
}

TEST(ConcSuite, MinimumTrials) {
  BenchOptions o;
  o.grid = "trials=10000";
  const ReportBundle b = run_benchmark(Suite::kConcSuite, o, "");
  EXPECT_EQ(b.rows.size(), 6u * 25u);
  EXPECT_TRUE(b.summary["all_pass"].get<bool>());
}

TEST(UvcSuite, SmallRun) {
  BenchOptions o;
  o.grid = "systems=12;d=4,16;n=64,256";
  const ReportBundle b = run_benchmark(Suite::kUvcCert, o, "");
  EXPECT_EQ(b.rows.size(), 12u);
  EXPECT_DOUBLE_EQ(b.summary["pass_rate"].get<double>(), 1.0);
}

}  // namespace
}  // namespace l2disc
