#include <fstream>

#include "test_util.hpp"

namespace l2disc {
namespace {

using test::error_code_of;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

TEST(TextFormat, ParsesMinimalFile) {
  const auto dir = test::scratch_dir();
  spit(dir / "m.txt", "l2disc v1 1 2\n1.0 -1.0\n");
  const Instance inst = load_matrix((dir / "m.txt").string(), MatrixFormat::kText);
  EXPECT_EQ(inst.d(), 1);
  EXPECT_EQ(inst.n(), 2);
  EXPECT_EQ(inst.matrix()(0, 0), 1.0);
  EXPECT_EQ(inst.matrix()(0, 1), -1.0);
}

TEST(TextFormat, RejectsLongColumnOnLoad) {
  const auto dir = test::scratch_dir();
  spit(dir / "m.txt", "l2disc v1 2 1\n0.8\n0.8\n");
  EXPECT_EQ(error_code_of([&] { load_matrix((dir / "m.txt").string(), MatrixFormat::kText); }),
            ErrorCode::kColumnNormExceeded);
}

TEST(TextFormat, MalformedInputs) {
  const auto dir = test::scratch_dir();
  for (const char* body : {"", "l2disc v2 1 1\n1\n", "l2disc v1 1 2\n1\n", "l2disc v1 1 1\n1 2\n",
                           "l2disc v1 1 1\nabc\n", "l2disc v1 2 1\n1\n"}) {
    spit(dir / "m.txt", body);
    EXPECT_EQ(error_code_of([&] { load_matrix((dir / "m.txt").string(), MatrixFormat::kText); }),
              ErrorCode::kParse)
        << body;
  }
  spit(dir / "m.txt", "l2disc v1 1 1\nnan\n");
  EXPECT_EQ(error_code_of([&] { load_matrix((dir / "m.txt").string(), MatrixFormat::kText); }),
            ErrorCode::kNonFinite);
}

TEST(TextFormat, RoundTrip) {
  const auto dir = test::scratch_dir();
  const Instance one = test::from_rows({{0.5}});
  save_matrix(one, (dir / "a.txt").string(), MatrixFormat::kText);
  EXPECT_NEAR(load_matrix((dir / "a.txt").string(), MatrixFormat::kText).matrix()(0, 0), 0.5, 1e-15);

  const Instance inst = generate_instance(InstanceKind::kSphere, 3, 7, 2);
  save_matrix(inst, (dir / "b.txt").string(), MatrixFormat::kText);
  EXPECT_EQ(load_matrix((dir / "b.txt").string(), MatrixFormat::kText).matrix(), inst.matrix());
}

TEST(BinaryFormat, RoundTripIsExact) {
  const auto dir = test::scratch_dir();
  const Instance four = generate_instance(InstanceKind::kSphere, 4, 4, 1);
  save_matrix(four, (dir / "a.bin").string(), MatrixFormat::kBinary);
  EXPECT_EQ(load_matrix((dir / "a.bin").string(), MatrixFormat::kBinary).matrix(), four.matrix());

  const Instance inst = generate_instance(InstanceKind::kSphere, 8, 16, 3);
  save_matrix(inst, (dir / "b.bin").string(), MatrixFormat::kBinary);
  const Instance back = load_matrix((dir / "b.bin").string(), MatrixFormat::kBinary);
  save_matrix(back, (dir / "c.bin").string(), MatrixFormat::kBinary);
  const std::string payload = slurp(dir / "b.bin");
  EXPECT_EQ(payload, slurp(dir / "c.bin"));
  EXPECT_EQ(payload.size(), 12u + 8u * 16u * 8u);
  EXPECT_EQ(payload.substr(0, 4), "L2D1");
}

TEST(BinaryFormat, Truncated) {
  const auto dir = test::scratch_dir();
  const Instance inst = generate_instance(InstanceKind::kSphere, 2, 2, 3);
  save_matrix(inst, (dir / "a.bin").string(), MatrixFormat::kBinary);
  std::string bytes = slurp(dir / "a.bin");
  spit(dir / "b.bin", bytes.substr(0, bytes.size() - 3));
  EXPECT_EQ(error_code_of([&] { load_matrix((dir / "b.bin").string(), MatrixFormat::kBinary); }),
            ErrorCode::kParse);
  spit(dir / "c.bin", bytes + "x");
  EXPECT_EQ(error_code_of([&] { load_matrix((dir / "c.bin").string(), MatrixFormat::kBinary); }),
            ErrorCode::kParse);
}

TEST(Io, UnwritablePath) {
  const Instance inst = test::from_rows({{1.0}});
  EXPECT_EQ(error_code_of([&] { save_matrix(inst, "/nonexistent-dir/x.txt", MatrixFormat::kText); }),
            ErrorCode::kIo);
  EXPECT_EQ(error_code_of([&] { load_matrix("/nonexistent-dir/x.txt", MatrixFormat::kText); }), ErrorCode::kIo);
}

TEST(ColoringFormat, RoundTrip) {
  Coloring c;
  c.signs = {1, -1, -1, 1};
  c.provenance.assign(4, SignProvenance::kRoundedFrozen);
  EXPECT_EQ(format_coloring(c), "1 -1 -1 1\n");
  EXPECT_EQ(parse_coloring(format_coloring(c)).signs, c.signs);
  EXPECT_EQ(error_code_of([] { parse_coloring("1 0 -1"); }), ErrorCode::kParse);
  EXPECT_EQ(error_code_of([] { parse_coloring("1 x"); }), ErrorCode::kParse);
}

}  // namespace
}  // namespace l2disc
