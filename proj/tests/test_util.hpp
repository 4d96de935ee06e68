#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "l2disc/l2disc.hpp"

namespace l2disc::test {

/// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "l2disc_tests" /
             (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

template <typename F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an l2disc::Error";
  return ErrorCode::kNotImplemented;
}

inline Instance from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto d = static_cast<Index>(rows.size());
  const auto n = static_cast<Index>(rows.begin()->size());
  Matrix m(d, n);
  Index r = 0;
  for (const auto& row : rows) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return Instance(m);
}

}  // namespace l2disc::test
