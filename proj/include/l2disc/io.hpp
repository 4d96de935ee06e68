#pragma once

// Matrix and coloring file formats.
//
//   text:   "l2disc v1 <d> <n>" then d lines of n decimals (row-major)
//   binary: "L2D1", u32 d, u32 n (little endian), d*n f64 column-major LE
//   coloring: one line of n space-separated +1/-1 integers

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "l2disc/core.hpp"

namespace l2disc {

enum class MatrixFormat { kText, kBinary };

inline MatrixFormat parse_matrix_format(const std::string& s) {
  if (s == "text") return MatrixFormat::kText;
  if (s == "binary") return MatrixFormat::kBinary;
  throw Error(ErrorCode::kInvalidArgument, "unknown matrix format '" + s + "'");
}

namespace detail {

inline constexpr std::array<char, 4> kBinaryMagic{'L', '2', 'D', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw Error(ErrorCode::kParse, "truncated binary matrix");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

inline double parse_double(const std::string& token) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::out_of_range&) {
    return token.front() == '-' ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::infinity();
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "bad number '" + token + "'");
  }
}

inline Matrix read_text_matrix(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::kParse, "empty matrix file");
  std::istringstream hs(header);
  std::string tag, version;
  long long d = 0, n = 0;
  std::string extra;
  if (!(hs >> tag >> version >> d >> n) || tag != "l2disc" || version != "v1" || (hs >> extra) ||
      d < 1 || n < 1) {
    throw Error(ErrorCode::kParse, "malformed header '" + header + "'");
  }
  Matrix m(d, n);
  for (long long r = 0; r < d; ++r) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "missing row " + std::to_string(r));
    std::istringstream ls(line);
    std::string token;
    long long c = 0;
    while (ls >> token) {
      if (c >= n) throw Error(ErrorCode::kParse, "row " + std::to_string(r) + " has too many entries");
      m(r, c++) = parse_double(token);
    }
    if (c != n) throw Error(ErrorCode::kParse, "row " + std::to_string(r) + " has too few entries");
  }
  return m;
}

inline Matrix read_binary_matrix(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kBinaryMagic) {
    throw Error(ErrorCode::kParse, "bad binary magic");
  }
  const auto d = get_le<std::uint32_t>(in);
  const auto n = get_le<std::uint32_t>(in);
  if (d < 1 || n < 1) throw Error(ErrorCode::kParse, "malformed binary header");
  Matrix m(d, n);
  for (std::uint32_t c = 0; c < n; ++c) {
    for (std::uint32_t r = 0; r < d; ++r) m(r, c) = get_le<double>(in);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kParse, "trailing bytes after binary payload");
  }
  return m;
}

}  // namespace detail

/// Read a raw matrix without the unit-column check.
inline Matrix load_raw_matrix(const std::string& path, MatrixFormat format) {
  std::ifstream in(path, format == MatrixFormat::kBinary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return format == MatrixFormat::kText ? detail::read_text_matrix(in)
                                       : detail::read_binary_matrix(in);
}

inline Instance load_matrix(const std::string& path, MatrixFormat format) {
  return Instance(load_raw_matrix(path, format), kLoadColumnNormTolerance);
}

inline void save_raw_matrix(const Matrix& m, const std::string& path, MatrixFormat format) {
  std::ofstream out(path, format == MatrixFormat::kBinary ? std::ios::binary | std::ios::trunc
                                                          : std::ios::out | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  if (format == MatrixFormat::kText) {
    out << "l2disc v1 " << m.rows() << ' ' << m.cols() << '\n';
    out << std::setprecision(17);
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) {
        if (c) out << ' ';
        out << m(r, c);
      }
      out << '\n';
    }
  } else {
    if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
        m.cols() > std::numeric_limits<std::uint32_t>::max()) {
      throw Error(ErrorCode::kInvalidArgument, "matrix too large for binary format");
    }
    out.write(detail::kBinaryMagic.data(), 4);
    detail::put_le(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_le(out, static_cast<std::uint32_t>(m.cols()));
    for (Index c = 0; c < m.cols(); ++c) {
      for (Index r = 0; r < m.rows(); ++r) detail::put_le(out, m(r, c));
    }
  }
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

inline void save_matrix(const Instance& inst, const std::string& path, MatrixFormat format) {
  save_raw_matrix(inst.matrix(), path, format);
}

inline std::string format_coloring(const Coloring& c) {
  std::string s;
  s.reserve(c.signs.size() * 3);
  for (std::size_t i = 0; i < c.signs.size(); ++i) {
    if (i) s += ' ';
    s += c.signs[i] < 0 ? "-1" : "1";
  }
  s += '\n';
  return s;
}

inline void save_coloring(const Coloring& c, const std::string& path) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out << format_coloring(c);
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

inline Coloring parse_coloring(const std::string& text) {
  Coloring c;
  std::istringstream in(text);
  long long v = 0;
  while (in >> v) {
    if (v != 1 && v != -1) throw Error(ErrorCode::kParse, "coloring entries must be +1 or -1");
    c.signs.push_back(static_cast<int>(v));
    c.provenance.push_back(SignProvenance::kRoundedFrozen);
  }
  if (!in.eof()) throw Error(ErrorCode::kParse, "bad token in coloring");
  return c;
}

}  // namespace l2disc
