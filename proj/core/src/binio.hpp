// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "stylerec/error.hpp"

// Little-endian binary checkpoint primitives. Doubles are written as their
// IEEE-754 bit patterns, so save/load round-trips are bit-exact.

namespace stylerec::binio {

static_assert(std::numeric_limits<double>::is_iec559,
              "checkpoints require IEEE-754 doubles");

inline void write_bytes(std::ostream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void write_u8(std::ostream& out, std::uint8_t v) { write_bytes(out, &v, 1); }

inline void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  write_bytes(out, b, 8);
}

inline void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

inline void write_f64_block(std::ostream& out, const std::vector<double>& v) {
  for (const double x : v) write_f64(out, x);
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  write_bytes(out, s.data(), s.size());
}

inline void read_bytes(std::istream& in, void* p, std::size_t n,
                       const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw ParseError(std::string("checkpoint truncated reading ") + what);
}

inline std::uint8_t read_u8(std::istream& in, const char* what) {
  std::uint8_t v = 0;
  read_bytes(in, &v, 1, what);
  return v;
}

inline std::uint32_t read_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  read_bytes(in, b, 4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  read_bytes(in, b, 8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline double read_f64(std::istream& in, const char* what) {
  const std::uint64_t bits = read_u64(in, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void read_f64_block(std::istream& in, std::vector<double>& v,
                           std::size_t n, const char* what) {
  v.resize(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = read_f64(in, what);
}

inline std::string read_string(std::istream& in, const char* what) {
  const std::uint32_t n = read_u32(in, what);
  std::string s(n, '\0');
  if (n > 0) read_bytes(in, s.data(), n, what);
  return s;
}

}  // namespace stylerec::binio
