#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "omnitraj/error.hpp"

namespace omnitraj::binary {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void write(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read(std::istream& in) {
  static_assert(std::is_trivially_copyable_v<T>);
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("unexpected end of binary file");
  return value;
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4] = {};
  in.read(got, 4);
  if (!in || std::memcmp(got, magic, 4) != 0)
    throw IoError(std::string("bad magic, expected ") + magic);
}

}  // namespace omnitraj::binary
