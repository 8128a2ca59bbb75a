#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>

#include "dknn/error.hpp"

namespace dknn::detail {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_span(std::ostream& out, std::span<const T> v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) fail(Errc::kFormat, "unexpected end of file");
  return v;
}

template <typename T>
void read_span(std::istream& in, std::span<T> v) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  if (!in) fail(Errc::kFormat, "unexpected end of file");
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4];
  in.read(buf, 4);
  if (!in || std::string(buf, 4) != std::string(magic, 4)) {
    fail(Errc::kFormat, std::string("bad magic, expected ") + magic);
  }
}

}  // namespace dknn::detail
