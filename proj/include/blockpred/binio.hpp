#pragma once

// Little-endian binary container: 8-byte magic, u32 header length, JSON
// header, raw payload.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "blockpred/error.hpp"

namespace blockpred::binio {

template <class T>
  requires std::is_arithmetic_v<T>
void write_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
  requires std::is_arithmetic_v<T>
void write_le(std::ostream& os, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (T v : values) write_le(os, v);
  }
}

template <class T>
  requires std::is_arithmetic_v<T>
T read_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError(FormatErrc::io, "unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

template <class T>
  requires std::is_arithmetic_v<T>
void read_le(std::istream& is, std::span<T> out) {
  if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes())))
    throw FormatError(FormatErrc::io, "unexpected end of file");
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : out) {
      auto* p = reinterpret_cast<unsigned char*>(&v);
      std::reverse(p, p + sizeof(T));
    }
  }
}

inline void write_header(std::ostream& os, std::string_view magic, const nlohmann::json& header) {
  if (magic.size() != 8) throw Error(ErrorKind::internal, "binio: magic must be 8 bytes");
  os.write(magic.data(), 8);
  const std::string text = header.dump();
  write_le(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline nlohmann::json read_header(std::istream& is, std::string_view magic) {
  char buf[8];
  if (!is.read(buf, 8) || std::string_view(buf, 8) != magic)
    throw FormatError(FormatErrc::malformed_header, "bad magic, expected " + std::string(magic));
  const auto len = read_le<std::uint32_t>(is);
  std::string text(len, '\0');
  if (!is.read(text.data(), len)) throw FormatError(FormatErrc::malformed_header, "truncated header");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_header, e.what());
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatErrc::io, "cannot open " + path + " for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatErrc::io, "cannot open " + path);
  return is;
}

} // namespace blockpred::binio
