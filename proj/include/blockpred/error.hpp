#pragma once

#include <stdexcept>
#include <string>

namespace blockpred {

// Broad failure classes. The CLI maps them onto exit codes.
enum class ErrorKind { usage, data, internal };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Invalid configuration or arguments supplied by the caller.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

// File-level failures. Each reader failure carries a distinct code.
enum class FormatErrc {
  io,
  malformed_header,
  unsupported_version,
  row_count,
  range,
  missing_column,
  non_numeric,
  inconsistent,
};

inline const char* to_string(FormatErrc c) {
  switch (c) {
    case FormatErrc::io: return "io";
    case FormatErrc::malformed_header: return "malformed_header";
    case FormatErrc::unsupported_version: return "unsupported_version";
    case FormatErrc::row_count: return "row_count";
    case FormatErrc::range: return "range";
    case FormatErrc::missing_column: return "missing_column";
    case FormatErrc::non_numeric: return "non_numeric";
    case FormatErrc::inconsistent: return "inconsistent";
  }
  return "unknown";
}

class FormatError : public Error {
public:
  FormatError(FormatErrc code, const std::string& what)
      : Error(ErrorKind::data, std::string(to_string(code)) + ": " + what), code_(code) {}
  FormatErrc code() const noexcept { return code_; }

private:
  FormatErrc code_;
};

// Quantization lattice of a scan does not match the dictionary it is compared against.
class DigestMismatch : public Error {
public:
  explicit DigestMismatch(const std::string& what) : Error(ErrorKind::data, what) {}
};

// Shape or extent mismatch between tensors / layers.
class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

} // namespace blockpred
