#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace prefaudit {

// Error categories surfaced through the C API as status codes.
enum class ErrorKind {
  InvalidArgument,
  Io,
  Validation,
  Precondition,
  Numerical,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct RowDiagnostic {
  std::size_t line = 0;  // 1-based line in the source file (header is line 1)
  std::string column;
  std::string message;
};

// Schema or bound violations found while reading a file; carries one entry
// per offending cell.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<RowDiagnostic> diags = {});
  const std::vector<RowDiagnostic>& diagnostics() const noexcept { return diags_; }

 private:
  std::vector<RowDiagnostic> diags_;
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what)
      : Error(ErrorKind::Precondition, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::Numerical, what) {}
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorKind::InvalidArgument, what);
}
inline Error io_error(const std::string& what) { return Error(ErrorKind::Io, what); }

// Calendar day, counted from 1970-01-01.
using Day = std::int32_t;

// Accepts YYYY-MM-DD, optionally followed by 'T' or ' ' and a time of day.
// `seconds_of_day` receives the time component (0 when absent).
Day parse_iso_date(std::string_view text, int* seconds_of_day = nullptr);
std::string format_iso_date(Day day);

// Worker count for internal parallel sections: PREFAUDIT_THREADS when set,
// otherwise the hardware concurrency (at least 1).
unsigned thread_budget();

// Hex SHA-256 of a byte string / file contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// splitmix64 step; used to derive independent seeds for sub-streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace prefaudit
