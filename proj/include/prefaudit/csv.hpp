#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefaudit::csv {

// Minimal RFC-4180 style reader: comma separated, optional double quotes,
// LF or CRLF line endings. Whole file is held in memory.
class Table {
 public:
  static Table parse(std::string_view text);
  static Table read(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }
  // 1-based source line number of data row i.
  std::size_t line_of(std::size_t i) const { return lines_[i]; }

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws ValidationError naming the missing columns.
  void require_columns(const std::vector<std::string>& names) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

std::optional<double> to_double(std::string_view s);
std::optional<long long> to_int(std::string_view s);

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

std::string escape(std::string_view field);

}  // namespace prefaudit::csv
