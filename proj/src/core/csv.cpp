#include "prefaudit/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "prefaudit/common.hpp"

namespace prefaudit::csv {

Table Table::parse(std::string_view text) {
  Table t;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool have_header = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_record = [&]() {
    fields.push_back(std::move(field));
    field.clear();
    const bool blank = fields.size() == 1 && fields[0].empty();
    if (!blank) {
      if (!have_header) {
        t.header_ = std::move(fields);
        have_header = true;
      } else {
        t.rows_.push_back(std::move(fields));
        t.lines_.push_back(record_line);
      }
    }
    fields.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) throw ValidationError("unterminated quoted field", {{record_line, "", "open quote"}});
  if (!field.empty() || !fields.empty()) end_record();
  if (!have_header) throw ValidationError("empty CSV input (no header)");

  // Strip a UTF-8 BOM from the first header cell.
  if (!t.header_.empty() && t.header_[0].rfind("\xEF\xBB\xBF", 0) == 0)
    t.header_[0].erase(0, 3);

  std::vector<RowDiagnostic> diags;
  for (std::size_t r = 0; r < t.rows_.size(); ++r) {
    if (t.rows_[r].size() != t.header_.size()) {
      diags.push_back({t.lines_[r], "",
                       "expected " + std::to_string(t.header_.size()) + " fields, found " +
                           std::to_string(t.rows_[r].size())});
    }
  }
  if (!diags.empty()) throw ValidationError("ragged CSV rows", std::move(diags));
  return t;
}

Table Table::read(const std::string& path) { return parse(read_file(path)); }

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  return std::nullopt;
}

void Table::require_columns(const std::vector<std::string>& names) const {
  std::vector<RowDiagnostic> diags;
  for (const auto& n : names)
    if (!column(n)) diags.push_back({1, n, "required column missing"});
  if (!diags.empty()) throw ValidationError("CSV header does not match schema", std::move(diags));
}

std::optional<double> to_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<long long> to_int(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const double a = std::fabs(v);
  // Plain decimals for everyday magnitudes; still the shortest exact form.
  const bool fixed = a == 0.0 || (a >= 1e-5 && a < 1e16);
  auto [p, ec] = fixed ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed)
                       : std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, p);
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace prefaudit::csv
