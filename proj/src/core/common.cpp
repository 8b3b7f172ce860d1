#include "prefaudit/common.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>
#include <thread>

namespace prefaudit {

namespace {

std::string join_diagnostics(const std::string& what,
                             const std::vector<RowDiagnostic>& diags) {
  if (diags.empty()) return what;
  std::ostringstream os;
  os << what;
  const std::size_t shown = std::min<std::size_t>(diags.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    os << "\n  line " << diags[i].line;
    if (!diags[i].column.empty()) os << " [" << diags[i].column << "]";
    os << ": " << diags[i].message;
  }
  if (diags.size() > shown) os << "\n  ... " << diags.size() - shown << " more";
  return os.str();
}

template <typename T>
bool parse_fixed(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

ValidationError::ValidationError(const std::string& what,
                                 std::vector<RowDiagnostic> diags)
    : Error(ErrorKind::Validation, join_diagnostics(what, diags)),
      diags_(std::move(diags)) {}

Day parse_iso_date(std::string_view text, int* seconds_of_day) {
  using namespace std::chrono;
  auto fail = [&]() -> Error {
    return invalid_argument("malformed ISO-8601 date '" + std::string(text) + "'");
  };
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0, d = 0;
  if (!parse_fixed(text.substr(0, 4), y) || !parse_fixed(text.substr(5, 2), m) ||
      !parse_fixed(text.substr(8, 2), d))
    throw fail();
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) throw fail();

  int secs = 0;
  if (text.size() > 10) {
    if (text[10] != 'T' && text[10] != ' ') throw fail();
    std::string_view tod = text.substr(11);
    // Trailing zone designators are ignored; ordering within a day is all
    // that matters downstream.
    while (!tod.empty() && (tod.back() == 'Z')) tod.remove_suffix(1);
    if (auto plus = tod.find_first_of("+-"); plus != std::string_view::npos)
      tod = tod.substr(0, plus);
    if (auto dot = tod.find('.'); dot != std::string_view::npos) tod = tod.substr(0, dot);
    int hh = 0, mm = 0, ss = 0;
    if (tod.size() < 5 || tod[2] != ':' || !parse_fixed(tod.substr(0, 2), hh) ||
        !parse_fixed(tod.substr(3, 2), mm))
      throw fail();
    if (tod.size() >= 8) {
      if (tod[5] != ':' || !parse_fixed(tod.substr(6, 2), ss)) throw fail();
    }
    if (hh > 23 || mm > 59 || ss > 60) throw fail();
    secs = hh * 3600 + mm * 60 + ss;
  }
  if (seconds_of_day) *seconds_of_day = secs;
  return static_cast<Day>(sys_days{ymd}.time_since_epoch().count());
}

std::string format_iso_date(Day day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

unsigned thread_budget() {
  if (const char* env = std::getenv("PREFAUDIT_THREADS")) {
    unsigned n = 0;
    std::string_view s(env);
    if (parse_fixed(s, n) && n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error(ErrorKind::Internal, "sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw io_error("write to '" + path + "' failed");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace prefaudit
