#include <doctest.h>

#include <cstdlib>

#include "prefaudit/common.hpp"
#include "prefaudit/csv.hpp"

using namespace prefaudit;

TEST_CASE("iso dates round-trip") {
  CHECK(parse_iso_date("1970-01-01") == 0);
  CHECK(parse_iso_date("2020-03-01") - parse_iso_date("2020-02-28") == 2);
  CHECK(format_iso_date(parse_iso_date("2021-12-31")) == "2021-12-31");
  int secs = -1;
  CHECK(parse_iso_date("2020-05-04T13:30:15Z", &secs) == parse_iso_date("2020-05-04"));
  CHECK(secs == 13 * 3600 + 30 * 60 + 15);
  parse_iso_date("2020-05-04 08:00:00", &secs);
  CHECK(secs == 8 * 3600);
  CHECK_THROWS(parse_iso_date("2020-02-30"));
  CHECK_THROWS(parse_iso_date("20-1-1"));
  CHECK_THROWS(parse_iso_date(""));
}

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("mix_seed separates streams") {
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  CHECK(mix_seed(7, 3) == mix_seed(7, 3));
}

TEST_CASE("thread budget honours the environment") {
  setenv("PREFAUDIT_THREADS", "3", 1);
  CHECK(thread_budget() == 3);
  setenv("PREFAUDIT_THREADS", "0", 1);
  CHECK(thread_budget() >= 1);
  unsetenv("PREFAUDIT_THREADS");
  CHECK(thread_budget() >= 1);
}

TEST_CASE("csv parsing handles quotes, CRLF and BOM") {
  auto t = csv::Table::parse("\xEF\xBB\xBF" "a,b\r\n1,\"x,\"\"y\"\"\"\r\n\r\n2,z\n");
  REQUIRE(t.rows() == 2);
  CHECK(t.header()[0] == "a");
  CHECK(t.row(0)[1] == "x,\"y\"");
  CHECK(t.line_of(1) == 4);
  CHECK(*t.column("b") == 1);
  CHECK_FALSE(t.column("c"));
  CHECK_THROWS_AS(t.require_columns({"a", "c"}), ValidationError);
}

TEST_CASE("ragged csv rows carry line diagnostics") {
  try {
    csv::Table::parse("a,b\n1,2\n3\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    REQUIRE(e.diagnostics().size() == 1);
    CHECK(e.diagnostics()[0].line == 3);
  }
}

TEST_CASE("numeric field conversion") {
  CHECK(*csv::to_double("1.5") == 1.5);
  CHECK(*csv::to_double("-2e3") == -2000.0);
  CHECK_FALSE(csv::to_double("abc"));
  CHECK_FALSE(csv::to_double("1.5x"));
  CHECK(*csv::to_int("42") == 42);
  CHECK_FALSE(csv::to_int("4.2"));
  CHECK(*csv::to_double(csv::format_double(0.1 + 0.2)) == 0.1 + 0.2);
  CHECK(csv::escape("a,b") == "\"a,b\"");
  CHECK(csv::escape("plain") == "plain");
}
