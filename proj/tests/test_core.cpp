#include "doctest.h"

#include <fstream>

#include "reviewlens/core.hpp"
#include "test_util.hpp"

using namespace reviewlens;

TEST_CASE("fnv1a64 matches the published offset basis and test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  // "a" folded once: (basis ^ 'a') * prime
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("splitmix64 matches the reference sequence from seed 0") {
  // First three outputs of the splitmix64 stream seeded with 0.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(splitmix64(0)) != splitmix64(0));
  // Distinct lanes derived by xor stay distinct.
  CHECK(splitmix64(42 ^ 0x5eedULL) != splitmix64(42 ^ 0x1a707707ULL));
}

TEST_CASE("sha256 of the empty string is the well-known digest") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("hmac-sha256 matches RFC 4231 case 2") {
  CHECK(hmac_sha256_hex("Jefe", "what do ya want for nothing?") ==
        "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST_CASE("sha256_file_hex equals the in-memory digest") {
  testutil::TempDir tmp("core");
  const auto p = tmp.path / "blob.bin";
  write_file_atomic(p, "the quick brown fox");
  CHECK(sha256_file_hex(p) == sha256_hex("the quick brown fox"));
}

TEST_CASE("iso8601 formats epoch milliseconds as UTC") {
  CHECK(iso8601_utc(0) == "1970-01-01T00:00:00Z");
  CHECK(iso8601_utc(1767225599000LL) == "2025-12-31T23:59:59Z");
}

TEST_CASE("matrix rows view the right storage") {
  Matrix m(3, 2);
  m.at(1, 0) = 5.0;
  m.at(1, 1) = -2.0;
  auto r = m.row(1);
  CHECK(r[0] == 5.0);
  CHECK(r[1] == -2.0);
  CHECK(m.all_finite());
  m.at(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(m.all_finite());
}

TEST_CASE("jsonl round trip preserves rows and provenance") {
  testutil::TempDir tmp("core");
  const auto p = tmp.path / "rows.jsonl";
  std::vector<json> rows = {{{"id", 1}}, {{"id", 2}, {"x", "y"}}};
  json prov = {{"_type", "provenance"}, {"stage", "demo"}};
  write_jsonl_atomic(p, rows, prov);

  auto f = read_jsonl(p);
  REQUIRE(f.rows.size() == 2);
  CHECK(f.rows[0]["id"] == 1);
  CHECK(f.rows[1]["x"] == "y");
  CHECK(f.provenance["stage"] == "demo");

  // Without provenance the first line is a data row.
  write_jsonl_atomic(p, rows);
  f = read_jsonl(p);
  CHECK(f.provenance.is_null());
  CHECK(f.rows.size() == 2);
}

TEST_CASE("atomic writes replace the full file") {
  testutil::TempDir tmp("core");
  const auto p = tmp.path / "f.txt";
  write_file_atomic(p, "first version, longer");
  write_file_atomic(p, "second");
  CHECK(read_file(p) == "second");
}

TEST_CASE("count_words splits on whitespace runs") {
  CHECK(count_words("") == 0);
  CHECK(count_words("   ") == 0);
  CHECK(count_words("one") == 1);
  CHECK(count_words("  a  b\tc\nd ") == 4);
}
