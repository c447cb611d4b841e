#include "doctest.h"
#include "oracles.hpp"
#include "ternkern/tpk.hpp"

#include <bit>
#include <cstring>

using namespace ternkern;

namespace {

TpkFile sample(PackFormat f, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TpkFile file;
  file.format = f;
  file.matrices.push_back({"wq", pack(f, oracle::random_matrix(rng, 5, 13, 0.25f))});
  file.matrices.push_back({"", pack(f, oracle::random_matrix(rng, 1, 1, 2.0f))});
  file.matrices.push_back({"w_down", pack(f, oracle::random_matrix(rng, 8, 24, 0.0625f))});
  return file;
}

std::uint32_t le32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::size_t offset_of(const std::vector<std::uint8_t>& b) {
  try {
    parse_tpk(b);
  } catch (const TpkError& e) {
    return e.offset();
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace

TEST_SUITE("tpk") {

TEST_CASE("header layout is little-endian and bit-exact") {
  std::mt19937_64 rng(1);
  TpkFile f;
  f.format = PackFormat::TL2;
  const TernaryMatrix m = TernaryMatrix::from_values(1, 6, std::vector<std::int8_t>{1, 1, 1, -1, -1, 0}, 0.5f);
  f.matrices.push_back({"ab", pack(PackFormat::TL2, m)});
  const auto b = serialize(f);
  const std::vector<std::uint8_t> expect = {
      'T', 'P', 'K', '1', 1, 0, 3, 1, 0, 0, 0,        // magic, version, format, count
      2, 0, 0, 0, 'a', 'b',                            // name
      1, 0, 0, 0, 6, 0, 0, 0,                          // rows, cols
      0x00, 0x00, 0x00, 0x3F,                          // 0.5f
      1, 0, 0, 0, 1, 0, 0, 0,                          // index length, sign length
      0xCD, 0x02};
  CHECK(b == expect);
}

TEST_CASE("write then read reproduces payloads and matrices") {
  for (PackFormat f : {PackFormat::I2S, PackFormat::TL1, PackFormat::TL2}) {
    const TpkFile file = sample(f, static_cast<std::uint64_t>(f));
    const auto bytes = serialize(file);
    const TpkFile back = parse_tpk(bytes);
    CHECK(back.format == f);
    REQUIRE(back.matrices.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.matrices[i].name == file.matrices[i].name);
      CHECK(unpack(back.matrices[i].matrix) == unpack(file.matrices[i].matrix));
    }
    CHECK(serialize(back) == bytes);
    CHECK(back.payload_bytes() == file.payload_bytes());
  }
}

TEST_CASE("bits per weight") {
  std::mt19937_64 rng(2);
  TpkFile f;
  f.format = PackFormat::TL2;
  f.matrices.push_back({"w", pack(PackFormat::TL2, oracle::random_matrix(rng, 48, 48))});
  CHECK(f.bits_per_weight() == doctest::Approx(5.0 / 3.0));
  f.format = PackFormat::I2S;
  f.matrices[0].matrix = pack(PackFormat::I2S, oracle::random_matrix(rng, 48, 48));
  CHECK(f.bits_per_weight() == 2.0);
}

TEST_CASE("structural corruption names the offending offset") {
  const auto good = serialize(sample(PackFormat::TL1, 3));
  CHECK_THROWS_AS(parse_tpk(std::vector<std::uint8_t>{}), TpkError);

  auto b = good;
  b[0] = 'X';
  CHECK(offset_of(b) == 0);
  b = good;
  b[4] = 2;
  CHECK(offset_of(b) == 4);
  b = good;
  b[6] = 9;
  CHECK(offset_of(b) == 6);
  b = good;
  b[6] = 0;
  CHECK(offset_of(b) == 6);

  // First matrix: name length at 11, name "wq" at 15, rows at 17.
  b = good;
  std::memset(&b[17], 0, 4);
  CHECK(offset_of(b) == 17);
  b = good;
  const float bad_scale = -1.0f;
  std::memcpy(&b[25], &bad_scale, 4);
  CHECK(offset_of(b) == 25);
  b = good;
  CHECK(le32(b, 29) == 5 * layout::tl1_row_bytes(13));
  b[29] += 1;
  CHECK(offset_of(b) == 29);

  b = good;
  b.push_back(0);
  CHECK(offset_of(b) == good.size());
  b = good;
  b.pop_back();
  CHECK_THROWS_AS(parse_tpk(b), TpkError);
  b = good;
  b[11] = 0xFF;  // name length runs past the end
  CHECK_THROWS_AS(parse_tpk(b), TpkError);
}

TEST_CASE("bad TL1 nibble names matrix, row and offset") {
  std::mt19937_64 rng(4);
  TpkFile f;
  f.format = PackFormat::TL1;
  f.matrices.push_back({"w", pack(PackFormat::TL1, oracle::random_matrix(rng, 6, 10))});
  auto b = serialize(f);
  const std::size_t payload = b.size() - 6 * layout::tl1_row_bytes(10);
  const std::size_t at = payload + 3 * layout::tl1_row_bytes(10) + 1;
  b[at] = static_cast<std::uint8_t>(b[at] | 0xF0);
  try {
    parse_tpk(b);
    FAIL("expected TpkError");
  } catch (const TpkError& e) {
    CHECK(std::string(e.what()) == "invalid TL1 index at matrix 0 row 3");
    CHECK(e.offset() == at);
  }
}

TEST_CASE("TL2 sign-plane corruption points into the sign plane") {
  TpkFile f;
  f.format = PackFormat::TL2;
  f.matrices.push_back({"z", pack(PackFormat::TL2, TernaryMatrix(TernaryValues::Zero(2, 12), 1.0f))});
  auto b = serialize(f);
  const std::size_t sign_start = b.size() - 2 * layout::tl2_sign_row_bytes(12);
  b[sign_start + 1] = 0x01;
  try {
    parse_tpk(b);
    FAIL("expected TpkError");
  } catch (const TpkError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    CHECK(e.offset() == sign_start + 1);
  }
}

TEST_CASE("mixed formats are refused on write") {
  std::mt19937_64 rng(5);
  TpkFile f;
  f.format = PackFormat::I2S;
  f.matrices.push_back({"w", pack(PackFormat::TL1, oracle::random_matrix(rng, 2, 2))});
  CHECK_THROWS_AS(serialize(f), Error);
}

}  // TEST_SUITE
