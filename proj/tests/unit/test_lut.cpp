#include "doctest.h"
#include "oracles.hpp"
#include "ternkern/lut.hpp"
#include "ternkern/packing.hpp"

using namespace ternkern;

TEST_SUITE("lut") {

TEST_CASE("TL1 table examples") {
  const LutTL1 t = build_lut_tl1(oracle::make_acts({3, -2}));
  REQUIRE(t.groups() == 1);
  CHECK(t.entry(0, tl1_index(1, 1)) == 1);
  CHECK(t.entry(0, 0) == -1);
  CHECK(t.entry(0, 4) == 0);
  CHECK(t.entry(0, 5) == -2);
  const LutTL1 z = build_lut_tl1(oracle::make_acts({0, 0}));
  for (int i = 0; i < 9; ++i) CHECK(z.entry(0, i) == 0);
}

TEST_CASE("TL2 table examples") {
  const LutTL2 t = build_lut_tl2(oracle::make_acts({1, 2, 3}));
  REQUIRE(t.groups() == 1);
  CHECK(t.entry(0, 10) == 4);
  CHECK(t.entry(0, 13) == 6);
  CHECK(t.entry(0, 0) == 0);
  const LutTL2 z = build_lut_tl2(oracle::make_acts({0, 0, 0}));
  for (int i = 0; i < 14; ++i) CHECK(z.entry(0, i) == 0);
}

TEST_CASE("tables require padded activations") {
  CHECK_THROWS_AS(build_lut_tl1(oracle::make_acts({1, 2, 3})), Error);
  CHECK_THROWS_AS(build_lut_tl2(oracle::make_acts({1, 2})), Error);
}

TEST_CASE("entries equal brute-force dot products") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 300; ++t) {
    const std::size_t groups = 1 + t % 9;
    const auto a2 = oracle::random_acts(rng, 2 * groups);
    const LutTL1 l1 = build_lut_tl1(oracle::make_acts(a2));
    for (std::size_t g = 0; g < groups; ++g) {
      for (const auto& row : oracle::kTl1Table) {
        const int idx = oracle::bits_value(row.bits);
        CHECK(l1.entry(g, idx) == row.w0 * a2[2 * g] + row.w1 * a2[2 * g + 1]);
      }
    }
    const auto a3 = oracle::random_acts(rng, 3 * groups);
    const LutTL2 l2 = build_lut_tl2(oracle::make_acts(a3));
    for (std::size_t g = 0; g < groups; ++g) {
      for (int w0 = -1; w0 <= 1; ++w0) {
        for (int w1 = -1; w1 <= 1; ++w1) {
          for (int w2 = -1; w2 <= 1; ++w2) {
            const oracle::Tl2Entry e = oracle::tl2_lex(w0, w1, w2);
            const int dot = w0 * a3[3 * g] + w1 * a3[3 * g + 1] + w2 * a3[3 * g + 2];
            const int looked = e.sign ? -l2.entry(g, e.index) : l2.entry(g, e.index);
            CHECK(looked == dot);
          }
        }
      }
    }
  }
}

TEST_CASE("entry bounds at saturated activations") {
  const LutTL1 l1 = build_lut_tl1(oracle::make_acts({127, 127, -127, 127}));
  const LutTL2 l2 = build_lut_tl2(oracle::make_acts({-127, -127, -127}));
  CHECK(l1.entries().cwiseAbs().maxCoeff() == 254);
  CHECK(l2.entries().cwiseAbs().maxCoeff() == 381);
}

TEST_CASE("byte planes mirror entries") {
  std::mt19937_64 rng(5);
  const auto a = oracle::random_acts(rng, 3 * 40);
  LutTL2 t = build_lut_tl2(oracle::make_acts(a));
  CHECK(t.plane_groups() == 64);
  CHECK(t.table_bytes() == 40 * 14 * 2);
  for (std::size_t g = 0; g < t.plane_groups(); ++g) {
    const std::uint8_t* p = t.plane(g);
    for (int i = 0; i < 16; ++i) {
      const int expect = g < t.groups() && i < 14 ? t.entry(g, i) : 0;
      CHECK(static_cast<std::int16_t>(p[i] | (p[16 + i] << 8)) == expect);
    }
  }
  t.set_entry(3, 7, -300);
  CHECK(t.entry(3, 7) == -300);
  CHECK(static_cast<std::int16_t>(t.plane(3)[7] | (t.plane(3)[23] << 8)) == -300);
}

}  // TEST_SUITE
