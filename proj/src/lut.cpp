#include "ternkern/lut.hpp"

#include "ternkern/packing.hpp"

#include <cassert>
#include <cstdlib>

namespace ternkern {

LutTL1 build_lut_tl1(const QuantizedActivations& a) {
  const std::size_t n = a.padded_len();
  if (n < 2 || n % 2 != 0) throw DimensionError("TL1 table needs activations padded to a multiple of 2");
  LutTL1::Entries e(static_cast<Eigen::Index>(n / 2), LutTL1::kEntries);
  for (std::size_t g = 0; g < n / 2; ++g) {
    const int a0 = a.data[static_cast<Eigen::Index>(2 * g)];
    const int a1 = a.data[static_cast<Eigen::Index>(2 * g + 1)];
    for (int i = 0; i < LutTL1::kEntries; ++i) {
      const auto w = tl1_pair(static_cast<std::uint8_t>(i));
      const int v = w[0] * a0 + w[1] * a1;
      assert(std::abs(v) <= 254);
      e(static_cast<Eigen::Index>(g), i) = static_cast<std::int16_t>(v);
    }
  }
  return LutTL1(std::move(e));
}

LutTL2 build_lut_tl2(const QuantizedActivations& a) {
  const std::size_t n = a.padded_len();
  if (n < 3 || n % 3 != 0) throw DimensionError("TL2 table needs activations padded to a multiple of 3");
  LutTL2::Entries e(static_cast<Eigen::Index>(n / 3), LutTL2::kEntries);
  for (std::size_t g = 0; g < n / 3; ++g) {
    const int a0 = a.data[static_cast<Eigen::Index>(3 * g)];
    const int a1 = a.data[static_cast<Eigen::Index>(3 * g + 1)];
    const int a2 = a.data[static_cast<Eigen::Index>(3 * g + 2)];
    for (int i = 0; i < LutTL2::kEntries; ++i) {
      const auto w = tl2_pattern(false, static_cast<std::uint8_t>(i));
      const int v = w[0] * a0 + w[1] * a1 + w[2] * a2;
      assert(std::abs(v) <= 381);
      e(static_cast<Eigen::Index>(g), i) = static_cast<std::int16_t>(v);
    }
  }
  return LutTL2(std::move(e));
}

}  // namespace ternkern
