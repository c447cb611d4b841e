#pragma once

// Per-activation-group lookup tables of partial dot products.
//
// A TL1 table holds, for every pair of activations, the 9 values
// w0*a[2g] + w1*a[2g+1], addressed by tl1_index(w0, w1). A TL2 table holds,
// for every activation triple, the 14 dot products of the sign-0 patterns,
// addressed by the TL2 index; sign-1 patterns are their negations.
//
// Alongside the entries each table keeps a byte-split copy (16 low bytes and
// 16 high bytes per group, zero-filled past the last group up to a multiple
// of 32 groups) for the byte-shuffle kernels.

#include "ternkern/core.hpp"

#include <cstdint>
#include <vector>

namespace ternkern {

template <int EntryCount>
class Lut {
 public:
  static constexpr int kEntries = EntryCount;
  static constexpr std::size_t kPlaneGroups = 32;
  using Entries = Eigen::Matrix<std::int16_t, Eigen::Dynamic, EntryCount, Eigen::RowMajor>;

  explicit Lut(Entries entries) : entries_(std::move(entries)) { rebuild_planes(); }

  std::size_t groups() const { return static_cast<std::size_t>(entries_.rows()); }
  const Entries& entries() const { return entries_; }
  std::int16_t entry(std::size_t g, int i) const { return entries_(static_cast<Eigen::Index>(g), i); }

  // Overwrites one entry; used by fault-injection fixtures.
  void set_entry(std::size_t g, int i, std::int16_t v) {
    entries_(static_cast<Eigen::Index>(g), i) = v;
    std::uint8_t* p = planes_.data() + g * 32;
    p[i] = static_cast<std::uint8_t>(static_cast<std::uint16_t>(v) & 0xFF);
    p[16 + i] = static_cast<std::uint8_t>(static_cast<std::uint16_t>(v) >> 8);
  }

  // 32 bytes for group g: low bytes of entries 0..15 then high bytes.
  const std::uint8_t* plane(std::size_t g) const { return planes_.data() + g * 32; }
  std::size_t plane_groups() const { return planes_.size() / 32; }

  std::size_t table_bytes() const { return static_cast<std::size_t>(entries_.size()) * sizeof(std::int16_t); }

 private:
  void rebuild_planes() {
    const std::size_t padded = (groups() + kPlaneGroups - 1) / kPlaneGroups * kPlaneGroups;
    planes_.assign(padded * 32, 0);
    for (std::size_t g = 0; g < groups(); ++g) {
      for (int i = 0; i < EntryCount; ++i) {
        const auto v = static_cast<std::uint16_t>(entry(g, i));
        planes_[g * 32 + i] = static_cast<std::uint8_t>(v & 0xFF);
        planes_[g * 32 + 16 + i] = static_cast<std::uint8_t>(v >> 8);
      }
    }
  }

  Entries entries_;
  std::vector<std::uint8_t> planes_;
};

using LutTL1 = Lut<9>;
using LutTL2 = Lut<14>;

// Activations must be padded to a multiple of 2 (TL1) or 3 (TL2).
LutTL1 build_lut_tl1(const QuantizedActivations& a);
LutTL2 build_lut_tl2(const QuantizedActivations& a);

}  // namespace ternkern
