#pragma once

// TPK1 packed-model container. All integers little-endian.
//
//   offset  size  field
//   0       4     magic "TPK1"
//   4       2     version (1)
//   6       1     format (1 = I2_S, 2 = TL1, 3 = TL2)
//   7       4     matrix count
//   then per matrix:
//           4     name length n
//           n     name bytes
//           4     rows
//           4     cols
//           4     scale (IEEE-754 binary32 bit pattern)
//           4     payload length (TL2: index plane length, then 4 more for the sign plane)
//           ...   payload bytes (TL2: index plane, then sign plane)

#include "ternkern/packing.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ternkern {

inline constexpr std::uint16_t kTpkVersion = 1;

// Malformed container; offset is the file offset of the first bad byte.
class TpkError : public Error {
 public:
  TpkError(const std::string& what, std::size_t offset) : Error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

using PackedMatrix = std::variant<PackedI2S, PackedTL1, PackedTL2>;

struct TpkEntry {
  std::string name;
  PackedMatrix matrix;
};

struct TpkFile {
  PackFormat format = PackFormat::I2S;
  std::vector<TpkEntry> matrices;

  std::uint64_t payload_bytes() const;
  std::uint64_t weight_count() const;
  double bits_per_weight() const;
};

PackedMatrix pack(PackFormat f, const TernaryMatrix& m);
TernaryMatrix unpack(const PackedMatrix& p);
PackFormat format_of(const PackedMatrix& p);

std::vector<std::uint8_t> serialize(const TpkFile& f);
// Validates structure, lengths and every payload code.
TpkFile parse_tpk(std::span<const std::uint8_t> bytes);

void write_tpk(const std::filesystem::path& path, const TpkFile& f);
TpkFile read_tpk(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace ternkern
