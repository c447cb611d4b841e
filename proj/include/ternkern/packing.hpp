#pragma once

// Bit-exact packed weight formats.
//
//   I2_S  2 bits per weight, code = w + 1 (-1 -> 00, 0 -> 01, +1 -> 10).
//         Weight j of a 4-weight group sits in bits [2j, 2j+1].
//   TL1   4-bit index per weight pair, index = 3(w0+1) + (w1+1) in [0, 8].
//         Pair j of a byte sits in bits [4j, 4j+3].
//   TL2   5 bits per weight triple, split into two planes: a 4-bit index
//         nibble (two per byte) and a sign bit (eight per byte, bit j of
//         sign byte k belongs to triple 8k+j). With
//         d = 9(w0+1) + 3(w1+1) + (w2+1) - 13, sign = d < 0 and index = |d|.
//
// Every row starts on a fresh byte in every plane. Columns are padded with
// zero weights to a multiple of 4 (I2_S), 2 (TL1) or 6 (TL2).

#include "ternkern/core.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace ternkern {

enum class PackFormat : std::uint8_t { I2S = 1, TL1 = 2, TL2 = 3 };

const char* to_string(PackFormat f);

namespace layout {
constexpr std::size_t round_up(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }

constexpr std::size_t i2s_padded_cols(std::size_t cols) { return round_up(cols, 4); }
constexpr std::size_t i2s_row_bytes(std::size_t cols) { return i2s_padded_cols(cols) / 4; }

constexpr std::size_t tl1_padded_cols(std::size_t cols) { return round_up(cols, 2); }
constexpr std::size_t tl1_groups(std::size_t cols) { return tl1_padded_cols(cols) / 2; }
constexpr std::size_t tl1_row_bytes(std::size_t cols) { return (tl1_groups(cols) + 1) / 2; }

constexpr std::size_t tl2_padded_cols(std::size_t cols) { return round_up(cols, 6); }
constexpr std::size_t tl2_groups(std::size_t cols) { return tl2_padded_cols(cols) / 3; }
constexpr std::size_t tl2_index_row_bytes(std::size_t cols) { return tl2_padded_cols(cols) / 6; }
constexpr std::size_t tl2_sign_row_bytes(std::size_t cols) { return (tl2_groups(cols) + 7) / 8; }

// Total payload bytes of a rows x cols matrix in the given format.
std::size_t payload_bytes(PackFormat f, std::size_t rows, std::size_t cols);
}  // namespace layout

class PackedI2S {
 public:
  PackedI2S(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bytes, float scale);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t padded_cols() const { return layout::i2s_padded_cols(cols_); }
  std::size_t row_bytes() const { return layout::i2s_row_bytes(cols_); }
  float scale() const { return scale_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  const std::uint8_t* row(std::size_t r) const { return bytes_.data() + r * row_bytes(); }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> bytes_;
  float scale_;
};

class PackedTL1 {
 public:
  PackedTL1(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bytes, float scale);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t padded_cols() const { return layout::tl1_padded_cols(cols_); }
  std::size_t groups() const { return layout::tl1_groups(cols_); }
  std::size_t row_bytes() const { return layout::tl1_row_bytes(cols_); }
  float scale() const { return scale_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  const std::uint8_t* row(std::size_t r) const { return bytes_.data() + r * row_bytes(); }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> bytes_;
  float scale_;
};

class PackedTL2 {
 public:
  PackedTL2(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> index_bytes,
            std::vector<std::uint8_t> sign_bytes, float scale);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t padded_cols() const { return layout::tl2_padded_cols(cols_); }
  std::size_t groups() const { return layout::tl2_groups(cols_); }
  std::size_t index_row_bytes() const { return layout::tl2_index_row_bytes(cols_); }
  std::size_t sign_row_bytes() const { return layout::tl2_sign_row_bytes(cols_); }
  float scale() const { return scale_; }
  const std::vector<std::uint8_t>& index_bytes() const { return index_; }
  const std::vector<std::uint8_t>& sign_bytes() const { return sign_; }
  const std::uint8_t* index_row(std::size_t r) const { return index_.data() + r * index_row_bytes(); }
  const std::uint8_t* sign_row(std::size_t r) const { return sign_.data() + r * sign_row_bytes(); }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> index_;
  std::vector<std::uint8_t> sign_;
  float scale_;
};

// Per-symbol codes.
constexpr std::uint8_t i2s_code(int w) { return static_cast<std::uint8_t>(w + 1); }
constexpr std::uint8_t tl1_index(int w0, int w1) { return static_cast<std::uint8_t>(3 * (w0 + 1) + (w1 + 1)); }
constexpr std::array<std::int8_t, 2> tl1_pair(std::uint8_t index) {
  return {static_cast<std::int8_t>(index / 3 - 1), static_cast<std::int8_t>(index % 3 - 1)};
}

struct Tl2Code {
  bool sign = false;
  std::uint8_t index = 0;
  friend bool operator==(const Tl2Code&, const Tl2Code&) = default;
};

constexpr Tl2Code tl2_code(int w0, int w1, int w2) {
  const int d = 9 * (w0 + 1) + 3 * (w1 + 1) + (w2 + 1) - 13;
  return {d < 0, static_cast<std::uint8_t>(d < 0 ? -d : d)};
}

// Inverse of tl2_code; index must be <= 13.
constexpr std::array<std::int8_t, 3> tl2_pattern(bool sign, std::uint8_t index) {
  const int base = (sign ? -static_cast<int>(index) : static_cast<int>(index)) + 13;
  return {static_cast<std::int8_t>(base / 9 - 1), static_cast<std::int8_t>(base / 3 % 3 - 1),
          static_cast<std::int8_t>(base % 3 - 1)};
}

PackedI2S encode_i2s(const TernaryMatrix& m);
TernaryMatrix decode_i2s(const PackedI2S& p);

PackedTL1 encode_tl1(const TernaryMatrix& m);
TernaryMatrix decode_tl1(const PackedTL1& p);

PackedTL2 encode_tl2(const TernaryMatrix& m);
TernaryMatrix decode_tl2(const PackedTL2& p);

// Full scan for encoding violations; throws DecodeError at the first one.
void validate(const PackedI2S& p);
void validate(const PackedTL1& p);
void validate(const PackedTL2& p);

}  // namespace ternkern
