#pragma once

// Reference computations the tests hold the library against. Nothing here
// calls into the code under test except for its plain data types.

#include "ternkern/core.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// I2_S code chart: weight -> 2-bit code, written MSB first.
inline const std::map<int, std::string> kI2sCodes = {{-1, "00"}, {0, "01"}, {1, "10"}};

// TL1 index chart, all nine rows: (w0, w1) -> 4-bit index, MSB first.
struct Tl1Row {
  int w0, w1;
  const char* bits;
};
inline constexpr std::array<Tl1Row, 9> kTl1Table = {{
    {-1, -1, "0000"}, {-1, 0, "0001"}, {-1, 1, "0010"}, {0, -1, "0011"}, {0, 0, "0100"},
    {0, 1, "0101"},   {1, -1, "0110"}, {1, 0, "0111"},  {1, 1, "1000"},
}};

// TL2 reference rows: (w0, w1, w2) -> sign bit, 4-bit index.
struct Tl2Row {
  int w0, w1, w2;
  int sign;
  const char* bits;
};
inline constexpr std::array<Tl2Row, 9> kTl2ReferenceRows = {{
    {-1, -1, -1, 1, "1101"},
    {-1, -1, 0, 1, "1100"},
    {-1, -1, 1, 1, "1011"},
    {-1, 0, -1, 1, "1010"},
    {0, 0, 0, 0, "0000"},
    {1, 0, 1, 0, "1010"},
    {1, 1, -1, 0, "1011"},
    {1, 1, 0, 0, "1100"},
    {1, 1, 1, 0, "1101"},
}};

inline int bits_value(const std::string& msb_first) {
  int v = 0;
  for (char c : msb_first) v = 2 * v + (c == '1');
  return v;
}

// Full 27-row TL2 table: the i-th pattern in lexicographic order (w0
// slowest, -1 < 0 < 1) has signed code i - 13.
struct Tl2Entry {
  int sign;
  int index;
};
inline Tl2Entry tl2_lex(int w0, int w1, int w2) {
  int ordinal = 0;
  for (int a = -1; a <= 1; ++a) {
    for (int b = -1; b <= 1; ++b) {
      for (int c = -1; c <= 1; ++c) {
        if (a == w0 && b == w1 && c == w2) {
          const int d = ordinal - 13;
          return {d < 0 ? 1 : 0, d < 0 ? -d : d};
        }
        ++ordinal;
      }
    }
  }
  return {-1, -1};
}

inline int tl1_lookup(int w0, int w1) {
  for (const auto& r : kTl1Table) {
    if (r.w0 == w0 && r.w1 == w1) return bits_value(r.bits);
  }
  return -1;
}

// Packs a bit stream (bit k of the stream is bit k % 8 of byte k / 8).
inline std::vector<std::uint8_t> bytes_from_bits(const std::vector<int>& bits) {
  std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    if (bits[k]) out[k / 8] = static_cast<std::uint8_t>(out[k / 8] | (1u << (k % 8)));
  }
  return out;
}

// Appends a field given MSB first, so that its LSB lands at the lower bit position.
inline void push_field(std::vector<int>& bits, const std::string& msb_first) {
  for (auto it = msb_first.rbegin(); it != msb_first.rend(); ++it) bits.push_back(*it == '1');
}

inline std::string nibble_bits(int v) {
  std::string s;
  for (int b = 3; b >= 0; --b) s.push_back(((v >> b) & 1) ? '1' : '0');
  return s;
}

inline std::vector<int> padded_row(const ternkern::TernaryMatrix& m, std::size_t r, std::size_t multiple) {
  std::vector<int> w;
  for (std::size_t c = 0; c < m.cols(); ++c) w.push_back(m(r, c));
  while (w.size() % multiple) w.push_back(0);
  return w;
}

inline std::vector<std::uint8_t> i2s_payload(const ternkern::TernaryMatrix& m) {
  std::vector<std::uint8_t> out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<int> bits;
    for (int w : padded_row(m, r, 4)) push_field(bits, kI2sCodes.at(w));
    const auto row = bytes_from_bits(bits);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

inline std::vector<std::uint8_t> tl1_payload(const ternkern::TernaryMatrix& m) {
  std::vector<std::uint8_t> out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto w = padded_row(m, r, 2);
    std::vector<int> bits;
    for (std::size_t g = 0; g < w.size() / 2; ++g) push_field(bits, nibble_bits(tl1_lookup(w[2 * g], w[2 * g + 1])));
    if ((w.size() / 2) % 2) push_field(bits, nibble_bits(tl1_lookup(0, 0)));
    const auto row = bytes_from_bits(bits);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

struct Tl2Payload {
  std::vector<std::uint8_t> index;
  std::vector<std::uint8_t> sign;
};

inline Tl2Payload tl2_payload(const ternkern::TernaryMatrix& m) {
  Tl2Payload out;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto w = padded_row(m, r, 6);
    std::vector<int> index_bits;
    std::vector<int> sign_bits;
    for (std::size_t g = 0; g < w.size() / 3; ++g) {
      const Tl2Entry e = tl2_lex(w[3 * g], w[3 * g + 1], w[3 * g + 2]);
      push_field(index_bits, nibble_bits(e.index));
      sign_bits.push_back(e.sign);
    }
    const auto ib = bytes_from_bits(index_bits);
    const auto sb = bytes_from_bits(sign_bits);
    out.index.insert(out.index.end(), ib.begin(), ib.end());
    out.sign.insert(out.sign.end(), sb.begin(), sb.end());
  }
  return out;
}

// Plain integer GEMV.
inline std::vector<std::int64_t> gemv(const ternkern::TernaryMatrix& m, const std::vector<int>& a) {
  std::vector<std::int64_t> out(m.rows(), 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[r] += static_cast<std::int64_t>(m(r, c)) * a[c];
  }
  return out;
}

inline std::vector<int> to_ints(const ternkern::QuantizedActivations& q) {
  std::vector<int> v;
  for (Eigen::Index i = 0; i < q.data.size(); ++i) v.push_back(q.data[i]);
  return v;
}

inline ternkern::QuantizedActivations make_acts(const std::vector<int>& values, float scale = 1.0f) {
  ternkern::QuantizedActivations q;
  q.original_len = values.size();
  q.scale = scale;
  q.data.resize(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) q.data[static_cast<Eigen::Index>(i)] = static_cast<std::int8_t>(values[i]);
  return q;
}

inline ternkern::TernaryMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                             float scale = 1.0f) {
  std::uniform_int_distribution<int> d(-1, 1);
  ternkern::TernaryValues v(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = static_cast<std::int8_t>(d(rng));
  return ternkern::TernaryMatrix(std::move(v), scale);
}

inline std::vector<int> random_acts(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> d(-127, 127);
  std::vector<int> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// MACs per token of the twelve configs, summed shape by shape offline.
struct FrozenMacs {
  const char* name;
  std::uint64_t macs;
};
inline constexpr std::array<FrozenMacs, 12> kMacsPerToken = {{
    {"125M", 103809024ull},      {"350M", 327155712ull},      {"700M", 679477248ull},
    {"1B", 931135488ull},        {"1.5B", 1453326336ull},     {"2.5B", 2378956800ull},
    {"3.8B", 3680501760ull},     {"7B", 6878658560ull},       {"13B", 12687769600ull},
    {"30B", 30261903360ull},     {"70B", 69793218560ull},     {"100B", 99958652928ull},
}};

// Benchmark configs: name, hidden, intermediate, layers, heads.
struct ConfigRow {
  const char* name;
  std::size_t hidden, intermediate, layers, heads;
};
inline constexpr std::array<ConfigRow, 12> kConfigs = {{
    {"125M", 768, 3072, 11, 12},   {"350M", 1024, 3072, 24, 16},  {"700M", 1536, 4096, 24, 16},
    {"1B", 2048, 3584, 24, 32},    {"1.5B", 1536, 9216, 28, 32},  {"2.5B", 2560, 6912, 30, 20},
    {"3.8B", 3840, 8192, 24, 32},  {"7B", 4096, 12032, 32, 32},   {"13B", 5120, 13824, 40, 40},
    {"30B", 6656, 16384, 60, 52},  {"70B", 8192, 24576, 80, 64},  {"100B", 8192, 45568, 72, 64},
}};

// Brute-force product count: one MAC per weight of each of the seven projections.
inline std::uint64_t brute_force_macs(const ConfigRow& c) {
  const std::size_t shapes[7][2] = {{c.hidden, c.hidden},       {c.hidden, c.hidden},       {c.hidden, c.hidden},
                                    {c.hidden, c.hidden},       {c.intermediate, c.hidden}, {c.intermediate, c.hidden},
                                    {c.hidden, c.intermediate}};
  std::uint64_t per_layer = 0;
  for (const auto& s : shapes) {
    for (std::size_t r = 0; r < s[0]; ++r) per_layer += s[1];
  }
  return per_layer * c.layers;
}

}  // namespace oracle
