#include "ternkern/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>

#if defined(__SSSE3__) && defined(__SSE4_1__) && !defined(TERNKERN_NO_SIMD)
#include <immintrin.h>
#define TERNKERN_SIMD 1
#endif

namespace ternkern {

const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::RefInt32: return "REF_INT32";
    case KernelKind::RefF32: return "REF_F32";
    case KernelKind::I2S: return "I2_S";
    case KernelKind::TL1: return "TL1";
    case KernelKind::TL2: return "TL2";
  }
  return "?";
}

std::optional<KernelKind> parse_kernel(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ref_int32" || s == "int32" || s == "ref") return KernelKind::RefInt32;
  if (s == "ref_f32" || s == "f32" || s == "fp32") return KernelKind::RefF32;
  if (s == "i2_s" || s == "i2s") return KernelKind::I2S;
  if (s == "tl1") return KernelKind::TL1;
  if (s == "tl2") return KernelKind::TL2;
  return std::nullopt;
}

PackFormat format_of(KernelKind k) {
  switch (k) {
    case KernelKind::I2S: return PackFormat::I2S;
    case KernelKind::TL1: return PackFormat::TL1;
    case KernelKind::TL2: return PackFormat::TL2;
    default: throw Error(std::string(to_string(k)) + " has no packed format");
  }
}

KernelKind kernel_for(PackFormat f) {
  switch (f) {
    case PackFormat::I2S: return KernelKind::I2S;
    case PackFormat::TL1: return KernelKind::TL1;
    case PackFormat::TL2: return KernelKind::TL2;
  }
  throw Error("unknown packed format");
}

int activation_padding(KernelKind k) {
  switch (k) {
    case KernelKind::I2S: return 4;
    case KernelKind::TL1: return 2;
    case KernelKind::TL2: return 3;
    default: return 1;
  }
}

namespace {

void check_activations(std::size_t cols, const QuantizedActivations& a) {
  if (a.original_len != cols || a.padded_len() < cols) throw DimensionError("dimension mismatch");
}

template <class Lut>
void check_lut(std::size_t cols, std::size_t group_size, std::size_t weight_groups, const Lut& lut) {
  const std::size_t needed = (cols + group_size - 1) / group_size;
  if (lut.groups() < needed || lut.groups() > weight_groups + 1) throw DimensionError("group-count mismatch");
}

inline std::int16_t add16(std::int16_t partial, int v) {
  return static_cast<std::int16_t>(partial + v);
}

// Scalar TL1 over rows [r0, r1); Checked tracks the peak partial magnitude.
template <bool Checked>
void tl1_rows_impl(const PackedTL1& p, const LutTL1& lut, std::size_t r0, std::size_t r1, std::int32_t* acc,
                   int* peak) {
  const std::size_t groups = std::min(p.groups(), lut.groups());
  const std::int16_t* table = lut.entries().data();
  const std::size_t rb = p.row_bytes();
  for (std::size_t r = r0; r < r1; ++r) {
    const std::uint8_t* row = p.row(r);
    std::int32_t total = 0;
    std::int16_t partial = 0;
    for (std::size_t g = 0; g < groups; ++g) {
      const unsigned nib = (row[g / 2] >> (4 * (g % 2))) & 0x0F;
      if (nib > 8) throw DecodeError("invalid TL1 index", r, r * rb + g / 2);
      const int v = table[g * LutTL1::kEntries + nib];
      if constexpr (Checked) {
        const int wide = partial + v;
        *peak = std::max(*peak, std::abs(wide));
        if (wide > 32767 || wide < -32767) throw Error("TL1 16-bit partial overflow");
      }
      partial = add16(partial, v);
      if ((g + 1) % kWideningPeriod == 0) {
        total += partial;
        partial = 0;
      }
    }
    acc[r - r0] = total + partial;
  }
}

template <bool Checked>
void tl2_rows_impl(const PackedTL2& p, const LutTL2& lut, std::size_t r0, std::size_t r1, std::int32_t* acc,
                   int* peak) {
  const std::size_t groups = std::min(p.groups(), lut.groups());
  const std::int16_t* table = lut.entries().data();
  for (std::size_t r = r0; r < r1; ++r) {
    const std::uint8_t* idx = p.index_row(r);
    const std::uint8_t* sgn = p.sign_row(r);
    std::int32_t total = 0;
    std::int16_t partial = 0;
    for (std::size_t g = 0; g < groups; ++g) {
      const unsigned nib = (idx[g / 2] >> (4 * (g % 2))) & 0x0F;
      const bool s = (sgn[g / 8] >> (g % 8)) & 1;
      if (nib > 13) throw DecodeError("invalid TL2 index", r, r * p.index_row_bytes() + g / 2);
      if (s && nib == 0) throw DecodeError("non-canonical zero", r, r * p.sign_row_bytes() + g / 8, 1);
      const int e = table[g * LutTL2::kEntries + nib];
      const int v = s ? -e : e;
      if constexpr (Checked) {
        const int wide = partial + v;
        *peak = std::max(*peak, std::abs(wide));
        if (wide > 32767 || wide < -32767) throw Error("TL2 16-bit partial overflow");
      }
      partial = add16(partial, v);
      if ((g + 1) % kWideningPeriod == 0) {
        total += partial;
        partial = 0;
      }
    }
    acc[r - r0] = total + partial;
  }
}

#ifdef TERNKERN_SIMD

// In-register transpose of 16 rows of 16 bytes; lane i of out[k] is byte k of row i.
inline void transpose16(__m128i r[16]) {
  __m128i t[16];
  for (int s = 0; s < 4; ++s) {
    for (int i = 0; i < 8; ++i) {
      t[2 * i] = _mm_unpacklo_epi8(r[i], r[i + 8]);
      t[2 * i + 1] = _mm_unpackhi_epi8(r[i], r[i + 8]);
    }
    for (int i = 0; i < 16; ++i) r[i] = t[i];
  }
}

// Looks up one group's int16 entries for 16 row lanes; lo holds rows 0-7, hi rows 8-15.
inline void lookup16(const std::uint8_t* plane, __m128i nib, __m128i& lo, __m128i& hi) {
  const __m128i tlo = _mm_loadu_si128(reinterpret_cast<const __m128i*>(plane));
  const __m128i thi = _mm_loadu_si128(reinterpret_cast<const __m128i*>(plane + 16));
  const __m128i vl = _mm_shuffle_epi8(tlo, nib);
  const __m128i vh = _mm_shuffle_epi8(thi, nib);
  lo = _mm_unpacklo_epi8(vl, vh);
  hi = _mm_unpackhi_epi8(vl, vh);
}

inline void widen_into(__m128i acc[4], __m128i plo, __m128i phi) {
  acc[0] = _mm_add_epi32(acc[0], _mm_cvtepi16_epi32(plo));
  acc[1] = _mm_add_epi32(acc[1], _mm_cvtepi16_epi32(_mm_srli_si128(plo, 8)));
  acc[2] = _mm_add_epi32(acc[2], _mm_cvtepi16_epi32(phi));
  acc[3] = _mm_add_epi32(acc[3], _mm_cvtepi16_epi32(_mm_srli_si128(phi, 8)));
}

// 16-row tile of TL1 rows starting at r. Returns false if a nibble > 8 was seen.
bool tl1_tile(const PackedTL1& p, const LutTL1& lut, std::size_t r, std::int32_t* out) {
  const std::size_t rb = p.row_bytes();
  const std::size_t blocks = rb / 16;
  const __m128i low_mask = _mm_set1_epi8(0x0F);
  __m128i acc[4] = {_mm_setzero_si128(), _mm_setzero_si128(), _mm_setzero_si128(), _mm_setzero_si128()};
  __m128i max_nib = _mm_setzero_si128();

  // Each block is 32 groups, so two blocks form one widening period.
  for (std::size_t b0 = 0; b0 < blocks; b0 += 2) {
    __m128i plo = _mm_setzero_si128();
    __m128i phi = _mm_setzero_si128();
    for (std::size_t b = b0; b < std::min(blocks, b0 + 2); ++b) {
      __m128i t[16];
      for (int i = 0; i < 16; ++i) {
        t[i] = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p.row(r + i) + 16 * b));
      }
      transpose16(t);
      for (int k = 0; k < 16; ++k) {
        const std::size_t g = 2 * (16 * b + k);
        const __m128i n0 = _mm_and_si128(t[k], low_mask);
        const __m128i n1 = _mm_and_si128(_mm_srli_epi16(t[k], 4), low_mask);
        max_nib = _mm_max_epu8(max_nib, _mm_max_epu8(n0, n1));
        __m128i lo, hi;
        lookup16(lut.plane(g), n0, lo, hi);
        plo = _mm_add_epi16(plo, lo);
        phi = _mm_add_epi16(phi, hi);
        lookup16(lut.plane(g + 1), n1, lo, hi);
        plo = _mm_add_epi16(plo, lo);
        phi = _mm_add_epi16(phi, hi);
      }
    }
    widen_into(acc, plo, phi);
  }
  alignas(16) std::uint8_t nibs[16];
  _mm_store_si128(reinterpret_cast<__m128i*>(nibs), max_nib);
  for (int i = 0; i < 16; ++i) {
    if (nibs[i] > 8) return false;
  }
  for (int q = 0; q < 4; ++q) _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 4 * q), acc[q]);

  // Remaining bytes of each row.
  const std::size_t g_begin = 32 * blocks;
  const std::size_t groups = std::min(p.groups(), lut.groups());
  if (g_begin < groups) {
    const std::int16_t* table = lut.entries().data();
    for (int i = 0; i < 16; ++i) {
      const std::uint8_t* row = p.row(r + i);
      std::int16_t partial = 0;
      for (std::size_t g = g_begin; g < groups; ++g) {
        const unsigned nib = (row[g / 2] >> (4 * (g % 2))) & 0x0F;
        if (nib > 8) return false;
        partial = add16(partial, table[g * LutTL1::kEntries + nib]);
      }
      out[i] += partial;
    }
  }
  return true;
}

// Loads up to 8 sign bytes per row of a 64-group chunk, zero past the row end.
inline __m128i load_signs(const std::uint8_t* row, std::size_t offset, std::size_t row_bytes) {
  std::uint64_t v = 0;
  if (offset < row_bytes) std::memcpy(&v, row + offset, std::min<std::size_t>(8, row_bytes - offset));
  return _mm_cvtsi64_si128(static_cast<long long>(v));
}

bool tl2_tile(const PackedTL2& p, const LutTL2& lut, std::size_t r, std::int32_t* out) {
  const std::size_t ib = p.index_row_bytes();
  const std::size_t sb = p.sign_row_bytes();
  const std::size_t blocks = ib / 16;
  const __m128i low_mask = _mm_set1_epi8(0x0F);
  const __m128i zero = _mm_setzero_si128();
  __m128i acc[4] = {zero, zero, zero, zero};
  __m128i max_nib = zero;
  __m128i bad_zero = zero;

  for (std::size_t b0 = 0; b0 < blocks; b0 += 2) {
    __m128i s[16];
    for (int i = 0; i < 16; ++i) s[i] = load_signs(p.sign_row(r + i), 8 * (b0 / 2), sb);
    transpose16(s);
    __m128i plo = zero;
    __m128i phi = zero;
    for (std::size_t b = b0; b < std::min(blocks, b0 + 2); ++b) {
      __m128i t[16];
      for (int i = 0; i < 16; ++i) {
        t[i] = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p.index_row(r + i) + 16 * b));
      }
      transpose16(t);
      for (int k = 0; k < 16; ++k) {
        const __m128i nib2[2] = {_mm_and_si128(t[k], low_mask),
                                 _mm_and_si128(_mm_srli_epi16(t[k], 4), low_mask)};
        for (int h = 0; h < 2; ++h) {
          const std::size_t local = 32 * (b - b0) + 2 * k + h;  // group within the 64-group chunk
          const std::size_t g = 64 * (b0 / 2) + local;
          const __m128i bit = _mm_set1_epi8(static_cast<char>(1u << (local % 8)));
          const __m128i m8 = _mm_cmpeq_epi8(_mm_and_si128(s[local / 8], bit), bit);
          max_nib = _mm_max_epu8(max_nib, nib2[h]);
          bad_zero = _mm_or_si128(bad_zero, _mm_and_si128(m8, _mm_cmpeq_epi8(nib2[h], zero)));
          __m128i lo, hi;
          lookup16(lut.plane(g), nib2[h], lo, hi);
          const __m128i mlo = _mm_unpacklo_epi8(m8, m8);
          const __m128i mhi = _mm_unpackhi_epi8(m8, m8);
          plo = _mm_add_epi16(plo, _mm_sub_epi16(_mm_xor_si128(lo, mlo), mlo));
          phi = _mm_add_epi16(phi, _mm_sub_epi16(_mm_xor_si128(hi, mhi), mhi));
        }
      }
    }
    widen_into(acc, plo, phi);
  }
  alignas(16) std::uint8_t nibs[16];
  _mm_store_si128(reinterpret_cast<__m128i*>(nibs), max_nib);
  for (int i = 0; i < 16; ++i) {
    if (nibs[i] > 13) return false;
  }
  if (_mm_movemask_epi8(bad_zero) != 0) return false;
  for (int q = 0; q < 4; ++q) _mm_storeu_si128(reinterpret_cast<__m128i*>(out + 4 * q), acc[q]);

  const std::size_t g_begin = 32 * blocks;
  const std::size_t groups = std::min(p.groups(), lut.groups());
  if (g_begin < groups) {
    const std::int16_t* table = lut.entries().data();
    for (int i = 0; i < 16; ++i) {
      const std::uint8_t* idx = p.index_row(r + i);
      const std::uint8_t* sgn = p.sign_row(r + i);
      std::int16_t partial = 0;
      for (std::size_t g = g_begin; g < groups; ++g) {
        const unsigned nib = (idx[g / 2] >> (4 * (g % 2))) & 0x0F;
        const bool neg = (sgn[g / 8] >> (g % 8)) & 1;
        if (nib > 13 || (neg && nib == 0)) return false;
        const int e = table[g * LutTL2::kEntries + nib];
        partial = add16(partial, neg ? -e : e);
      }
      out[i] += partial;
    }
  }
  return true;
}

inline std::int32_t hsum_epi32(__m128i v) {
  v = _mm_add_epi32(v, _mm_shuffle_epi32(v, _MM_SHUFFLE(1, 0, 3, 2)));
  v = _mm_add_epi32(v, _mm_shuffle_epi32(v, _MM_SHUFFLE(2, 3, 0, 1)));
  return _mm_cvtsi128_si32(v);
}

// Multiply-then-add over 64-weight blocks: sum((code) * a) - sum(a).
void i2s_rows_simd(const PackedI2S& p, const QuantizedActivations& a, const detail::I2SOperand& op,
                   std::size_t r0, std::size_t r1, std::int32_t* acc) {
  const std::size_t rb = p.row_bytes();
  const std::size_t blocks = rb / 16;
  const std::int32_t block_sum = op.prefix64[blocks];
  const __m128i two_bits = _mm_set1_epi8(0x03);
  const __m128i odd_bits = _mm_set1_epi8(0x55);
  const __m128i ones16 = _mm_set1_epi16(1);
  const std::int8_t* perm = op.perm.data();
  const std::int8_t* act = a.data.data();
  const std::size_t n_act = a.padded_len();
  for (std::size_t r = r0; r < r1; ++r) {
    const std::uint8_t* row = p.row(r);
    __m128i sum = _mm_setzero_si128();
    __m128i bad = _mm_setzero_si128();
    for (std::size_t b = 0; b < blocks; ++b) {
      const __m128i w = _mm_loadu_si128(reinterpret_cast<const __m128i*>(row + 16 * b));
      bad = _mm_or_si128(bad, _mm_and_si128(_mm_and_si128(w, _mm_srli_epi16(w, 1)), odd_bits));
      const std::int8_t* pa = perm + 64 * b;
      __m128i s16 = _mm_maddubs_epi16(_mm_and_si128(w, two_bits),
                                      _mm_loadu_si128(reinterpret_cast<const __m128i*>(pa)));
      s16 = _mm_add_epi16(s16, _mm_maddubs_epi16(_mm_and_si128(_mm_srli_epi16(w, 2), two_bits),
                                                 _mm_loadu_si128(reinterpret_cast<const __m128i*>(pa + 16))));
      s16 = _mm_add_epi16(s16, _mm_maddubs_epi16(_mm_and_si128(_mm_srli_epi16(w, 4), two_bits),
                                                 _mm_loadu_si128(reinterpret_cast<const __m128i*>(pa + 32))));
      s16 = _mm_add_epi16(s16, _mm_maddubs_epi16(_mm_and_si128(_mm_srli_epi16(w, 6), two_bits),
                                                 _mm_loadu_si128(reinterpret_cast<const __m128i*>(pa + 48))));
      sum = _mm_add_epi32(sum, _mm_madd_epi16(s16, ones16));
    }
    if (_mm_movemask_epi8(_mm_cmpeq_epi8(bad, _mm_setzero_si128())) != 0xFFFF) {
      throw DecodeError("invalid I2_S code", r, r * rb);
    }
    std::int32_t total = hsum_epi32(sum) - block_sum;
    for (std::size_t byte = 16 * blocks; byte < rb; ++byte) {
      for (std::size_t j = 0; j < 4; ++j) {
        const std::size_t c = 4 * byte + j;
        const int code = (row[byte] >> (2 * j)) & 3;
        if (code == 3) throw DecodeError("invalid I2_S code", r, r * rb + byte);
        if (c < n_act) total += (code - 1) * act[c];
      }
    }
    acc[r - r0] = total;
  }
}

#endif  // TERNKERN_SIMD

void i2s_rows(const PackedI2S& p, const KernelOperand& op, std::size_t r0, std::size_t r1, std::int32_t* acc) {
#ifdef TERNKERN_SIMD
  try {
    i2s_rows_simd(p, op.activations(), op.i2s(), r0, r1, acc);
  } catch (const DecodeError&) {
    validate(p);  // rethrows at the first offending byte
    throw;
  }
#else
  detail::i2s_rows_scalar(p, op.activations(), r0, r1, acc);
#endif
}

void tl1_rows(const PackedTL1& p, const LutTL1& lut, std::size_t r0, std::size_t r1, std::int32_t* acc) {
#if defined(TERNKERN_SIMD) && !defined(TERNKERN_CHECKED)
  std::size_t r = r0;
  for (; r + 16 <= r1; r += 16) {
    if (!tl1_tile(p, lut, r, acc + (r - r0))) {
      validate(p);
      throw DecodeError("invalid TL1 index", r, r * p.row_bytes());
    }
  }
  detail::tl1_rows_scalar(p, lut, r, r1, acc + (r - r0));
#elif defined(TERNKERN_CHECKED)
  int peak = 0;
  tl1_rows_impl<true>(p, lut, r0, r1, acc, &peak);
#else
  detail::tl1_rows_scalar(p, lut, r0, r1, acc);
#endif
}

void tl2_rows(const PackedTL2& p, const LutTL2& lut, std::size_t r0, std::size_t r1, std::int32_t* acc) {
#if defined(TERNKERN_SIMD) && !defined(TERNKERN_CHECKED)
  std::size_t r = r0;
  for (; r + 16 <= r1; r += 16) {
    if (!tl2_tile(p, lut, r, acc + (r - r0))) {
      validate(p);
      throw DecodeError("invalid TL2 index", r, r * p.index_row_bytes());
    }
  }
  detail::tl2_rows_scalar(p, lut, r, r1, acc + (r - r0));
#elif defined(TERNKERN_CHECKED)
  int peak = 0;
  tl2_rows_impl<true>(p, lut, r0, r1, acc, &peak);
#else
  detail::tl2_rows_scalar(p, lut, r0, r1, acc);
#endif
}

void ref_rows(const TernaryMatrix& m, const QuantizedActivations& a, std::size_t r0, std::size_t r1,
              std::int32_t* acc) {
  const std::int8_t* x = a.data.data();
  for (std::size_t r = r0; r < r1; ++r) {
    const std::int8_t* w = m.row_data(r);
    std::int32_t s = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) s += static_cast<std::int32_t>(w[c]) * x[c];
    acc[r - r0] = s;
  }
}

void check_operand(const KernelWeights& w, const KernelOperand& a) {
  if (a.kind() != kernel_of(w)) {
    throw Error(std::string("operand prepared for ") + to_string(a.kind()) + " used with " +
                to_string(kernel_of(w)) + " weights");
  }
  const std::size_t cols = cols_of(w);
  check_activations(cols, a.activations());
  if (a.kind() == KernelKind::TL1) {
    check_lut(cols, 2, std::get<PackedTL1>(w).groups(), a.tl1());
  } else if (a.kind() == KernelKind::TL2) {
    check_lut(cols, 3, std::get<PackedTL2>(w).groups(), a.tl2());
  }
}

void rows_dispatch(const KernelWeights& w, const KernelOperand& a, std::size_t r0, std::size_t r1,
                   std::int32_t* acc) {
  if (r0 >= r1) return;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TernaryMatrix>) {
          ref_rows(m, a.activations(), r0, r1, acc);
        } else if constexpr (std::is_same_v<T, PackedI2S>) {
          i2s_rows(m, a, r0, r1, acc);
        } else if constexpr (std::is_same_v<T, PackedTL1>) {
          tl1_rows(m, a.tl1(), r0, r1, acc);
        } else {
          tl2_rows(m, a.tl2(), r0, r1, acc);
        }
      },
      w);
}

}  // namespace

namespace detail {

I2SOperand make_i2s_operand(const QuantizedActivations& a) {
  const std::size_t n = a.padded_len();
  const std::size_t blocks = (n + 63) / 64;
  I2SOperand op;
  op.perm.assign(blocks * 64, 0);
  op.prefix64.assign(blocks + 1, 0);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::int32_t s = 0;
    for (std::size_t i = 0; i < 16; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const std::size_t src = 64 * b + 4 * i + j;
        const std::int8_t v = src < n ? a.data[static_cast<Eigen::Index>(src)] : 0;
        op.perm[64 * b + 16 * j + i] = v;
        s += v;
      }
    }
    op.prefix64[b + 1] = op.prefix64[b] + s;
  }
  return op;
}

void i2s_rows_scalar(const PackedI2S& p, const QuantizedActivations& a, std::size_t r0, std::size_t r1,
                     std::int32_t* acc) {
  const std::size_t rb = p.row_bytes();
  const std::size_t n = std::min(p.cols(), a.padded_len());
  const std::int8_t* x = a.data.data();
  for (std::size_t r = r0; r < r1; ++r) {
    const std::uint8_t* row = p.row(r);
    std::int32_t total = 0;
    for (std::size_t byte = 0; byte < rb; ++byte) {
      const unsigned v = row[byte];
      if (v & (v >> 1) & 0x55) throw DecodeError("invalid I2_S code", r, r * rb + byte);
      for (std::size_t j = 0; j < 4; ++j) {
        const std::size_t c = 4 * byte + j;
        if (c < n) total += (static_cast<int>((v >> (2 * j)) & 3) - 1) * x[c];
      }
    }
    acc[r - r0] = total;
  }
}

void tl1_rows_scalar(const PackedTL1& p, const LutTL1& lut, std::size_t r0, std::size_t r1, std::int32_t* acc) {
  tl1_rows_impl<false>(p, lut, r0, r1, acc, nullptr);
}

void tl2_rows_scalar(const PackedTL2& p, const LutTL2& lut, std::size_t r0, std::size_t r1, std::int32_t* acc) {
  tl2_rows_impl<false>(p, lut, r0, r1, acc, nullptr);
}

bool has_simd_kernels() {
#ifdef TERNKERN_SIMD
  return true;
#else
  return false;
#endif
}

}  // namespace detail

KernelKind kernel_of(const KernelWeights& w) {
  switch (w.index()) {
    case 0: return KernelKind::RefInt32;
    case 1: return KernelKind::I2S;
    case 2: return KernelKind::TL1;
    default: return KernelKind::TL2;
  }
}

std::size_t rows_of(const KernelWeights& w) {
  return std::visit([](const auto& m) { return m.rows(); }, w);
}

std::size_t cols_of(const KernelWeights& w) {
  return std::visit([](const auto& m) { return m.cols(); }, w);
}

float scale_of(const KernelWeights& w) {
  return std::visit([](const auto& m) { return m.scale(); }, w);
}

std::size_t weight_bytes(const KernelWeights& w) {
  if (const auto* m = std::get_if<TernaryMatrix>(&w)) return m->rows() * m->cols();
  if (const auto* p = std::get_if<PackedI2S>(&w)) return p->bytes().size();
  if (const auto* p = std::get_if<PackedTL1>(&w)) return p->bytes().size();
  const auto& p = std::get<PackedTL2>(w);
  return p.index_bytes().size() + p.sign_bytes().size();
}

KernelWeights pack_for(KernelKind k, const TernaryMatrix& m) {
  switch (k) {
    case KernelKind::RefInt32: return m;
    case KernelKind::I2S: return encode_i2s(m);
    case KernelKind::TL1: return encode_tl1(m);
    case KernelKind::TL2: return encode_tl2(m);
    default: throw Error("REF_F32 runs on dense real weights, not packed ones");
  }
}

KernelOperand::KernelOperand(KernelKind kind, QuantizedActivations acts) : kind_(kind), acts_(std::move(acts)) {
  if (kind == KernelKind::RefF32) throw Error("REF_F32 takes real activations");
  const auto multiple = static_cast<std::size_t>(activation_padding(kind));
  const std::size_t n = acts_.padded_len();
  const std::size_t padded = std::max(layout::round_up(n, multiple), multiple);
  if (padded != n) acts_.data.conservativeResizeLike(Int8Vector::Zero(static_cast<Eigen::Index>(padded)));
  switch (kind) {
    case KernelKind::I2S: i2s_ = detail::make_i2s_operand(acts_); break;
    case KernelKind::TL1: tl1_ = build_lut_tl1(acts_); break;
    case KernelKind::TL2: tl2_ = build_lut_tl2(acts_); break;
    default: break;
  }
}

GemvResult gemv_ref_int32(const TernaryMatrix& m, const QuantizedActivations& a) {
  check_activations(m.cols(), a);
  Int32Vector acc(static_cast<Eigen::Index>(m.rows()));
  ref_rows(m, a, 0, m.rows(), acc.data());
  return GemvResult::from_accumulators(std::move(acc), m.scale(), a.scale);
}

GemvResult gemv_i2s(const PackedI2S& p, const QuantizedActivations& a) {
  check_activations(p.cols(), a);
  const KernelOperand op(KernelKind::I2S, a);
  Int32Vector acc(static_cast<Eigen::Index>(p.rows()));
  i2s_rows(p, op, 0, p.rows(), acc.data());
  return GemvResult::from_accumulators(std::move(acc), p.scale(), a.scale);
}

GemvResult gemv_tl1(const PackedTL1& p, const LutTL1& lut, float activation_scale) {
  check_lut(p.cols(), 2, p.groups(), lut);
  Int32Vector acc(static_cast<Eigen::Index>(p.rows()));
  tl1_rows(p, lut, 0, p.rows(), acc.data());
  return GemvResult::from_accumulators(std::move(acc), p.scale(), activation_scale);
}

GemvResult gemv_tl2(const PackedTL2& p, const LutTL2& lut, float activation_scale) {
  check_lut(p.cols(), 3, p.groups(), lut);
  Int32Vector acc(static_cast<Eigen::Index>(p.rows()));
  tl2_rows(p, lut, 0, p.rows(), acc.data());
  return GemvResult::from_accumulators(std::move(acc), p.scale(), activation_scale);
}

CheckedGemv gemv_tl1_checked(const PackedTL1& p, const LutTL1& lut, float activation_scale) {
  check_lut(p.cols(), 2, p.groups(), lut);
  CheckedGemv out;
  Int32Vector acc(static_cast<Eigen::Index>(p.rows()));
  tl1_rows_impl<true>(p, lut, 0, p.rows(), acc.data(), &out.peak_partial);
  out.result = GemvResult::from_accumulators(std::move(acc), p.scale(), activation_scale);
  return out;
}

CheckedGemv gemv_tl2_checked(const PackedTL2& p, const LutTL2& lut, float activation_scale) {
  check_lut(p.cols(), 3, p.groups(), lut);
  CheckedGemv out;
  Int32Vector acc(static_cast<Eigen::Index>(p.rows()));
  tl2_rows_impl<true>(p, lut, 0, p.rows(), acc.data(), &out.peak_partial);
  out.result = GemvResult::from_accumulators(std::move(acc), p.scale(), activation_scale);
  return out;
}

GemvResult gemv(const KernelWeights& w, const KernelOperand& a) {
  check_operand(w, a);
  Int32Vector acc(static_cast<Eigen::Index>(rows_of(w)));
  rows_dispatch(w, a, 0, rows_of(w), acc.data());
  return GemvResult::from_accumulators(std::move(acc), scale_of(w), a.activations().scale);
}

GemvResult gemv_parallel(const KernelWeights& w, const KernelOperand& a, ThreadPool& pool) {
  check_operand(w, a);
  const std::size_t rows = rows_of(w);
  Int32Vector acc(static_cast<Eigen::Index>(rows));
  const unsigned workers = pool.size();
  pool.run([&](unsigned i) {
    const RowRange range = partition_rows(rows, workers, i, 16);
    rows_dispatch(w, a, range.begin, range.end, acc.data() + range.begin);
  });
  return GemvResult::from_accumulators(std::move(acc), scale_of(w), a.activations().scale);
}

GemvResult gemv_parallel(const KernelWeights& w, const QuantizedActivations& a, unsigned thread_count) {
  if (thread_count < 1) throw Error("thread_count must be >= 1");
  ThreadPool pool(thread_count);
  return gemv_parallel(w, KernelOperand(kernel_of(w), a), pool);
}

void gemv_f32_parallel(const DenseF32& w, const Eigen::VectorXf& x, Eigen::VectorXf& y, ThreadPool& pool) {
  if (w.cols() != x.size()) throw DimensionError("dimension mismatch");
  y.resize(w.rows());
  const unsigned workers = pool.size();
  pool.run([&](unsigned i) {
    const RowRange range = partition_rows(static_cast<std::size_t>(w.rows()), workers, i, 16);
    const auto n = static_cast<Eigen::Index>(range.end - range.begin);
    if (n == 0) return;
    const auto b = static_cast<Eigen::Index>(range.begin);
    y.segment(b, n).noalias() = w.middleRows(b, n) * x;
  });
}

}  // namespace ternkern
