#pragma once

// Matrix-vector kernels over ternary weights. Every integer kernel returns
// accumulators bit-identical to gemv_ref_int32 on the decoded matrix.
//
// TL1 and TL2 sum table entries into a 16-bit partial that is folded into
// the 32-bit accumulator every kWideningPeriod groups and at the end of the
// row: 64 * 254 (TL1) and 64 * 381 (TL2) both stay below 32767.

#include "ternkern/core.hpp"
#include "ternkern/lut.hpp"
#include "ternkern/packing.hpp"
#include "ternkern/thread_pool.hpp"

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace ternkern {

inline constexpr std::size_t kWideningPeriod = 64;

enum class KernelKind { RefInt32, RefF32, I2S, TL1, TL2 };

const char* to_string(KernelKind k);
std::optional<KernelKind> parse_kernel(std::string_view name);
PackFormat format_of(KernelKind k);
KernelKind kernel_for(PackFormat f);

// Activation padding multiple a kernel wants: 1, 1, 4, 2, 3.
int activation_padding(KernelKind k);

GemvResult gemv_ref_int32(const TernaryMatrix& m, const QuantizedActivations& a);
GemvResult gemv_i2s(const PackedI2S& p, const QuantizedActivations& a);
GemvResult gemv_tl1(const PackedTL1& p, const LutTL1& lut, float activation_scale);
GemvResult gemv_tl2(const PackedTL2& p, const LutTL2& lut, float activation_scale);

// Real-arithmetic product of the dequantized weights with x.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> gemv_real_ref(const TernaryMatrix& m,
                                                                         const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<std::size_t>(x.size()) != m.cols()) throw DimensionError("dimension mismatch");
  return m.template dequantize<Scalar>() * x;
}

inline Eigen::VectorXf gemv_f32_ref(const TernaryMatrix& m, const Eigen::Ref<const Eigen::VectorXf>& x) {
  return gemv_real_ref(m, x);
}

// Scalar TL1/TL2 paths that also report the largest |16-bit partial| seen.
// Throws Error if a partial would leave int16 range.
struct CheckedGemv {
  GemvResult result;
  int peak_partial = 0;
};
CheckedGemv gemv_tl1_checked(const PackedTL1& p, const LutTL1& lut, float activation_scale);
CheckedGemv gemv_tl2_checked(const PackedTL2& p, const LutTL2& lut, float activation_scale);

using KernelWeights = std::variant<TernaryMatrix, PackedI2S, PackedTL1, PackedTL2>;

KernelKind kernel_of(const KernelWeights& w);
std::size_t rows_of(const KernelWeights& w);
std::size_t cols_of(const KernelWeights& w);
float scale_of(const KernelWeights& w);
std::size_t weight_bytes(const KernelWeights& w);
KernelWeights pack_for(KernelKind k, const TernaryMatrix& m);

namespace detail {
// Activations regrouped for the I2_S shuffle kernel: inside every block of 64
// weights, perm[16j + i] = a[4i + j].
struct I2SOperand {
  std::vector<std::int8_t> perm;
  std::vector<std::int32_t> prefix64;  // prefix64[b] = sum of a over the first 64*b entries
};
I2SOperand make_i2s_operand(const QuantizedActivations& a);
}  // namespace detail

// Activations prepared once for a kernel (table builds, regrouping) and
// shared by every GEMV that consumes the same input vector.
class KernelOperand {
 public:
  KernelOperand(KernelKind kind, QuantizedActivations acts);

  KernelKind kind() const { return kind_; }
  const QuantizedActivations& activations() const { return acts_; }
  // Mutable views exist for fault-injection fixtures only.
  QuantizedActivations& activations_mutable() { return acts_; }
  const LutTL1& tl1() const { return *tl1_; }
  const LutTL2& tl2() const { return *tl2_; }
  LutTL1& tl1_mutable() { return *tl1_; }
  LutTL2& tl2_mutable() { return *tl2_; }
  const detail::I2SOperand& i2s() const { return *i2s_; }
  detail::I2SOperand& i2s_mutable() { return *i2s_; }

 private:
  KernelKind kind_;
  QuantizedActivations acts_;
  std::optional<LutTL1> tl1_;
  std::optional<LutTL2> tl2_;
  std::optional<detail::I2SOperand> i2s_;
};

// Output rows are split into contiguous chunks, one per pool worker.
GemvResult gemv_parallel(const KernelWeights& w, const KernelOperand& a, ThreadPool& pool);
GemvResult gemv_parallel(const KernelWeights& w, const QuantizedActivations& a, unsigned thread_count);
GemvResult gemv(const KernelWeights& w, const KernelOperand& a);

using DenseF32 = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
void gemv_f32_parallel(const DenseF32& w, const Eigen::VectorXf& x, Eigen::VectorXf& y, ThreadPool& pool);

namespace detail {
// Portable paths, exposed so tests can hold the vectorized ones against them.
void i2s_rows_scalar(const PackedI2S& p, const QuantizedActivations& a, std::size_t r0, std::size_t r1,
                     std::int32_t* acc);
void tl1_rows_scalar(const PackedTL1& p, const LutTL1& lut, std::size_t r0, std::size_t r1, std::int32_t* acc);
void tl2_rows_scalar(const PackedTL2& p, const LutTL2& lut, std::size_t r0, std::size_t r1, std::int32_t* acc);
bool has_simd_kernels();
}  // namespace detail

}  // namespace ternkern
