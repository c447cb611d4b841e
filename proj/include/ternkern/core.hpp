#pragma once

// Domain types shared by every ternkern module: ternary weight matrices,
// int8 activation vectors and GEMV results, plus the two quantizers that
// produce them.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace ternkern {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Raised when packed data violates its encoding. `row` and `byte_offset`
// locate the first offending byte relative to the start of its payload
// plane (plane 1 is the TL2 sign plane, plane 0 everything else).
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t row, std::size_t byte_offset, int plane = 0)
      : Error(what), row_(row), byte_offset_(byte_offset), plane_(plane) {}
  std::size_t row() const { return row_; }
  std::size_t byte_offset() const { return byte_offset_; }
  int plane() const { return plane_; }

 private:
  std::size_t row_;
  std::size_t byte_offset_;
  int plane_;
};

using TernaryValues = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Int8Vector = Eigen::Matrix<std::int8_t, Eigen::Dynamic, 1>;
using Int32Vector = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 1>;

inline double round_half_away(double v) { return std::round(v); }

// Row-major matrix of {-1, 0, +1} with one dequantization scale.
class TernaryMatrix {
 public:
  TernaryMatrix(TernaryValues values, float scale);

  static TernaryMatrix from_values(std::size_t rows, std::size_t cols,
                                   std::span<const std::int8_t> values, float scale);

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
  float scale() const { return scale_; }
  const TernaryValues& values() const { return values_; }
  std::int8_t operator()(std::size_t r, std::size_t c) const {
    return values_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  const std::int8_t* row_data(std::size_t r) const {
    return values_.data() + r * cols();
  }

  // Dense real-valued weights: values * scale.
  template <typename Scalar = float>
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dequantize() const {
    return values_.template cast<Scalar>() * static_cast<Scalar>(scale_);
  }

  friend bool operator==(const TernaryMatrix& a, const TernaryMatrix& b) {
    return a.scale_ == b.scale_ && a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

 private:
  TernaryValues values_;
  float scale_;
};

// Absmax int8 activations. Entries past original_len are zero padding.
struct QuantizedActivations {
  Int8Vector data;
  float scale = 1.0f;
  std::size_t original_len = 0;

  std::size_t padded_len() const { return static_cast<std::size_t>(data.size()); }
};

struct GemvResult {
  Int32Vector accumulators;
  Eigen::VectorXf output;

  // output[i] = accumulators[i] * weight_scale * activation_scale
  static GemvResult from_accumulators(Int32Vector acc, float weight_scale, float activation_scale);
};

namespace detail {
TernaryMatrix ternarize_doubles(std::span<const double> weights, std::size_t rows, std::size_t cols);
QuantizedActivations quantize_doubles(std::span<const double> x, int pad_to);
}  // namespace detail

// Absmean ternarization: scale = mean|w|, entry = clamp(round(w / scale), -1, 1).
template <typename Derived>
TernaryMatrix ternarize_weights(const Eigen::MatrixBase<Derived>& weights) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w =
      weights.template cast<double>();
  return detail::ternarize_doubles(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())),
                                   static_cast<std::size_t>(w.rows()), static_cast<std::size_t>(w.cols()));
}

// Row-major flat weights, as read from a raw fp32 file.
TernaryMatrix ternarize_weights(std::span<const float> weights, std::size_t rows, std::size_t cols);

// scale = max|x| / 127 (1 for the zero vector), data padded with zeros to a
// multiple of pad_to (1..4).
template <typename Derived>
QuantizedActivations quantize_activations(const Eigen::MatrixBase<Derived>& x, int pad_to = 1) {
  static_assert(Derived::IsVectorAtCompileTime || Derived::ColsAtCompileTime == Eigen::Dynamic,
                "quantize_activations expects a vector");
  Eigen::VectorXd v = x.template cast<double>().reshaped();
  return detail::quantize_doubles(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), pad_to);
}

QuantizedActivations quantize_activations(std::span<const float> x, int pad_to = 1);

// Real-valued view of quantized activations over the original length.
Eigen::VectorXf dequantize(const QuantizedActivations& a);

}  // namespace ternkern
