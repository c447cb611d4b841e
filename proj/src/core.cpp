#include "ternkern/core.hpp"

#include <algorithm>
#include <vector>

namespace ternkern {

TernaryMatrix::TernaryMatrix(TernaryValues values, float scale)
    : values_(std::move(values)), scale_(scale) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw DimensionError("ternary matrix must have at least one row and column");
  }
  if (!(scale_ > 0.0f) || !std::isfinite(scale_)) {
    throw Error("ternary matrix scale must be positive and finite");
  }
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    const std::int8_t v = values_.data()[i];
    if (v < -1 || v > 1) {
      throw Error("ternary matrix entry outside {-1, 0, +1}");
    }
  }
}

TernaryMatrix TernaryMatrix::from_values(std::size_t rows, std::size_t cols,
                                         std::span<const std::int8_t> values, float scale) {
  if (values.size() != rows * cols) {
    throw DimensionError("value count does not match rows x cols");
  }
  TernaryValues m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), m.data());
  return TernaryMatrix(std::move(m), scale);
}

GemvResult GemvResult::from_accumulators(Int32Vector acc, float weight_scale, float activation_scale) {
  GemvResult r;
  r.output.resize(acc.size());
  for (Eigen::Index i = 0; i < acc.size(); ++i) {
    r.output[i] = static_cast<float>(acc[i]) * weight_scale * activation_scale;
  }
  r.accumulators = std::move(acc);
  return r;
}

namespace detail {

TernaryMatrix ternarize_doubles(std::span<const double> w, std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) throw DimensionError("rows and cols must be >= 1");
  if (w.size() != rows * cols) throw DimensionError("weight count does not match rows x cols");
  double sum = 0.0;
  for (double v : w) {
    if (!std::isfinite(v)) throw Error("non-finite weight");
    sum += std::abs(v);
  }
  if (sum == 0.0) throw Error("degenerate weight matrix");
  const double scale = sum / static_cast<double>(w.size());
  TernaryValues m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m.data()[i] = static_cast<std::int8_t>(std::clamp(round_half_away(w[i] / scale), -1.0, 1.0));
  }
  return TernaryMatrix(std::move(m), static_cast<float>(scale));
}

QuantizedActivations quantize_doubles(std::span<const double> x, int pad_to) {
  if (pad_to < 1 || pad_to > 4) throw Error("pad_to must be in 1..4");
  double max_abs = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw Error("non-finite activation");
    max_abs = std::max(max_abs, std::abs(v));
  }
  const std::size_t n = x.size();
  const std::size_t padded = (n + pad_to - 1) / pad_to * pad_to;
  QuantizedActivations q;
  q.original_len = n;
  q.data = Int8Vector::Zero(static_cast<Eigen::Index>(padded));
  if (max_abs == 0.0) {
    q.scale = 1.0f;
    return q;
  }
  q.scale = static_cast<float>(max_abs / 127.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = round_half_away(x[i] / max_abs * 127.0);
    q.data[static_cast<Eigen::Index>(i)] = static_cast<std::int8_t>(std::clamp(r, -127.0, 127.0));
  }
  return q;
}

}  // namespace detail

TernaryMatrix ternarize_weights(std::span<const float> weights, std::size_t rows, std::size_t cols) {
  std::vector<double> w(weights.begin(), weights.end());
  return detail::ternarize_doubles(w, rows, cols);
}

QuantizedActivations quantize_activations(std::span<const float> x, int pad_to) {
  std::vector<double> v(x.begin(), x.end());
  return detail::quantize_doubles(v, pad_to);
}

Eigen::VectorXf dequantize(const QuantizedActivations& a) {
  return a.data.head(static_cast<Eigen::Index>(a.original_len)).cast<float>() * a.scale;
}

}  // namespace ternkern
