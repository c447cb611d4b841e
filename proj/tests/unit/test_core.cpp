#include "doctest.h"
#include "oracles.hpp"
#include "ternkern/core.hpp"

#include <cmath>
#include <limits>

using namespace ternkern;

TEST_SUITE("core") {

TEST_CASE("ternarize rejects all-zero weights") {
  const std::vector<float> w = {0, 0, 0, 0};
  CHECK_THROWS_AS(ternarize_weights(std::span<const float>(w), 2, 2), Error);
}

TEST_CASE("ternarize keeps ternary input with unit scale") {
  const std::vector<float> w = {1.0f, -1.0f, 1.0f, -1.0f};
  const TernaryMatrix m = ternarize_weights(std::span<const float>(w), 2, 2);
  CHECK(m.scale() == 1.0f);
  CHECK(m(0, 0) == 1);
  CHECK(m(0, 1) == -1);
  CHECK(m(1, 0) == 1);
  CHECK(m(1, 1) == -1);
}

TEST_CASE("ternarize absmean example") {
  const std::vector<float> w = {0.9f, -0.1f, 0.05f, -0.85f};
  const TernaryMatrix m = ternarize_weights(std::span<const float>(w), 2, 2);
  CHECK(m.scale() == doctest::Approx(0.475).epsilon(1e-6));
  CHECK(m(0, 0) == 1);
  CHECK(m(0, 1) == 0);
  CHECK(m(1, 0) == 0);
  CHECK(m(1, 1) == -1);
}

TEST_CASE("ternarize rejects non-finite and short input") {
  const std::vector<float> w = {1.0f, std::numeric_limits<float>::quiet_NaN()};
  CHECK_THROWS_AS(ternarize_weights(std::span<const float>(w), 1, 2), Error);
  const std::vector<float> inf = {1.0f, std::numeric_limits<float>::infinity()};
  CHECK_THROWS_AS(ternarize_weights(std::span<const float>(inf), 1, 2), Error);
  CHECK_THROWS_AS(ternarize_weights(std::span<const float>(w), 2, 2), DimensionError);
}

TEST_CASE("ternarize of a ternary matrix then dequantize is the identity") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 50; ++t) {
    TernaryMatrix m = oracle::random_matrix(rng, 1 + t % 5, 1 + t % 13);
    if (m.values().cwiseAbs().sum() == 0) continue;
    // Absmean of a ternary matrix is nonzero-count / size, so scale it to 1
    // by ternarizing values / absmean.
    const auto dense = m.dequantize<double>();
    const TernaryMatrix back = ternarize_weights(dense);
    CHECK(back.values() == m.values());
  }
  const Eigen::MatrixXf ones = Eigen::MatrixXf::Constant(3, 4, -1.0f);
  const TernaryMatrix t = ternarize_weights(ones);
  CHECK(t.scale() == 1.0f);
  CHECK(t.dequantize<float>() == ones);
}

TEST_CASE("TernaryMatrix validates entries and scale") {
  TernaryValues v(1, 2);
  v << 1, 2;
  CHECK_THROWS_AS(TernaryMatrix(v, 1.0f), Error);
  v << 1, -1;
  CHECK_THROWS_AS(TernaryMatrix(v, 0.0f), Error);
  CHECK_THROWS_AS(TernaryMatrix(v, -1.0f), Error);
  CHECK_THROWS_AS(TernaryMatrix(v, std::numeric_limits<float>::infinity()), Error);
  const std::vector<std::int8_t> flat = {1, 0, -1};
  CHECK_THROWS_AS(TernaryMatrix::from_values(2, 2, flat, 1.0f), DimensionError);
  const TernaryMatrix m = TernaryMatrix::from_values(1, 3, flat, 0.5f);
  CHECK(m.row_data(0)[2] == -1);
}

TEST_CASE("quantize zero vector") {
  const std::vector<float> x = {0, 0, 0};
  const QuantizedActivations q = quantize_activations(std::span<const float>(x), 2);
  CHECK(q.scale == 1.0f);
  CHECK(q.original_len == 3);
  REQUIRE(q.padded_len() == 4);
  for (int i = 0; i < 4; ++i) CHECK(q.data[i] == 0);
}

TEST_CASE("quantize rounds half away from zero") {
  const std::vector<float> x = {0.5f, -1.0f, 0.25f};
  const QuantizedActivations q = quantize_activations(std::span<const float>(x), 3);
  CHECK(q.scale == 1.0f / 127.0f);
  REQUIRE(q.padded_len() == 3);
  CHECK(q.data[0] == 64);
  CHECK(q.data[1] == -127);
  CHECK(q.data[2] == 32);
}

TEST_CASE("quantize pads to the requested multiple") {
  const std::vector<float> x = {127.0f};
  const QuantizedActivations q = quantize_activations(std::span<const float>(x), 4);
  CHECK(q.scale == 1.0f);
  REQUIRE(q.padded_len() == 4);
  CHECK(q.data[0] == 127);
  CHECK(q.data[1] == 0);
  CHECK(q.data[2] == 0);
  CHECK(q.data[3] == 0);
  CHECK_THROWS_AS(quantize_activations(std::span<const float>(x), 0), Error);
  CHECK_THROWS_AS(quantize_activations(std::span<const float>(x), 5), Error);
}

TEST_CASE("quantize error bound, range and scale covariance") {
  std::mt19937_64 rng(11);
  std::normal_distribution<float> n(0.0f, 3.0f);
  for (int t = 0; t < 200; ++t) {
    Eigen::VectorXf x(1 + t % 37);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = n(rng);
    const QuantizedActivations q = quantize_activations(x, 1 + t % 4);
    CHECK(q.padded_len() % static_cast<std::size_t>(1 + t % 4) == 0);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(q.padded_len()); ++i) {
      CHECK(q.data[i] >= -127);
      CHECK(q.data[i] <= 127);
      if (i >= x.size()) CHECK(q.data[i] == 0);
    }
    const Eigen::VectorXf back = dequantize(q);
    REQUIRE(back.size() == x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      CHECK(std::abs(x[i] - back[i]) <= q.scale * 0.5f * (1.0f + 1e-5f));
    }
    const QuantizedActivations q4 = quantize_activations((4.0f * x).eval(), 1 + t % 4);
    CHECK(q4.data == q.data);
    CHECK(q4.scale == 4.0f * q.scale);
  }
}

TEST_CASE("GemvResult output is accumulator times both scales") {
  Int32Vector acc(3);
  acc << 3, -7, 0;
  const GemvResult r = GemvResult::from_accumulators(acc, 0.5f, 0.25f);
  for (int i = 0; i < 3; ++i) CHECK(r.output[i] == static_cast<float>(acc[i]) * 0.5f * 0.25f);
}

}  // TEST_SUITE
