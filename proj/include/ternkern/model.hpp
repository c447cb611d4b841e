#pragma once

// Model shapes and the token-by-token losslessness harness.
//
// ModelConfig carries the four published scalars of each benchmark model;
// derive_workload expands them into the per-token projection GEMVs of a
// LLaMA-style block. ToyDecoder is a small ternary MLP stack decoded
// greedily: every kernel must emit exactly the integer oracle's tokens.

#include "ternkern/kernels.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ternkern {

struct ModelConfig {
  std::string name;
  std::size_t hidden_size = 0;
  std::size_t intermediate_size = 0;
  std::size_t num_hidden_layers = 0;
  std::size_t num_attention_heads = 0;
};

// The twelve benchmark configurations, 125M through 100B.
const std::vector<ModelConfig>& load_configs();
std::optional<ModelConfig> find_config(std::string_view name);

struct MatrixShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct TokenWorkload {
  std::size_t layers = 0;
  std::vector<MatrixShape> per_layer;  // wq, wk, wv, wo, w_gate, w_up, w_down

  // layers * (4 H^2 + 3 H I)
  std::uint64_t macs_per_token() const;
  std::uint64_t weights_per_layer() const;
};

TokenWorkload derive_workload(const ModelConfig& c);

struct ToyDecoderParams {
  std::size_t vocab_size = 256;
  std::size_t depth = 4;
  std::size_t hidden = 64;
  std::uint64_t seed = 0;
};

struct ToyDecoder {
  ToyDecoderParams params;
  Eigen::MatrixXf embedding;           // vocab x hidden
  std::vector<TernaryMatrix> layers;   // hidden x hidden each
  std::optional<TernaryMatrix> head;   // vocab x hidden

  static ToyDecoder generate(const ToyDecoderParams& p);
};

// Hook run on every prepared operand before its GEMV; fault-injection
// fixtures use it to corrupt a lookup table.
using OperandHook = std::function<void(KernelOperand&)>;

// Loss-detection control: perturbs the first table entry that a (+1, +1)
// or (+1, +1, +1) weight group reads, or the first I2_S activation lane.
OperandHook fault_injection_hook();

struct DecodeOptions {
  unsigned threads = 1;
  OperandHook operand_hook;
};

// Greedy decode of `steps` tokens after `prompt`. Per layer: quantize, GEMV
// with `kernel`, dequantize, ReLU; then the output head and an argmax that
// breaks ties toward the lowest index.
std::vector<std::uint32_t> decode_tokens(const ToyDecoder& d, KernelKind kernel, std::uint32_t prompt,
                                         std::size_t steps, const DecodeOptions& options = {});

struct KernelAccuracy {
  KernelKind kernel;
  std::size_t matches = 0;
  std::size_t trials = 0;
  double fraction() const { return trials ? static_cast<double>(matches) / static_cast<double>(trials) : 0.0; }
};

struct LosslessReport {
  std::size_t trials = 0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::vector<KernelAccuracy> kernels;  // REF_INT32, I2_S, TL1, TL2
  bool all_lossless() const;
};

struct LosslessOptions {
  ToyDecoderParams decoder;  // seed field is overridden per trial
  unsigned threads = 1;
  OperandHook operand_hook;
};

LosslessReport lossless_report(std::size_t trials, std::size_t max_steps, std::uint64_t seed,
                               const LosslessOptions& options = {});

// Randomized cross-kernel GEMV suite: shapes 1..8 x 1..16 cycled first, then
// sampled shapes up to 64 x 512.
struct ExactnessReport {
  std::size_t instances = 0;
  std::vector<KernelAccuracy> kernels;  // I2_S, TL1, TL2
  bool all_exact() const;
};

ExactnessReport cross_kernel_exactness(std::size_t instances, std::uint64_t seed, unsigned threads = 1,
                                       const OperandHook& hook = {});

// Table-shaped text rendering of the two reports.
std::string format_lossless_table(const LosslessReport& r);
std::string format_exactness_table(const ExactnessReport& r);

// Deterministic 64-bit generator shared by the harnesses.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }
  // Uniform in [-1, 1).
  double symmetric() { return static_cast<double>(next() >> 11) * 0x1p-52 - 1.0; }

 private:
  std::uint64_t state_;
};

TernaryMatrix random_ternary(std::size_t rows, std::size_t cols, SplitMix64& rng, float scale = 1.0f);

}  // namespace ternkern
