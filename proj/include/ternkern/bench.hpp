#pragma once

// Tokens/second harness. A "token" is the GEMV-only proxy of one decode
// step: every projection of every layer, preceded by activation
// quantization and table builds. Attention and the KV cache are not modeled.

#include "ternkern/kernels.hpp"
#include "ternkern/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ternkern {

struct BenchSpec {
  std::string config = "125M";
  KernelKind kernel = KernelKind::TL1;
  unsigned threads = 2;  // 0 sweeps 1..hardware concurrency (run_bench_sweep)
  std::size_t tokens = 8;
  std::size_t warmup = 1;
  std::size_t repetitions = 3;
  std::uint64_t seed = 0;
  // Weight memory allowed for this run; 0 reads the available system memory.
  std::uint64_t memory_budget = 0;
  // When the full model exceeds the budget, keep as many distinct layers as
  // fit and reuse them round-robin instead of reporting N/A.
  bool cycle_layers = false;
};

struct BenchResult {
  std::string config;
  KernelKind kernel = KernelKind::TL1;
  unsigned threads = 1;
  bool available = false;  // false: the model cannot be hosted (N/A)
  double tokens_per_sec = 0;  // median over repetitions
  double min_tokens_per_sec = 0;
  double max_tokens_per_sec = 0;
  std::uint64_t model_bytes = 0;  // weight bytes of the full model in this kernel's format
  std::uint64_t macs_per_token = 0;
  std::size_t resident_layers = 0;
  std::size_t layers = 0;
  std::string note;
};

// Weight bytes one rows x cols matrix occupies for a kernel.
std::uint64_t matrix_bytes(KernelKind k, std::size_t rows, std::size_t cols);
std::uint64_t model_bytes(KernelKind k, const ModelConfig& c);

// Bytes of memory currently available to this process.
std::uint64_t available_memory();

BenchResult run_bench(const BenchSpec& spec);
std::vector<BenchResult> run_bench_sweep(const BenchSpec& spec);

double median(std::vector<double> values);

// Kernel rows by config columns with "(N.NNx)" speedups against `baseline`;
// one table per thread count.
std::string emit_table(const std::vector<BenchResult>& results, KernelKind baseline);

// One self-describing JSON object per line.
std::string to_json_line(const BenchResult& r);

}  // namespace ternkern
