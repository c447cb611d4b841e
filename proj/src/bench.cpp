#include "ternkern/bench.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

namespace ternkern {

std::uint64_t matrix_bytes(KernelKind k, std::size_t rows, std::size_t cols) {
  switch (k) {
    case KernelKind::RefF32: return static_cast<std::uint64_t>(rows) * cols * sizeof(float);
    case KernelKind::RefInt32: return static_cast<std::uint64_t>(rows) * cols;
    default: return layout::payload_bytes(format_of(k), rows, cols);
  }
}

std::uint64_t model_bytes(KernelKind k, const ModelConfig& c) {
  const TokenWorkload w = derive_workload(c);
  std::uint64_t per_layer = 0;
  for (const auto& s : w.per_layer) per_layer += matrix_bytes(k, s.rows, s.cols);
  return per_layer * w.layers;
}

std::uint64_t available_memory() {
  std::uint64_t avail = 0;
  std::ifstream meminfo("/proc/meminfo");
  std::string key;
  std::uint64_t value = 0;
  std::string unit;
  while (meminfo >> key >> value >> unit) {
    if (key == "MemAvailable:") {
      avail = value * 1024;
      break;
    }
  }
  std::ifstream cg("/sys/fs/cgroup/memory.max");
  std::string limit;
  if (cg >> limit && limit != "max") {
    std::uint64_t l = std::stoull(limit);
    std::ifstream cur("/sys/fs/cgroup/memory.current");
    std::uint64_t used = 0;
    if (cur >> used && used < l) l -= used;
    avail = avail ? std::min(avail, l) : l;
  }
  return avail;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct Layer {
  std::vector<KernelWeights> packed;  // integer kernels
  std::vector<DenseF32> dense;        // REF_F32
};

DenseF32 random_dense(std::size_t rows, std::size_t cols, SplitMix64& rng, float scale) {
  const TernaryMatrix t = random_ternary(rows, cols, rng, scale);
  return t.dequantize<float>();
}

Eigen::VectorXf random_vector(std::size_t n, SplitMix64& rng) {
  Eigen::VectorXf v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = static_cast<float>(rng.symmetric());
  return v;
}

// Runs one proxy token through `layers` logical layers.
class TokenRunner {
 public:
  TokenRunner(const BenchSpec& spec, const TokenWorkload& w, std::vector<Layer> resident, ThreadPool& pool,
              SplitMix64& rng)
      : kernel_(spec.kernel), workload_(w), resident_(std::move(resident)), pool_(pool) {
    const std::size_t h = w.per_layer[0].cols;
    const std::size_t i = w.per_layer[6].cols;
    for (std::size_t k = 0; k < kPool; ++k) {
      hidden_inputs_.push_back(random_vector(h, rng));
      inter_inputs_.push_back(random_vector(i, rng));
    }
  }

  void run_token(std::size_t token) {
    for (std::size_t l = 0; l < workload_.layers; ++l) {
      const Layer& layer = resident_[l % resident_.size()];
      const std::size_t pick = token + l;
      if (kernel_ == KernelKind::RefF32) {
        dense(layer, 0, hidden_inputs_[pick % kPool]);
        dense(layer, 1, hidden_inputs_[pick % kPool]);
        dense(layer, 2, hidden_inputs_[pick % kPool]);
        dense(layer, 3, hidden_inputs_[(pick + 1) % kPool]);
        dense(layer, 4, hidden_inputs_[(pick + 2) % kPool]);
        dense(layer, 5, hidden_inputs_[(pick + 2) % kPool]);
        dense(layer, 6, inter_inputs_[pick % kPool]);
      } else {
        // q/k/v share one input, as do gate/up.
        const KernelOperand attn_in = operand(hidden_inputs_[pick % kPool]);
        packed(layer, 0, attn_in);
        packed(layer, 1, attn_in);
        packed(layer, 2, attn_in);
        packed(layer, 3, operand(hidden_inputs_[(pick + 1) % kPool]));
        const KernelOperand mlp_in = operand(hidden_inputs_[(pick + 2) % kPool]);
        packed(layer, 4, mlp_in);
        packed(layer, 5, mlp_in);
        packed(layer, 6, operand(inter_inputs_[pick % kPool]));
      }
    }
  }

  float checksum() const { return sink_; }

 private:
  static constexpr std::size_t kPool = 8;

  KernelOperand operand(const Eigen::VectorXf& x) const {
    return KernelOperand(kernel_, quantize_activations(x, activation_padding(kernel_)));
  }
  void packed(const Layer& layer, std::size_t m, const KernelOperand& op) {
    const GemvResult r = gemv_parallel(layer.packed[m], op, pool_);
    sink_ += r.output[0];
  }
  void dense(const Layer& layer, std::size_t m, const Eigen::VectorXf& x) {
    gemv_f32_parallel(layer.dense[m], x, y_, pool_);
    sink_ += y_[0];
  }

  KernelKind kernel_;
  const TokenWorkload& workload_;
  std::vector<Layer> resident_;
  ThreadPool& pool_;
  std::vector<Eigen::VectorXf> hidden_inputs_;
  std::vector<Eigen::VectorXf> inter_inputs_;
  Eigen::VectorXf y_;
  float sink_ = 0;
};

}  // namespace

BenchResult run_bench(const BenchSpec& spec) {
  const auto cfg = find_config(spec.config);
  if (!cfg) throw Error("unknown model config '" + spec.config + "'");
  if (spec.tokens < 1) throw Error("tokens must be >= 1");
  if (spec.repetitions < 1) throw Error("repetitions must be >= 1");
  if (spec.threads < 1) throw Error("run_bench needs threads >= 1; use run_bench_sweep for 0");

  const TokenWorkload workload = derive_workload(*cfg);
  BenchResult result;
  result.config = cfg->name;
  result.kernel = spec.kernel;
  result.threads = spec.threads;
  result.model_bytes = model_bytes(spec.kernel, *cfg);
  result.macs_per_token = workload.macs_per_token();
  result.layers = workload.layers;

  const std::uint64_t layer_bytes = result.model_bytes / workload.layers;
  const std::uint64_t budget = spec.memory_budget ? spec.memory_budget : available_memory() / 10 * 8;
  if (result.model_bytes <= budget) {
    result.resident_layers = workload.layers;
  } else if (spec.cycle_layers && layer_bytes <= budget) {
    result.resident_layers = static_cast<std::size_t>(budget / layer_bytes);
    result.note = "cycling " + std::to_string(result.resident_layers) + " of " + std::to_string(workload.layers) +
                  " layers";
  } else {
    result.note = "cannot host";
    return result;
  }

  SplitMix64 rng(spec.seed);
  std::vector<Layer> resident(result.resident_layers);
  for (auto& layer : resident) {
    for (const auto& s : workload.per_layer) {
      const float scale = 0.02f;
      if (spec.kernel == KernelKind::RefF32) {
        layer.dense.push_back(random_dense(s.rows, s.cols, rng, scale));
      } else {
        layer.packed.push_back(pack_for(spec.kernel, random_ternary(s.rows, s.cols, rng, scale)));
      }
    }
  }

  ThreadPool pool(spec.threads);
  TokenRunner runner(spec, workload, std::move(resident), pool, rng);
  std::size_t token = 0;
  for (std::size_t i = 0; i < spec.warmup; ++i) runner.run_token(token++);

  std::vector<double> rates;
  for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < spec.tokens; ++i) runner.run_token(token++);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rates.push_back(static_cast<double>(spec.tokens) / std::max(secs, 1e-12));
  }
  result.available = true;
  result.tokens_per_sec = median(rates);
  result.min_tokens_per_sec = *std::min_element(rates.begin(), rates.end());
  result.max_tokens_per_sec = *std::max_element(rates.begin(), rates.end());
  return result;
}

std::vector<BenchResult> run_bench_sweep(const BenchSpec& spec) {
  if (spec.threads != 0) return {run_bench(spec)};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::vector<BenchResult> out;
  for (unsigned t = 1; t <= hw; ++t) {
    BenchSpec s = spec;
    s.threads = t;
    out.push_back(run_bench(s));
  }
  return out;
}

namespace {
std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace

std::string emit_table(const std::vector<BenchResult>& results, KernelKind baseline) {
  if (results.empty()) throw Error("emit_table needs at least one result");

  std::vector<std::string> configs;
  for (const auto& c : load_configs()) {
    for (const auto& r : results) {
      if (r.config == c.name) {
        configs.push_back(c.name);
        break;
      }
    }
  }
  std::vector<unsigned> thread_counts;
  for (const auto& r : results) {
    if (std::find(thread_counts.begin(), thread_counts.end(), r.threads) == thread_counts.end()) {
      thread_counts.push_back(r.threads);
    }
  }
  std::vector<KernelKind> kernels = {baseline};
  for (const auto& r : results) {
    if (std::find(kernels.begin(), kernels.end(), r.kernel) == kernels.end()) kernels.push_back(r.kernel);
  }

  const int width = 10;
  auto cell = [&](const std::string& s) {
    std::string out(static_cast<std::size_t>(std::max<int>(0, width - static_cast<int>(s.size()))), ' ');
    return out + s;
  };

  std::ostringstream os;
  for (unsigned threads : thread_counts) {
    std::map<std::pair<KernelKind, std::string>, const BenchResult*> by_cell;
    for (const auto& r : results) {
      if (r.threads == threads) by_cell[{r.kernel, r.config}] = &r;
    }
    auto lookup = [&](KernelKind k, const std::string& c) -> const BenchResult* {
      const auto it = by_cell.find({k, c});
      return it == by_cell.end() || !it->second->available ? nullptr : it->second;
    };

    os << "tokens/sec, threads=" << threads << " (GEMV-only token proxy: attention and KV cache not modeled)\n";
    os << "  Kernel     ";
    for (const auto& c : configs) os << cell(c);
    os << "\n";
    for (KernelKind k : kernels) {
      char name[16];
      std::snprintf(name, sizeof name, "  %-10s ", to_string(k));
      os << name;
      for (const auto& c : configs) {
        const BenchResult* r = lookup(k, c);
        os << cell(r ? fixed2(r->tokens_per_sec) : "N/A");
      }
      os << "\n";
      os << "             ";
      for (const auto& c : configs) {
        const BenchResult* r = lookup(k, c);
        const BenchResult* b = lookup(baseline, c);
        os << cell(r && b ? "(" + fixed2(r->tokens_per_sec / b->tokens_per_sec) + "x)" : "N/A");
      }
      os << "\n";
    }
  }
  return os.str();
}

std::string to_json_line(const BenchResult& r) {
  nlohmann::json j = {{"config", r.config},
                      {"kernel", to_string(r.kernel)},
                      {"threads", r.threads},
                      {"available", r.available},
                      {"tokens_per_sec", r.available ? nlohmann::json(r.tokens_per_sec) : nlohmann::json(nullptr)},
                      {"min_tokens_per_sec", r.min_tokens_per_sec},
                      {"max_tokens_per_sec", r.max_tokens_per_sec},
                      {"bytes", r.model_bytes},
                      {"macs_per_token", r.macs_per_token},
                      {"resident_layers", r.resident_layers},
                      {"layers", r.layers}};
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

}  // namespace ternkern
