#include "ternkern/model.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <sstream>

namespace ternkern {

const std::vector<ModelConfig>& load_configs() {
  static const std::vector<ModelConfig> configs = {
      {"125M", 768, 3072, 11, 12},     {"350M", 1024, 3072, 24, 16},    {"700M", 1536, 4096, 24, 16},
      {"1B", 2048, 3584, 24, 32},      {"1.5B", 1536, 9216, 28, 32},    {"2.5B", 2560, 6912, 30, 20},
      {"3.8B", 3840, 8192, 24, 32},    {"7B", 4096, 12032, 32, 32},     {"13B", 5120, 13824, 40, 40},
      {"30B", 6656, 16384, 60, 52},    {"70B", 8192, 24576, 80, 64},    {"100B", 8192, 45568, 72, 64},
  };
  return configs;
}

std::optional<ModelConfig> find_config(std::string_view name) {
  for (const auto& c : load_configs()) {
    if (c.name == name) return c;
  }
  return std::nullopt;
}

std::uint64_t TokenWorkload::weights_per_layer() const {
  std::uint64_t n = 0;
  for (const auto& s : per_layer) n += static_cast<std::uint64_t>(s.rows) * s.cols;
  return n;
}

std::uint64_t TokenWorkload::macs_per_token() const { return layers * weights_per_layer(); }

TokenWorkload derive_workload(const ModelConfig& c) {
  const std::size_t h = c.hidden_size;
  const std::size_t i = c.intermediate_size;
  TokenWorkload w;
  w.layers = c.num_hidden_layers;
  w.per_layer = {{"wq", h, h},     {"wk", h, h},   {"wv", h, h},     {"wo", h, h},
                 {"w_gate", i, h}, {"w_up", i, h}, {"w_down", h, i}};
  return w;
}

TernaryMatrix random_ternary(std::size_t rows, std::size_t cols, SplitMix64& rng, float scale) {
  TernaryValues v(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::int8_t* out = v.data();
  const std::size_t n = rows * cols;
  std::size_t k = 0;
  while (k < n) {
    // Peel base-3 digits off the fraction x / 2^64.
    std::uint64_t x = rng.next();
    for (int d = 0; d < 20 && k < n; ++d, ++k) {
      const unsigned __int128 prod = static_cast<unsigned __int128>(x) * 3;
      out[k] = static_cast<std::int8_t>(static_cast<int>(prod >> 64) - 1);
      x = static_cast<std::uint64_t>(prod);
    }
  }
  return TernaryMatrix(std::move(v), scale);
}

namespace {

TernaryMatrix random_real_ternarized(std::size_t rows, std::size_t cols, SplitMix64& rng) {
  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.symmetric();
  }
  return ternarize_weights(w);
}

struct PreparedDecoder {
  KernelKind kernel;
  std::vector<KernelWeights> layers;
  std::optional<KernelWeights> head;
};

PreparedDecoder prepare(const ToyDecoder& d, KernelKind kernel) {
  PreparedDecoder p{kernel, {}, std::nullopt};
  for (const auto& l : d.layers) p.layers.push_back(pack_for(kernel, l));
  p.head = pack_for(kernel, *d.head);
  return p;
}

std::vector<std::uint32_t> run_decode(const ToyDecoder& d, const PreparedDecoder& prepared, std::uint32_t prompt,
                                      std::size_t steps, const OperandHook& hook, ThreadPool* pool) {
  const int pad = activation_padding(prepared.kernel);
  auto apply = [&](const KernelWeights& w, const Eigen::VectorXf& x) {
    KernelOperand op(prepared.kernel, quantize_activations(x, pad));
    if (hook) hook(op);
    return pool ? gemv_parallel(w, op, *pool) : gemv(w, op);
  };

  std::vector<std::uint32_t> tokens;
  tokens.reserve(steps);
  std::uint32_t current = prompt;
  for (std::size_t s = 0; s < steps; ++s) {
    Eigen::VectorXf x = d.embedding.row(current).transpose();
    for (const auto& layer : prepared.layers) {
      x = apply(layer, x).output.cwiseMax(0.0f);
    }
    const GemvResult logits = apply(*prepared.head, x);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < logits.output.size(); ++i) {
      if (logits.output[i] > logits.output[best]) best = i;
    }
    current = static_cast<std::uint32_t>(best);
    tokens.push_back(current);
  }
  return tokens;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
  SplitMix64 mix(seed ^ (0xA0761D6478BD642Full * (trial + 1)));
  return mix.next();
}

}  // namespace

ToyDecoder ToyDecoder::generate(const ToyDecoderParams& p) {
  if (p.vocab_size < 1 || p.depth < 1 || p.hidden < 1) throw Error("toy decoder dimensions must be >= 1");
  SplitMix64 rng(p.seed);
  ToyDecoder d;
  d.params = p;
  d.embedding.resize(static_cast<Eigen::Index>(p.vocab_size), static_cast<Eigen::Index>(p.hidden));
  for (Eigen::Index r = 0; r < d.embedding.rows(); ++r) {
    for (Eigen::Index c = 0; c < d.embedding.cols(); ++c) d.embedding(r, c) = static_cast<float>(rng.symmetric());
  }
  for (std::size_t l = 0; l < p.depth; ++l) d.layers.push_back(random_real_ternarized(p.hidden, p.hidden, rng));
  d.head = random_real_ternarized(p.vocab_size, p.hidden, rng);
  return d;
}

std::vector<std::uint32_t> decode_tokens(const ToyDecoder& d, KernelKind kernel, std::uint32_t prompt,
                                         std::size_t steps, const DecodeOptions& options) {
  if (steps < 1) throw Error("steps must be >= 1");
  if (prompt >= d.params.vocab_size) throw Error("prompt token out of range");
  if (kernel == KernelKind::RefF32) throw Error("the toy decoder runs integer kernels only");
  const PreparedDecoder prepared = prepare(d, kernel);
  std::unique_ptr<ThreadPool> pool;
  if (options.threads > 1) pool = std::make_unique<ThreadPool>(options.threads);
  return run_decode(d, prepared, prompt, steps, options.operand_hook, pool.get());
}

OperandHook fault_injection_hook() {
  return [](KernelOperand& op) {
    switch (op.kind()) {
      case KernelKind::TL1: {
        auto& lut = op.tl1_mutable();
        lut.set_entry(0, 8, static_cast<std::int16_t>(lut.entry(0, 8) + 37));
        break;
      }
      case KernelKind::TL2: {
        auto& lut = op.tl2_mutable();
        lut.set_entry(0, 13, static_cast<std::int16_t>(lut.entry(0, 13) + 37));
        break;
      }
      case KernelKind::I2S: {
        // Both the regrouped lanes and the plain vector, so every I2_S path sees it.
        auto& perm = op.i2s_mutable().perm;
        perm[0] = static_cast<std::int8_t>(perm[0] > 0 ? perm[0] - 37 : perm[0] + 37);
        auto& a = op.activations_mutable().data;
        a[0] = static_cast<std::int8_t>(a[0] > 0 ? a[0] - 37 : a[0] + 37);
        break;
      }
      default: break;
    }
  };
}

bool LosslessReport::all_lossless() const {
  return std::all_of(kernels.begin(), kernels.end(),
                     [](const KernelAccuracy& k) { return k.matches == k.trials; });
}

LosslessReport lossless_report(std::size_t trials, std::size_t max_steps, std::uint64_t seed,
                               const LosslessOptions& options) {
  if (trials < 1) throw Error("trials must be >= 1");
  if (max_steps < 1) throw Error("max_steps must be >= 1");
  static constexpr KernelKind kinds[] = {KernelKind::RefInt32, KernelKind::I2S, KernelKind::TL1, KernelKind::TL2};
  LosslessReport report;
  report.trials = trials;
  report.steps = max_steps;
  report.seed = seed;
  for (KernelKind k : kinds) report.kernels.push_back({k, 0, trials});

  std::unique_ptr<ThreadPool> pool;
  if (options.threads > 1) pool = std::make_unique<ThreadPool>(options.threads);

  for (std::size_t t = 0; t < trials; ++t) {
    ToyDecoderParams params = options.decoder;
    params.seed = trial_seed(seed, t);
    const ToyDecoder d = ToyDecoder::generate(params);
    SplitMix64 prompt_rng(params.seed);
    const auto prompt = static_cast<std::uint32_t>(prompt_rng.below(params.vocab_size));

    const auto oracle = run_decode(d, prepare(d, KernelKind::RefInt32), prompt, max_steps, {}, pool.get());
    for (auto& acc : report.kernels) {
      const OperandHook& hook = acc.kernel == KernelKind::RefInt32 ? OperandHook{} : options.operand_hook;
      const auto tokens = run_decode(d, prepare(d, acc.kernel), prompt, max_steps, hook, pool.get());
      if (tokens == oracle) ++acc.matches;
    }
  }
  return report;
}

bool ExactnessReport::all_exact() const {
  return std::all_of(kernels.begin(), kernels.end(),
                     [](const KernelAccuracy& k) { return k.matches == k.trials; });
}

ExactnessReport cross_kernel_exactness(std::size_t instances, std::uint64_t seed, unsigned threads,
                                       const OperandHook& hook) {
  static constexpr KernelKind kinds[] = {KernelKind::I2S, KernelKind::TL1, KernelKind::TL2};
  ExactnessReport report;
  report.instances = instances;
  for (KernelKind k : kinds) report.kernels.push_back({k, 0, instances});

  std::unique_ptr<ThreadPool> pool;
  if (threads > 1) pool = std::make_unique<ThreadPool>(threads);
  SplitMix64 rng(seed);
  for (std::size_t n = 0; n < instances; ++n) {
    std::size_t rows;
    std::size_t cols;
    if (n < 8 * 16 * 4) {
      rows = 1 + n % 8;
      cols = 1 + (n / 8) % 16;
    } else {
      rows = 1 + rng.below(64);
      cols = 1 + rng.below(512);
    }
    const TernaryMatrix m = random_ternary(rows, cols, rng, 0.5f + static_cast<float>(rng.below(100)) / 64.0f);

    QuantizedActivations a;
    a.original_len = cols;
    a.scale = 1.0f / 127.0f;
    a.data.resize(static_cast<Eigen::Index>(cols));
    const std::uint64_t mode = rng.below(4);
    for (std::size_t c = 0; c < cols; ++c) {
      std::int8_t v;
      if (mode == 0) {
        v = static_cast<std::int8_t>(rng.below(2) ? 127 : -127);  // saturated
      } else if (mode == 1) {
        v = static_cast<std::int8_t>(rng.below(4) == 0 ? static_cast<int>(rng.below(255)) - 127 : 0);  // sparse
      } else {
        v = static_cast<std::int8_t>(static_cast<int>(rng.below(255)) - 127);
      }
      a.data[static_cast<Eigen::Index>(c)] = v;
    }

    const Int32Vector expected = gemv_ref_int32(m, a).accumulators;
    for (auto& acc : report.kernels) {
      const KernelWeights w = pack_for(acc.kernel, m);
      KernelOperand op(acc.kernel, a);
      if (hook) hook(op);
      const GemvResult r = pool ? gemv_parallel(w, op, *pool) : gemv(w, op);
      if (r.accumulators == expected) ++acc.matches;
    }
  }
  return report;
}

namespace {
std::string percent(const KernelAccuracy& k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * k.fraction());
  std::string s(buf);
  if (s == "100.0%") s = "100%";
  return s;
}

std::string table(const std::string& title, const std::vector<KernelAccuracy>& kernels) {
  std::ostringstream os;
  os << title << "\n";
  os << "  Kernel   ";
  for (const auto& k : kernels) {
    char buf[16];
    std::snprintf(buf, sizeof buf, " %-9s", to_string(k.kernel));
    os << buf;
  }
  os << "\n  Accuracy ";
  for (const auto& k : kernels) {
    char buf[16];
    std::snprintf(buf, sizeof buf, " %-9s", percent(k).c_str());
    os << buf;
  }
  os << "\n";
  return os.str();
}
}  // namespace

std::string format_lossless_table(const LosslessReport& r) {
  return table("token-sequence match vs REF_INT32 (" + std::to_string(r.trials) + " trials x " +
                   std::to_string(r.steps) + " steps)",
               r.kernels);
}

std::string format_exactness_table(const ExactnessReport& r) {
  return table("accumulator match vs REF_INT32 (" + std::to_string(r.instances) + " GEMV instances)", r.kernels);
}

}  // namespace ternkern
