#include "ternkern/cli.hpp"

#include "CLI11.hpp"
#include "ternkern/bench.hpp"
#include "ternkern/model.hpp"
#include "ternkern/tpk.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ternkern {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string payload_text(const PackedMatrix& m) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, PackedTL2>) {
          return std::to_string(p.index_bytes().size()) + " + " + std::to_string(p.sign_bytes().size());
        } else {
          return std::to_string(p.bytes().size());
        }
      },
      m);
}

struct PackArgs {
  std::string in, out, format, name = "weight";
  std::size_t rows = 0, cols = 0;
};

int cmd_pack(const PackArgs& a, std::ostream& out) {
  const auto kind = parse_kernel(a.format);
  if (!kind || (*kind != KernelKind::I2S && *kind != KernelKind::TL1 && *kind != KernelKind::TL2)) {
    throw CLI::ValidationError("--format", "expected i2s, tl1 or tl2");
  }
  const auto raw = read_file(a.in);
  const std::uint64_t expected = static_cast<std::uint64_t>(a.rows) * a.cols * 4;
  if (raw.size() != expected) {
    throw Error("input is " + std::to_string(raw.size()) + " bytes; " + std::to_string(a.rows) + "x" +
                std::to_string(a.cols) + " fp32 needs " + std::to_string(expected));
  }
  std::vector<float> w(a.rows * a.cols);
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[4 * i + b]) << (8 * b);
    w[i] = std::bit_cast<float>(bits);
  }
  const TernaryMatrix t = ternarize_weights(std::span<const float>(w), a.rows, a.cols);

  TpkFile file;
  file.format = format_of(*kind);
  file.matrices.push_back({a.name, pack(file.format, t)});
  write_tpk(a.out, file);

  out << "scale: " << t.scale() << "\n";
  out << "packed bytes: " << payload_text(file.matrices[0].matrix) << "\n";
  out << "bits/weight: " << fixed(file.bits_per_weight(), 2) << "\n";
  return kExitOk;
}

struct VerifyArgs {
  std::string model;
  std::vector<std::uint64_t> random;  // trials, seed
  std::size_t instances = 10000;
  std::size_t steps = 100;
  std::size_t vectors = 16;
  unsigned threads = 1;
  bool inject_fault = false;
};

ExactnessReport file_exactness(const TpkFile& file, std::size_t vectors, unsigned threads, const OperandHook& hook,
                               std::uint64_t seed) {
  static constexpr KernelKind kinds[] = {KernelKind::I2S, KernelKind::TL1, KernelKind::TL2};
  ExactnessReport report;
  for (KernelKind k : kinds) report.kernels.push_back({k, 0, 0});
  SplitMix64 rng(seed);
  for (const auto& e : file.matrices) {
    const TernaryMatrix m = unpack(e.matrix);
    std::vector<KernelWeights> packed;
    for (KernelKind k : kinds) packed.push_back(pack_for(k, m));
    for (std::size_t v = 0; v < vectors; ++v) {
      Eigen::VectorXf x(static_cast<Eigen::Index>(m.cols()));
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = static_cast<float>(rng.symmetric());
      ++report.instances;
      for (std::size_t k = 0; k < packed.size(); ++k) {
        const QuantizedActivations q = quantize_activations(x, activation_padding(kinds[k]));
        const Int32Vector expected = gemv_ref_int32(m, q).accumulators;
        KernelOperand op(kinds[k], q);
        if (hook) hook(op);
        ThreadPool pool(threads);
        ++report.kernels[k].trials;
        if (gemv_parallel(packed[k], op, pool).accumulators == expected) ++report.kernels[k].matches;
      }
    }
  }
  return report;
}

std::string summary_line(const std::vector<KernelAccuracy>& a, const std::vector<KernelAccuracy>& b) {
  std::ostringstream os;
  bool first = true;
  for (KernelKind k : {KernelKind::I2S, KernelKind::TL1, KernelKind::TL2}) {
    std::size_t m = 0, t = 0;
    for (const auto* list : {&a, &b}) {
      for (const auto& acc : *list) {
        if (acc.kernel == k) {
          m += acc.matches;
          t += acc.trials;
        }
      }
    }
    const double pct = t ? 100.0 * static_cast<double>(m) / static_cast<double>(t) : 0.0;
    os << (first ? "" : " ") << to_string(k) << " " << (m == t ? std::string("100") : fixed(pct, 1)) << "%";
    first = false;
  }
  return os.str();
}

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  const OperandHook hook = a.inject_fault ? fault_injection_hook() : OperandHook{};
  if (a.inject_fault) out << "fault injection: ON\n";
  if (!a.random.empty()) {
    if (a.random.size() != 2) throw CLI::ValidationError("--random", "expects TRIALS SEED");
    const std::size_t trials = a.random[0];
    const std::uint64_t seed = a.random[1];
    const ExactnessReport ex = cross_kernel_exactness(a.instances, seed, a.threads, hook);
    out << format_exactness_table(ex);
    LosslessOptions opts;
    opts.threads = a.threads;
    opts.operand_hook = hook;
    const LosslessReport lr = lossless_report(trials, a.steps, seed, opts);
    out << format_lossless_table(lr);
    out << summary_line(ex.kernels, lr.kernels) << "\n";
    return ex.all_exact() && lr.all_lossless() ? kExitOk : kExitVerifyFailed;
  }
  const TpkFile file = read_tpk(a.model);
  const ExactnessReport ex = file_exactness(file, a.vectors, a.threads, hook, 0);
  out << "model: " << a.model << " (" << to_string(file.format) << ", " << file.matrices.size() << " matrices)\n";
  out << format_exactness_table(ex);
  out << summary_line(ex.kernels, {}) << "\n";
  return ex.all_exact() ? kExitOk : kExitVerifyFailed;
}

struct BenchArgs {
  std::vector<std::string> configs = {"125M"};
  std::vector<std::string> formats = {"f32", "i2s", "tl1", "tl2"};
  unsigned threads = 2;
  std::size_t tokens = 8;
  std::size_t reps = 3;
  std::size_t warmup = 1;
  std::uint64_t seed = 0;
  std::string baseline = "f32";
  std::string out;
  std::uint64_t mem_budget_mb = 0;
  bool cycle_layers = false;
};

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string part;
    while (std::getline(ss, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  std::vector<std::string> configs = split_list(a.configs);
  if (configs.size() == 1 && configs[0] == "all") {
    configs.clear();
    for (const auto& c : load_configs()) configs.push_back(c.name);
  }
  for (const auto& c : configs) {
    if (!find_config(c)) throw CLI::ValidationError("--config", "unknown config '" + c + "'");
  }
  std::vector<std::string> names = split_list(a.formats);
  if (names.size() == 1 && names[0] == "all") names = {"f32", "int32", "i2s", "tl1", "tl2"};
  std::vector<KernelKind> kernels;
  for (const auto& n : names) {
    const auto k = parse_kernel(n);
    if (!k) throw CLI::ValidationError("--format", "unknown kernel '" + n + "'");
    kernels.push_back(*k);
  }
  const auto baseline = parse_kernel(a.baseline);
  if (!baseline) throw CLI::ValidationError("--baseline", "unknown kernel '" + a.baseline + "'");

  std::ofstream records;
  if (!a.out.empty()) {
    records.open(a.out, std::ios::trunc);
    if (!records) throw Error("cannot write " + a.out);
  }

  std::vector<BenchResult> results;
  for (const auto& c : configs) {
    for (KernelKind k : kernels) {
      BenchSpec spec;
      spec.config = c;
      spec.kernel = k;
      spec.threads = a.threads;
      spec.tokens = a.tokens;
      spec.repetitions = a.reps;
      spec.warmup = a.warmup;
      spec.seed = a.seed;
      spec.memory_budget = a.mem_budget_mb * 1024 * 1024;
      spec.cycle_layers = a.cycle_layers;
      for (auto& r : run_bench_sweep(spec)) {
        if (!r.available) {
          out << c << " " << to_string(k) << ": N/A (" << r.note << ")\n";
        } else if (!r.note.empty()) {
          out << c << " " << to_string(k) << ": " << r.note << "\n";
        }
        if (records) records << to_json_line(r) << "\n";
        results.push_back(std::move(r));
      }
    }
  }
  out << emit_table(results, *baseline);
  return kExitOk;
}

int cmd_info(const std::string& path, std::ostream& out) {
  const auto bytes = read_file(path);
  const TpkFile file = parse_tpk(bytes);
  out << "format: " << to_string(file.format) << "\n";
  out << "matrices: " << file.matrices.size() << "\n";
  for (const auto& e : file.matrices) {
    std::visit(
        [&](const auto& m) {
          out << "  " << e.name << "  " << m.rows() << "x" << m.cols() << "  scale " << m.scale() << "  payload "
              << payload_text(e.matrix) << " bytes\n";
        },
        e.matrix);
  }
  out << "payload bytes: " << file.payload_bytes() << "\n";
  out << "total bytes: " << bytes.size() << "\n";
  out << "bits/weight: " << fixed(file.bits_per_weight(), 2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ternary-weight GEMV kernels: pack, verify and benchmark", "ternkern"};
  app.require_subcommand(1);

  PackArgs pack_args;
  auto* pack_cmd = app.add_subcommand("pack", "Ternarize raw fp32 weights and write a TPK1 file");
  pack_cmd->add_option("--in", pack_args.in, "Raw little-endian fp32 weights, row-major")->required();
  pack_cmd->add_option("--rows", pack_args.rows)->required()->check(CLI::PositiveNumber);
  pack_cmd->add_option("--cols", pack_args.cols)->required()->check(CLI::PositiveNumber);
  pack_cmd->add_option("--format", pack_args.format, "i2s, tl1 or tl2")->required();
  pack_cmd->add_option("--out", pack_args.out)->required();
  pack_cmd->add_option("--name", pack_args.name, "Matrix name stored in the file");

  VerifyArgs verify_args;
  auto* verify_cmd = app.add_subcommand("verify", "Check every packed kernel against the integer reference");
  verify_cmd->add_option("model", verify_args.model, "TPK1 file");
  auto* random_opt = verify_cmd->add_option("--random", verify_args.random, "TRIALS SEED: random mode")
                         ->expected(2);
  verify_cmd->add_option("--instances", verify_args.instances, "Random GEMV instances (random mode)");
  verify_cmd->add_option("--steps", verify_args.steps, "Decode steps per trial (random mode)");
  verify_cmd->add_option("--vectors", verify_args.vectors, "Activation vectors per matrix (file mode)");
  verify_cmd->add_option("--threads", verify_args.threads)->check(CLI::PositiveNumber);
  verify_cmd->add_flag("--inject-fault", verify_args.inject_fault, "Corrupt one table entry per GEMV");
  verify_cmd->get_option("model")->excludes(random_opt);

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Tokens/second of the GEMV-only token proxy");
  bench_cmd->add_option("--config", bench_args.configs, "Model configs, comma separated, or all");
  bench_cmd->add_option("--format", bench_args.formats, "Kernels: f32, int32, i2s, tl1, tl2, or all");
  bench_cmd->add_option("--threads", bench_args.threads, "0 sweeps 1..hardware concurrency");
  bench_cmd->add_option("--tokens", bench_args.tokens)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--reps", bench_args.reps)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", bench_args.warmup);
  bench_cmd->add_option("--seed", bench_args.seed);
  bench_cmd->add_option("--baseline", bench_args.baseline, "Kernel the speedups are relative to");
  bench_cmd->add_option("--out", bench_args.out, "Append one JSON record per result");
  bench_cmd->add_option("--mem-budget", bench_args.mem_budget_mb, "Weight memory budget in MiB (default: 80% of available)");
  bench_cmd->add_flag("--cycle-layers", bench_args.cycle_layers, "Reuse resident layers when the model does not fit");

  std::string info_path;
  auto* info_cmd = app.add_subcommand("info", "Describe a TPK1 file");
  info_cmd->add_option("model", info_path)->required();

  try {
    app.parse(argc, argv);
    if (*pack_cmd) return cmd_pack(pack_args, out);
    if (*verify_cmd) {
      if (verify_args.model.empty() && verify_args.random.empty()) {
        throw CLI::RequiredError("verify needs a model path or --random TRIALS SEED");
      }
      return cmd_verify(verify_args, out);
    }
    if (*bench_cmd) return cmd_bench(bench_args, out);
    if (*info_cmd) return cmd_info(info_path, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const TpkError& e) {
    err << "error: " << e.what() << " (offset " << e.offset() << ")\n";
    return kExitCorrupt;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCorrupt;
  }
  return kExitUsage;
}

}  // namespace ternkern
