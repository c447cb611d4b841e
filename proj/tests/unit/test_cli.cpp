#include "doctest.h"
#include "ternkern/cli.hpp"
#include "ternkern/tpk.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace ternkern;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ternkern");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("ternkern-test-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void write_f32(const std::string& path, std::size_t n, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::ofstream out(path, std::ios::binary);
  for (std::size_t i = 0; i < n; ++i) {
    const float v = d(rng);
    out.write(reinterpret_cast<const char*>(&v), 4);
  }
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("pack reports payload sizes for 768x768") {
  TempDir dir;
  const auto raw = dir.file("w.bin");
  write_f32(raw, 768 * 768, 1);
  CHECK(fs::file_size(raw) == 2359296);

  const Run i2s = cli({"pack", "--in", raw, "--rows", "768", "--cols", "768", "--format", "i2s", "--out", dir.file("a.tpk")});
  CHECK(i2s.code == 0);
  CHECK(i2s.out.find("packed bytes: 147456") != std::string::npos);
  CHECK(i2s.out.find("bits/weight: 2.00") != std::string::npos);

  const Run tl1 = cli({"pack", "--in", raw, "--rows", "768", "--cols", "768", "--format", "tl1", "--out", dir.file("b.tpk")});
  CHECK(tl1.out.find("packed bytes: 147456") != std::string::npos);

  const Run tl2 = cli({"pack", "--in", raw, "--rows", "768", "--cols", "768", "--format", "tl2", "--out", dir.file("c.tpk")});
  CHECK(tl2.code == 0);
  CHECK(tl2.out.find("packed bytes: 98304 + 24576") != std::string::npos);
  CHECK(tl2.out.find("bits/weight: 1.67") != std::string::npos);

  const Run info = cli({"info", dir.file("c.tpk")});
  CHECK(info.code == 0);
  CHECK(info.out.find("format: TL2") != std::string::npos);
  CHECK(info.out.find("768x768") != std::string::npos);
  CHECK(info.out.find("bits/weight: 1.67") != std::string::npos);
  CHECK(cli({"info", dir.file("a.tpk")}).out.find("bits/weight: 2.00") != std::string::npos);

  const Run verify = cli({"verify", dir.file("c.tpk"), "--vectors", "2"});
  CHECK(verify.code == 0);
  CHECK(verify.out.find("I2_S 100% TL1 100% TL2 100%") != std::string::npos);
}

TEST_CASE("pack input errors") {
  TempDir dir;
  const auto raw = dir.file("w.bin");
  write_f32(raw, 10, 2);
  const Run short_file = cli({"pack", "--in", raw, "--rows", "4", "--cols", "4", "--format", "tl1", "--out", dir.file("x.tpk")});
  CHECK(short_file.code == kExitCorrupt);
  CHECK(short_file.err.find("needs 64") != std::string::npos);

  const auto zeros = dir.file("z.bin");
  {
    std::ofstream out(zeros, std::ios::binary);
    const float z[4] = {0, 0, 0, 0};
    out.write(reinterpret_cast<const char*>(z), sizeof z);
  }
  CHECK(cli({"pack", "--in", zeros, "--rows", "2", "--cols", "2", "--format", "i2s", "--out", dir.file("y.tpk")}).code ==
        kExitCorrupt);
  CHECK(cli({"pack", "--in", dir.file("missing.bin"), "--rows", "2", "--cols", "2", "--format", "i2s", "--out",
             dir.file("y.tpk")})
            .code == kExitCorrupt);
  CHECK(cli({"pack", "--in", raw, "--rows", "2", "--cols", "5", "--format", "q4", "--out", dir.file("y.tpk")}).code ==
        kExitUsage);
}

TEST_CASE("corrupt files") {
  TempDir dir;
  const auto raw = dir.file("w.bin");
  write_f32(raw, 6 * 10, 3);
  const auto tpk = dir.file("m.tpk");
  REQUIRE(cli({"pack", "--in", raw, "--rows", "6", "--cols", "10", "--format", "tl1", "--out", tpk}).code == 0);
  auto bytes = read_file(tpk);
  const std::size_t at = bytes.size() - 6 * 3 + 3 * 3 + 1;
  bytes[at] |= 0xF0;
  {
    std::ofstream out(tpk, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  const Run v = cli({"verify", tpk});
  CHECK(v.code == kExitCorrupt);
  CHECK(v.err.find("invalid TL1 index at matrix 0 row 3") != std::string::npos);
  CHECK(v.err.find("offset " + std::to_string(at)) != std::string::npos);
  CHECK(cli({"info", tpk}).code == kExitCorrupt);

  const auto empty = dir.file("empty.tpk");
  std::ofstream(empty, std::ios::binary).close();
  const Run e = cli({"info", empty});
  CHECK(e.code == kExitCorrupt);
  CHECK(e.err.find("empty file") != std::string::npos);
}

TEST_CASE("verify random mode and fault injection") {
  const Run ok = cli({"verify", "--random", "10", "42", "--instances", "400", "--steps", "20"});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("I2_S 100% TL1 100% TL2 100%") != std::string::npos);

  const Run bad = cli({"verify", "--random", "10", "42", "--instances", "400", "--steps", "20", "--inject-fault"});
  CHECK(bad.code == kExitVerifyFailed);
  CHECK(bad.out.find("I2_S 100% TL1 100% TL2 100%") == std::string::npos);
}

TEST_CASE("bench output") {
  TempDir dir;
  const Run r = cli({"bench", "--config", "125M", "--format", "f32,tl1", "--threads", "2", "--tokens", "1", "--reps",
                     "1", "--warmup", "0", "--out", dir.file("b.jsonl")});
  CHECK(r.code == 0);
  CHECK(r.out.find("threads=2") != std::string::npos);
  CHECK(r.out.find("TL1") != std::string::npos);
  CHECK(r.out.find("x)") != std::string::npos);
  std::ifstream in(dir.file("b.jsonl"));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    CHECK(line.find("\"macs_per_token\":103809024") != std::string::npos);
    ++lines;
  }
  CHECK(lines == 2);

  const Run na = cli({"bench", "--config", "100B", "--format", "tl2", "--tokens", "1", "--reps", "1", "--mem-budget", "1024"});
  CHECK(na.code == 0);
  CHECK(na.out.find("N/A (cannot host)") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"verify"}).code == kExitUsage);
  CHECK(cli({"bench", "--config", "9T"}).code == kExitUsage);
  CHECK(cli({"info"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == 0);
}

}  // TEST_SUITE
