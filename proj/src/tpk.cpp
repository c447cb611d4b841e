#include "ternkern/tpk.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace ternkern {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return b_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw TpkError(std::string("truncated file: missing ") + what, b_.size());
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return b_[pos_++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::span<const std::uint8_t> bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v) {
  if (v > 0xFFFFFFFFull) throw Error("value does not fit the 32-bit TPK1 field");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

PackedMatrix pack(PackFormat f, const TernaryMatrix& m) {
  switch (f) {
    case PackFormat::I2S: return encode_i2s(m);
    case PackFormat::TL1: return encode_tl1(m);
    case PackFormat::TL2: return encode_tl2(m);
  }
  throw Error("unknown packed format");
}

TernaryMatrix unpack(const PackedMatrix& p) {
  return std::visit(
      [](const auto& m) -> TernaryMatrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, PackedI2S>) return decode_i2s(m);
        else if constexpr (std::is_same_v<T, PackedTL1>) return decode_tl1(m);
        else return decode_tl2(m);
      },
      p);
}

PackFormat format_of(const PackedMatrix& p) {
  return static_cast<PackFormat>(p.index() + 1);
}

std::uint64_t TpkFile::payload_bytes() const {
  std::uint64_t n = 0;
  for (const auto& e : matrices) {
    n += std::visit([](const auto& m) { return layout::payload_bytes(format_of(PackedMatrix(m)), m.rows(), m.cols()); },
                    e.matrix);
  }
  return n;
}

std::uint64_t TpkFile::weight_count() const {
  std::uint64_t n = 0;
  for (const auto& e : matrices) {
    n += std::visit([](const auto& m) { return static_cast<std::uint64_t>(m.rows()) * m.cols(); }, e.matrix);
  }
  return n;
}

double TpkFile::bits_per_weight() const {
  const std::uint64_t w = weight_count();
  return w ? 8.0 * static_cast<double>(payload_bytes()) / static_cast<double>(w) : 0.0;
}

std::vector<std::uint8_t> serialize(const TpkFile& f) {
  Writer w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("TPK1"), 4));
  w.u16(kTpkVersion);
  w.u8(static_cast<std::uint8_t>(f.format));
  w.u32(checked_u32(f.matrices.size()));
  for (const auto& e : f.matrices) {
    if (format_of(e.matrix) != f.format) throw Error("matrix '" + e.name + "' does not match the file format");
    w.u32(checked_u32(e.name.size()));
    w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(e.name.data()), e.name.size()));
    std::visit(
        [&](const auto& m) {
          w.u32(checked_u32(m.rows()));
          w.u32(checked_u32(m.cols()));
          w.f32(m.scale());
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, PackedTL2>) {
            w.u32(checked_u32(m.index_bytes().size()));
            w.u32(checked_u32(m.sign_bytes().size()));
            w.bytes(m.index_bytes());
            w.bytes(m.sign_bytes());
          } else {
            w.u32(checked_u32(m.bytes().size()));
            w.bytes(m.bytes());
          }
        },
        e.matrix);
  }
  return w.take();
}

TpkFile parse_tpk(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw TpkError("empty file", 0);
  Reader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), "TPK1", 4) != 0) throw TpkError("bad magic (expected TPK1)", 0);
  const std::uint16_t version = r.u16("version");
  if (version != kTpkVersion) throw TpkError("unsupported version " + std::to_string(version), 4);
  const std::uint8_t fmt = r.u8("format");
  if (fmt < 1 || fmt > 3) throw TpkError("unknown format code " + std::to_string(fmt), 6);
  TpkFile file;
  file.format = static_cast<PackFormat>(fmt);
  const std::uint32_t count = r.u32("matrix count");

  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "matrix " + std::to_string(i);
    const std::uint32_t name_len = r.u32("name length");
    const auto name = r.bytes(name_len, "name");
    const std::size_t rows_at = r.pos();
    const std::uint32_t rows = r.u32("rows");
    const std::uint32_t cols = r.u32("cols");
    if (rows == 0) throw TpkError(where + ": rows must be >= 1", rows_at);
    if (cols == 0) throw TpkError(where + ": cols must be >= 1", rows_at + 4);
    const std::size_t scale_at = r.pos();
    const float scale = r.f32("scale");
    if (!(scale > 0.0f) || !std::isfinite(scale)) throw TpkError(where + ": scale must be positive and finite", scale_at);

    std::vector<std::size_t> expected;
    if (file.format == PackFormat::TL2) {
      expected = {rows * layout::tl2_index_row_bytes(cols), rows * layout::tl2_sign_row_bytes(cols)};
    } else {
      expected = {layout::payload_bytes(file.format, rows, cols)};
    }
    std::vector<std::size_t> lengths;
    for (std::size_t k = 0; k < expected.size(); ++k) {
      const std::size_t at = r.pos();
      lengths.push_back(r.u32("payload length"));
      if (lengths.back() != expected[k]) {
        throw TpkError(where + ": payload length " + std::to_string(lengths.back()) + " does not match " +
                           std::to_string(expected[k]) + " expected for " + std::to_string(rows) + "x" +
                           std::to_string(cols),
                       at);
      }
    }
    std::vector<std::size_t> starts;
    std::vector<std::vector<std::uint8_t>> planes;
    for (std::size_t len : lengths) {
      starts.push_back(r.pos());
      const auto b = r.bytes(len, "payload");
      planes.emplace_back(b.begin(), b.end());
    }

    TpkEntry entry{std::string(name.begin(), name.end()), PackedI2S(1, 1, {0x55}, 1.0f)};
    switch (file.format) {
      case PackFormat::I2S: entry.matrix = PackedI2S(rows, cols, std::move(planes[0]), scale); break;
      case PackFormat::TL1: entry.matrix = PackedTL1(rows, cols, std::move(planes[0]), scale); break;
      case PackFormat::TL2:
        entry.matrix = PackedTL2(rows, cols, std::move(planes[0]), std::move(planes[1]), scale);
        break;
    }
    try {
      std::visit([](const auto& m) { validate(m); }, entry.matrix);
    } catch (const DecodeError& e) {
      throw TpkError(std::string(e.what()) + " at " + where + " row " + std::to_string(e.row()),
                     starts[static_cast<std::size_t>(e.plane())] + e.byte_offset());
    }
    file.matrices.push_back(std::move(entry));
  }
  if (r.remaining() != 0) throw TpkError("trailing bytes after last matrix", r.pos());
  return file;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_tpk(const std::filesystem::path& path, const TpkFile& f) {
  const auto bytes = serialize(f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

TpkFile read_tpk(const std::filesystem::path& path) { return parse_tpk(read_file(path)); }

}  // namespace ternkern
