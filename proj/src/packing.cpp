#include "ternkern/packing.hpp"

namespace ternkern {

const char* to_string(PackFormat f) {
  switch (f) {
    case PackFormat::I2S: return "I2_S";
    case PackFormat::TL1: return "TL1";
    case PackFormat::TL2: return "TL2";
  }
  return "?";
}

namespace layout {
std::size_t payload_bytes(PackFormat f, std::size_t rows, std::size_t cols) {
  switch (f) {
    case PackFormat::I2S: return rows * i2s_row_bytes(cols);
    case PackFormat::TL1: return rows * tl1_row_bytes(cols);
    case PackFormat::TL2: return rows * (tl2_index_row_bytes(cols) + tl2_sign_row_bytes(cols));
  }
  return 0;
}
}  // namespace layout

namespace {

void check_shape(std::size_t rows, std::size_t cols, float scale) {
  if (rows < 1 || cols < 1) throw DimensionError("packed matrix must have at least one row and column");
  if (!(scale > 0.0f) || !std::isfinite(scale)) throw Error("packed matrix scale must be positive and finite");
}

void check_length(const std::vector<std::uint8_t>& bytes, std::size_t expected, const char* what) {
  if (bytes.size() != expected) {
    throw DimensionError(std::string(what) + " payload is " + std::to_string(bytes.size()) +
                         " bytes, expected " + std::to_string(expected));
  }
}

// Weight at (r, c) of m, zero past the original columns.
inline int weight_at(const TernaryMatrix& m, const std::int8_t* row, std::size_t c) {
  return c < m.cols() ? row[c] : 0;
}

}  // namespace

PackedI2S::PackedI2S(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bytes, float scale)
    : rows_(rows), cols_(cols), bytes_(std::move(bytes)), scale_(scale) {
  check_shape(rows, cols, scale);
  check_length(bytes_, rows * row_bytes(), "I2_S");
}

PackedTL1::PackedTL1(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bytes, float scale)
    : rows_(rows), cols_(cols), bytes_(std::move(bytes)), scale_(scale) {
  check_shape(rows, cols, scale);
  check_length(bytes_, rows * row_bytes(), "TL1");
}

PackedTL2::PackedTL2(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> index_bytes,
                     std::vector<std::uint8_t> sign_bytes, float scale)
    : rows_(rows), cols_(cols), index_(std::move(index_bytes)), sign_(std::move(sign_bytes)), scale_(scale) {
  check_shape(rows, cols, scale);
  check_length(index_, rows * index_row_bytes(), "TL2 index");
  check_length(sign_, rows * sign_row_bytes(), "TL2 sign");
}

PackedI2S encode_i2s(const TernaryMatrix& m) {
  const std::size_t rb = layout::i2s_row_bytes(m.cols());
  std::vector<std::uint8_t> out(m.rows() * rb, 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const std::int8_t* w = m.row_data(r);
    std::uint8_t* dst = out.data() + r * rb;
    for (std::size_t b = 0; b < rb; ++b) {
      std::uint8_t byte = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        byte |= static_cast<std::uint8_t>(i2s_code(weight_at(m, w, 4 * b + j)) << (2 * j));
      }
      dst[b] = byte;
    }
  }
  return PackedI2S(m.rows(), m.cols(), std::move(out), m.scale());
}

void validate(const PackedI2S& p) {
  const std::size_t rb = p.row_bytes();
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const std::uint8_t* src = p.row(r);
    for (std::size_t b = 0; b < rb; ++b) {
      if (src[b] & (src[b] >> 1) & 0x55) throw DecodeError("invalid I2_S code", r, r * rb + b);
    }
  }
}

TernaryMatrix decode_i2s(const PackedI2S& p) {
  validate(p);
  TernaryValues v(static_cast<Eigen::Index>(p.rows()), static_cast<Eigen::Index>(p.cols()));
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const std::uint8_t* src = p.row(r);
    std::int8_t* dst = v.data() + r * p.cols();
    for (std::size_t c = 0; c < p.cols(); ++c) {
      dst[c] = static_cast<std::int8_t>(((src[c / 4] >> (2 * (c % 4))) & 3) - 1);
    }
  }
  return TernaryMatrix(std::move(v), p.scale());
}

PackedTL1 encode_tl1(const TernaryMatrix& m) {
  const std::size_t rb = layout::tl1_row_bytes(m.cols());
  std::vector<std::uint8_t> out(m.rows() * rb, 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const std::int8_t* w = m.row_data(r);
    std::uint8_t* dst = out.data() + r * rb;
    for (std::size_t g = 0; g < 2 * rb; ++g) {
      const std::uint8_t idx = tl1_index(weight_at(m, w, 2 * g), weight_at(m, w, 2 * g + 1));
      dst[g / 2] |= static_cast<std::uint8_t>(idx << (4 * (g % 2)));
    }
  }
  return PackedTL1(m.rows(), m.cols(), std::move(out), m.scale());
}

void validate(const PackedTL1& p) {
  const std::size_t rb = p.row_bytes();
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const std::uint8_t* src = p.row(r);
    for (std::size_t b = 0; b < rb; ++b) {
      if ((src[b] & 0x0F) > 8 || (src[b] >> 4) > 8) throw DecodeError("invalid TL1 index", r, r * rb + b);
    }
  }
}

TernaryMatrix decode_tl1(const PackedTL1& p) {
  validate(p);
  TernaryValues v(static_cast<Eigen::Index>(p.rows()), static_cast<Eigen::Index>(p.cols()));
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const std::uint8_t* src = p.row(r);
    std::int8_t* dst = v.data() + r * p.cols();
    for (std::size_t c = 0; c < p.cols(); ++c) {
      const std::size_t g = c / 2;
      const auto pair = tl1_pair(static_cast<std::uint8_t>((src[g / 2] >> (4 * (g % 2))) & 0x0F));
      dst[c] = pair[c % 2];
    }
  }
  return TernaryMatrix(std::move(v), p.scale());
}

PackedTL2 encode_tl2(const TernaryMatrix& m) {
  const std::size_t ib = layout::tl2_index_row_bytes(m.cols());
  const std::size_t sb = layout::tl2_sign_row_bytes(m.cols());
  const std::size_t groups = layout::tl2_groups(m.cols());
  std::vector<std::uint8_t> index(m.rows() * ib, 0);
  std::vector<std::uint8_t> sign(m.rows() * sb, 0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const std::int8_t* w = m.row_data(r);
    std::uint8_t* idst = index.data() + r * ib;
    std::uint8_t* sdst = sign.data() + r * sb;
    for (std::size_t g = 0; g < groups; ++g) {
      const Tl2Code code =
          tl2_code(weight_at(m, w, 3 * g), weight_at(m, w, 3 * g + 1), weight_at(m, w, 3 * g + 2));
      idst[g / 2] |= static_cast<std::uint8_t>(code.index << (4 * (g % 2)));
      if (code.sign) sdst[g / 8] |= static_cast<std::uint8_t>(1u << (g % 8));
    }
  }
  return PackedTL2(m.rows(), m.cols(), std::move(index), std::move(sign), m.scale());
}

void validate(const PackedTL2& p) {
  const std::size_t ib = p.index_row_bytes();
  const std::size_t groups = p.groups();
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const std::uint8_t* isrc = p.index_row(r);
    const std::uint8_t* ssrc = p.sign_row(r);
    for (std::size_t g = 0; g < groups; ++g) {
      const unsigned idx = (isrc[g / 2] >> (4 * (g % 2))) & 0x0F;
      const bool s = (ssrc[g / 8] >> (g % 8)) & 1;
      if (idx > 13) throw DecodeError("invalid TL2 index", r, r * ib + g / 2);
      if (s && idx == 0) throw DecodeError("non-canonical zero", r, r * p.sign_row_bytes() + g / 8, 1);
    }
  }
}

TernaryMatrix decode_tl2(const PackedTL2& p) {
  validate(p);
  TernaryValues v(static_cast<Eigen::Index>(p.rows()), static_cast<Eigen::Index>(p.cols()));
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const std::uint8_t* isrc = p.index_row(r);
    const std::uint8_t* ssrc = p.sign_row(r);
    std::int8_t* dst = v.data() + r * p.cols();
    for (std::size_t c = 0; c < p.cols(); ++c) {
      const std::size_t g = c / 3;
      const auto idx = static_cast<std::uint8_t>((isrc[g / 2] >> (4 * (g % 2))) & 0x0F);
      const bool s = (ssrc[g / 8] >> (g % 8)) & 1;
      dst[c] = tl2_pattern(s, idx)[c % 3];
    }
  }
  return TernaryMatrix(std::move(v), p.scale());
}

}  // namespace ternkern
