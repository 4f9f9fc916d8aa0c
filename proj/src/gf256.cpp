#include "prac/gf256.hpp"

#include <array>

namespace prac {
namespace gf {

uint8_t mul_bitserial(uint8_t a, uint8_t b) {
  uint16_t acc = 0;
  uint16_t aa = a;
  for (int bit = 0; bit < 8; ++bit) {
    if (b & (1 << bit)) acc ^= aa << bit;
  }
  for (int bit = 15; bit >= 8; --bit) {
    if (acc & (1 << bit)) acc ^= kReductionPoly << (bit - 8);
  }
  return static_cast<uint8_t>(acc);
}

namespace {

struct Tables {
  std::array<uint8_t, 256> log{};
  std::array<uint8_t, 512> alog{};

  Tables() {
    // 0x03 is a generator of the multiplicative group for this polynomial.
    uint8_t p = 1;
    for (int e = 0; e < 255; ++e) {
      alog[e] = p;
      log[p] = static_cast<uint8_t>(e);
      p = mul_bitserial(p, 0x03);
    }
    for (int e = 255; e < 512; ++e) alog[e] = alog[e - 255];
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

const uint8_t* log_table() { return tables().log.data(); }
const uint8_t* alog_table() { return tables().alog.data(); }

}  // namespace gf

FieldMatrix::FieldMatrix(std::size_t rows, std::size_t cols, std::vector<uint8_t> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw DomainError("matrix data size mismatch");
}

FieldMatrix FieldMatrix::identity(std::size_t n) {
  FieldMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

FieldMatrix FieldMatrix::random(std::size_t rows, std::size_t cols, Rng& rng) {
  FieldMatrix m(rows, cols);
  rng.fill_bytes(m.data_);
  return m;
}

void xor_into(std::span<uint8_t> acc, std::span<const uint8_t> src) {
  if (acc.size() != src.size()) throw DomainError("xor_into length mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] ^= src[i];
}

void add_scaled_into(std::span<uint8_t> acc, std::span<const uint8_t> src, uint8_t coeff) {
  if (acc.size() != src.size()) throw DomainError("add_scaled_into length mismatch");
  if (coeff == 0) return;
  if (coeff == 1) {
    xor_into(acc, src);
    return;
  }
  const uint8_t* log = gf::log_table();
  const uint8_t* alog = gf::alog_table();
  unsigned lc = log[coeff];
  for (std::size_t i = 0; i < acc.size(); ++i) {
    uint8_t s = src[i];
    if (s) acc[i] ^= alog[lc + log[s]];
  }
}

void FieldMatrix::add_in_place(const FieldMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw DomainError("matrix add shape mismatch");
  xor_into(data_, other.data_);
}

void FieldMatrix::add_scaled(const FieldMatrix& other, uint8_t coeff) {
  if (rows_ != other.rows_ || cols_ != other.cols_)
    throw DomainError("matrix add shape mismatch");
  add_scaled_into(data_, other.data_, coeff);
}

FieldMatrix FieldMatrix::added(const FieldMatrix& other) const {
  FieldMatrix out = *this;
  out.add_in_place(other);
  return out;
}

FieldMatrix FieldMatrix::scaled(uint8_t coeff) const {
  FieldMatrix out(rows_, cols_);
  out.add_scaled(*this, coeff);
  return out;
}

FieldMatrix FieldMatrix::mul(const FieldMatrix& other) const {
  if (cols_ != other.rows_) throw DomainError("matrix product shape mismatch");
  FieldMatrix out(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      uint8_t a = at(i, k);
      if (a == 0) continue;
      add_scaled_into(
          std::span<uint8_t>(out.data_).subspan(i * out.cols_, out.cols_),
          other.row(k), a);
    }
  }
  return out;
}

FieldMatrix mat_vec_mul(const FieldMatrix& m, const FieldMatrix& v) {
  if (v.cols() != 1) throw DomainError("mat_vec_mul needs a column vector");
  if (m.cols() != v.rows()) throw DomainError("mat_vec_mul shape mismatch");
  return m.mul(v);
}

FieldMatrix FieldMatrix::inverse() const {
  if (rows_ != cols_) throw DomainError("only square matrices can be inverted");
  std::size_t n = rows_;
  FieldMatrix a = *this;
  FieldMatrix inv = identity(n);

  for (std::size_t col = 0; col < n; ++col) {
    // First nonzero pivot; there is no magnitude to prefer in a finite field.
    std::size_t pivot = col;
    while (pivot < n && a.at(pivot, col) == 0) ++pivot;
    if (pivot == n) throw SingularMatrixError(col);
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a.at(pivot, j), a.at(col, j));
        std::swap(inv.at(pivot, j), inv.at(col, j));
      }
    }
    uint8_t scale = gf::inv(a.at(col, col));
    for (std::size_t j = 0; j < n; ++j) {
      a.at(col, j) = gf::mul(a.at(col, j), scale);
      inv.at(col, j) = gf::mul(inv.at(col, j), scale);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      uint8_t factor = a.at(r, col);
      if (factor == 0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a.at(r, j) ^= gf::mul(factor, a.at(col, j));
        inv.at(r, j) ^= gf::mul(factor, inv.at(col, j));
      }
    }
  }
  return inv;
}

void FieldMatrix::serialize(ByteWriter& w) const {
  w.u32(static_cast<uint32_t>(rows_));
  w.u32(static_cast<uint32_t>(cols_));
  w.raw(data_);
}

std::vector<uint8_t> FieldMatrix::serialize() const {
  ByteWriter w;
  serialize(w);
  return w.take();
}

FieldMatrix FieldMatrix::deserialize(ByteReader& r) {
  uint32_t rows = r.u32();
  uint32_t cols = r.u32();
  auto raw = r.raw(static_cast<std::size_t>(rows) * cols);
  return FieldMatrix(rows, cols, std::vector<uint8_t>(raw.begin(), raw.end()));
}

FieldMatrix FieldMatrix::deserialize(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  FieldMatrix m = deserialize(r);
  if (!r.done()) throw ProtocolError("trailing bytes after matrix");
  return m;
}

}  // namespace prac
