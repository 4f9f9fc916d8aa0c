#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "prac/bytes.hpp"
#include "prac/errors.hpp"
#include "prac/rng.hpp"

namespace prac {

// Arithmetic in GF(2^8) with the reduction polynomial x^8+x^4+x^3+x+1 (0x11b).
// Addition is XOR, multiplication goes through log/antilog tables built once
// at startup from the bit-serial reference implementation.
namespace gf {

inline constexpr uint16_t kReductionPoly = 0x11b;

// Bit-serial carry-less multiply-and-reduce. Slow; kept as the oracle the
// tables are built from and checked against.
uint8_t mul_bitserial(uint8_t a, uint8_t b);

const uint8_t* log_table();   // log_table()[0] is unused
const uint8_t* alog_table();  // doubled so mul can skip the mod 255

inline uint8_t add(uint8_t a, uint8_t b) { return a ^ b; }

inline uint8_t mul(uint8_t a, uint8_t b) {
  if (a == 0 || b == 0) return 0;
  return alog_table()[log_table()[a] + log_table()[b]];
}

inline uint8_t inv(uint8_t a) {
  if (a == 0) throw DomainError("inverse of zero in GF(256)");
  return alog_table()[255 - log_table()[a]];
}

}  // namespace gf

// Dense row-major matrix over GF(2^8). Carrier for the data matrix, its row
// blocks, key matrices and payloads.
class FieldMatrix {
 public:
  FieldMatrix() = default;
  FieldMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0) {}
  FieldMatrix(std::size_t rows, std::size_t cols, std::vector<uint8_t> data);

  static FieldMatrix identity(std::size_t n);
  static FieldMatrix random(std::size_t rows, std::size_t cols, Rng& rng);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  uint8_t at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  uint8_t& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  std::span<const uint8_t> row(std::size_t r) const {
    return std::span<const uint8_t>(data_).subspan(r * cols_, cols_);
  }
  std::span<const uint8_t> data() const { return data_; }

  // this += other (XOR), shapes must match.
  void add_in_place(const FieldMatrix& other);
  // this += coeff * other.
  void add_scaled(const FieldMatrix& other, uint8_t coeff);

  FieldMatrix added(const FieldMatrix& other) const;
  FieldMatrix scaled(uint8_t coeff) const;
  FieldMatrix mul(const FieldMatrix& other) const;
  FieldMatrix inverse() const;  // SingularMatrixError when no pivot exists

  bool operator==(const FieldMatrix&) const = default;

  // rows u32be, cols u32be, then row-major bytes.
  void serialize(ByteWriter& w) const;
  std::vector<uint8_t> serialize() const;
  static FieldMatrix deserialize(ByteReader& r);
  static FieldMatrix deserialize(std::span<const uint8_t> bytes);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<uint8_t> data_;
};

// Standard matrix-vector product; v must be a single column with
// v.rows() == m.cols().
FieldMatrix mat_vec_mul(const FieldMatrix& m, const FieldMatrix& v);

// XOR accumulate over raw byte spans of equal length.
void xor_into(std::span<uint8_t> acc, std::span<const uint8_t> src);
// acc += coeff * src, element-wise.
void add_scaled_into(std::span<uint8_t> acc, std::span<const uint8_t> src, uint8_t coeff);

}  // namespace prac
