#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "prac/gf256.hpp"
#include "prac/rng.hpp"

namespace prac {

// The z fresh one-time-pad key matrices of round t, each block-sized.
struct RoundKeys {
  uint32_t round = 0;
  std::vector<FieldMatrix> keys;
};

RoundKeys fresh_round_keys(uint32_t round, std::size_t rows, std::size_t cols,
                           uint32_t z, Rng& rng);

// Systematic (n, z) MDS generator for the round keys. Row j <= z is the j-th
// identity row, so the first z coded keys are the keys themselves; rows
// beyond z mix all z keys such that any z rows form an invertible matrix.
class KeyGenerator {
 public:
  // Vandermonde on the field points 1..n, right-multiplied by the inverse of
  // its top z x z block. Requires 0 < z < n <= 255.
  static KeyGenerator systematic_vandermonde(uint32_t n, uint32_t z);
  // Wraps an explicit generator matrix (fixtures, audits).
  static KeyGenerator from_matrix(FieldMatrix g);

  uint32_t n() const { return static_cast<uint32_t>(g_.rows()); }
  uint32_t z() const { return static_cast<uint32_t>(g_.cols()); }
  const FieldMatrix& matrix() const { return g_; }
  // 1-indexed row.
  std::span<const uint8_t> row(uint32_t j) const;

  // sum_i G[j][i] * keys[i], the pad applied to the secure packet in slot j.
  FieldMatrix encode_key_row(uint32_t j, const RoundKeys& keys) const;

  // Same combination applied to the returned key products R_{t,i} x; by
  // linearity this equals encode_key_row(j) * x.
  std::vector<uint8_t> combine_key_results(
      uint32_t j, std::span<const std::vector<uint8_t>> key_results) const;

 private:
  explicit KeyGenerator(FieldMatrix g) : g_(std::move(g)) {}
  FieldMatrix g_;
};

// MDS audit: returns the first z-subset of rows (1-indexed) whose stacked
// submatrix is singular, or nullopt when every subset is invertible.
std::optional<std::vector<uint32_t>> find_singular_subset(const FieldMatrix& g);

}  // namespace prac
