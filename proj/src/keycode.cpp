#include "prac/keycode.hpp"

#include "prac/errors.hpp"

namespace prac {

RoundKeys fresh_round_keys(uint32_t round, std::size_t rows, std::size_t cols,
                           uint32_t z, Rng& rng) {
  if (rows == 0 || cols == 0) throw DomainError("key dimensions must be positive");
  RoundKeys rk;
  rk.round = round;
  rk.keys.reserve(z);
  for (uint32_t i = 0; i < z; ++i) rk.keys.push_back(FieldMatrix::random(rows, cols, rng));
  return rk;
}

KeyGenerator KeyGenerator::systematic_vandermonde(uint32_t n, uint32_t z) {
  if (z == 0 || z >= n || n > 255)
    throw DomainError("key generator requires 0 < z < n <= 255");

  // Rows (1, a_j, a_j^2, ..., a_j^{z-1}) on the distinct nonzero points 1..n.
  FieldMatrix v(n, z);
  for (uint32_t j = 0; j < n; ++j) {
    uint8_t point = static_cast<uint8_t>(j + 1);
    uint8_t p = 1;
    for (uint32_t i = 0; i < z; ++i) {
      v.at(j, i) = p;
      p = gf::mul(p, point);
    }
  }

  FieldMatrix top(z, z);
  for (uint32_t j = 0; j < z; ++j)
    for (uint32_t i = 0; i < z; ++i) top.at(j, i) = v.at(j, i);

  return KeyGenerator(v.mul(top.inverse()));
}

KeyGenerator KeyGenerator::from_matrix(FieldMatrix g) {
  if (g.rows() == 0 || g.cols() == 0 || g.cols() >= g.rows())
    throw DomainError("generator must be n x z with z < n");
  return KeyGenerator(std::move(g));
}

std::span<const uint8_t> KeyGenerator::row(uint32_t j) const {
  if (j < 1 || j > n()) throw DomainError("generator row index out of range");
  return g_.row(j - 1);
}

FieldMatrix KeyGenerator::encode_key_row(uint32_t j, const RoundKeys& keys) const {
  if (keys.keys.size() != z()) throw DomainError("round key count mismatch");
  auto coeffs = row(j);
  FieldMatrix out(keys.keys[0].rows(), keys.keys[0].cols());
  for (uint32_t i = 0; i < z(); ++i) out.add_scaled(keys.keys[i], coeffs[i]);
  return out;
}

std::vector<uint8_t> KeyGenerator::combine_key_results(
    uint32_t j, std::span<const std::vector<uint8_t>> key_results) const {
  if (key_results.size() != z()) throw DomainError("need exactly z key results");
  auto coeffs = row(j);
  std::size_t len = key_results[0].size();
  for (const auto& kr : key_results)
    if (kr.size() != len) throw DomainError("key result length mismatch");
  std::vector<uint8_t> out(len, 0);
  for (uint32_t i = 0; i < z(); ++i) add_scaled_into(out, key_results[i], coeffs[i]);
  return out;
}

std::optional<std::vector<uint32_t>> find_singular_subset(const FieldMatrix& g) {
  uint32_t n = static_cast<uint32_t>(g.rows());
  uint32_t z = static_cast<uint32_t>(g.cols());
  if (z == 0 || z > n) throw DomainError("audit needs an n x z generator, z <= n");

  std::vector<uint32_t> pick(z);
  for (uint32_t i = 0; i < z; ++i) pick[i] = i;

  for (;;) {
    FieldMatrix sub(z, z);
    for (uint32_t r = 0; r < z; ++r)
      for (uint32_t c = 0; c < z; ++c) sub.at(r, c) = g.at(pick[r], c);
    try {
      (void)sub.inverse();
    } catch (const SingularMatrixError&) {
      std::vector<uint32_t> rows1(z);
      for (uint32_t i = 0; i < z; ++i) rows1[i] = pick[i] + 1;
      return rows1;
    }

    // Next combination in lexicographic order.
    int i = static_cast<int>(z) - 1;
    while (i >= 0 && pick[i] == n - z + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (uint32_t j = i + 1; j < z; ++j) pick[j] = pick[j - 1] + 1;
  }
  return std::nullopt;
}

}  // namespace prac
