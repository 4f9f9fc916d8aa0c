#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "prac/bytes.hpp"
#include "prac/gf256.hpp"
#include "prac/rng.hpp"

namespace prac {

// Which source blocks an information packet XORs together. Indices are
// 0-based, strictly increasing and all below the block count.
struct FountainSpec {
  std::vector<uint32_t> blocks;

  static FountainSpec single(uint32_t index) { return FountainSpec{{index}}; }
  std::size_t degree() const { return blocks.size(); }
  void validate(uint32_t block_count) const;

  bool operator==(const FountainSpec&) const = default;

  // Wire form: u16 count, then count u32 indices, all big-endian.
  void serialize(ByteWriter& w) const;
  static FountainSpec deserialize(ByteReader& r);
};

// Robust soliton degree distribution over 1..b.
class DegreeDistribution {
 public:
  static constexpr double kDefaultC = 0.03;
  static constexpr double kDefaultDelta = 0.5;

  DegreeDistribution(uint32_t b, double c = kDefaultC, double delta = kDefaultDelta);

  uint32_t block_count() const { return b_; }
  double pmf(uint32_t degree) const;  // 1-based degree
  uint32_t sample_degree(Rng& rng) const;

 private:
  uint32_t b_;
  std::vector<double> pmf_;
  std::vector<double> cumulative_;
};

// Draws a degree, then that many distinct block indices uniformly.
FountainSpec sample_spec(const DegreeDistribution& dist, Rng& rng);

// XOR of the selected blocks; all blocks must share one shape.
FieldMatrix fountain_encode(std::span<const FieldMatrix> blocks, const FountainSpec& spec);

// Peeling decoder. Payloads are the raw bytes of one block-sized unit
// (a block of A during encode tests, a block of A*x during protocol runs).
class PeelingState {
 public:
  PeelingState(uint32_t block_count, std::size_t payload_len);

  // Returns the number of source blocks newly recovered (cascades count).
  // Identical duplicates are ignored; conflicting duplicates raise
  // IntegrityError.
  std::size_t ingest(const FountainSpec& spec, std::vector<uint8_t> payload);

  bool is_complete() const { return recovered_count_ == block_count_; }
  uint32_t block_count() const { return block_count_; }
  uint32_t recovered_count() const { return recovered_count_; }
  uint64_t received_count() const { return received_count_; }
  // Fountain overhead: packets ingested beyond the b needed. Frozen at the
  // ingest that completed the decode; later redundant packets don't count.
  int64_t epsilon() const {
    uint64_t at = is_complete() ? received_at_completion_ : received_count_;
    return static_cast<int64_t>(at) - static_cast<int64_t>(block_count_);
  }

  // Decoded blocks in index order; StateError before completion.
  std::vector<std::vector<uint8_t>> decoded() const;

 private:
  struct Pending {
    std::vector<uint32_t> blocks;  // residual, always degree >= 2
    std::vector<uint8_t> payload;
    bool alive = true;
  };

  void recover_cascade(uint32_t index, std::vector<uint8_t> payload, std::size_t& newly);

  uint32_t block_count_;
  std::size_t payload_len_;
  uint32_t recovered_count_ = 0;
  uint64_t received_count_ = 0;
  uint64_t received_at_completion_ = 0;
  std::vector<std::optional<std::vector<uint8_t>>> recovered_;
  std::vector<Pending> pending_;
  std::vector<std::vector<std::size_t>> by_block_;  // block -> pending ids
};

}  // namespace prac
