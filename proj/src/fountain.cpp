#include "prac/fountain.hpp"

#include <algorithm>
#include <cmath>

#include "prac/errors.hpp"

namespace prac {

void FountainSpec::validate(uint32_t block_count) const {
  if (blocks.empty()) throw DomainError("fountain spec must not be empty");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i] >= block_count) throw DomainError("fountain spec index out of range");
    if (i > 0 && blocks[i] <= blocks[i - 1])
      throw DomainError("fountain spec indices must be strictly increasing");
  }
}

void FountainSpec::serialize(ByteWriter& w) const {
  w.u16(static_cast<uint16_t>(blocks.size()));
  for (uint32_t b : blocks) w.u32(b);
}

FountainSpec FountainSpec::deserialize(ByteReader& r) {
  uint16_t count = r.u16();
  FountainSpec spec;
  spec.blocks.reserve(count);
  for (uint16_t i = 0; i < count; ++i) spec.blocks.push_back(r.u32());
  return spec;
}

DegreeDistribution::DegreeDistribution(uint32_t b, double c, double delta) : b_(b) {
  if (b == 0) throw DomainError("degree distribution needs at least one block");
  if (c <= 0 || delta <= 0 || delta >= 1) throw DomainError("bad soliton parameters");

  std::vector<double> mass(b + 1, 0.0);
  // Ideal soliton.
  mass[1] = 1.0 / b;
  for (uint32_t d = 2; d <= b; ++d)
    mass[d] = 1.0 / (static_cast<double>(d) * (d - 1));
  // Robust correction with spike at b/R.
  double r = c * std::log(b / delta) * std::sqrt(static_cast<double>(b));
  if (r > 0) {
    uint32_t spike = static_cast<uint32_t>(std::ceil(b / r));
    spike = std::min(std::max<uint32_t>(spike, 1), b);
    for (uint32_t d = 1; d < spike; ++d) mass[d] += r / (static_cast<double>(d) * b);
    if (r > delta) mass[spike] += r * std::log(r / delta) / b;
  }

  double total = 0;
  for (uint32_t d = 1; d <= b; ++d) total += mass[d];
  pmf_.assign(b, 0.0);
  cumulative_.assign(b, 0.0);
  double acc = 0;
  for (uint32_t d = 1; d <= b; ++d) {
    pmf_[d - 1] = mass[d] / total;
    acc += pmf_[d - 1];
    cumulative_[d - 1] = acc;
  }
  cumulative_[b - 1] = 1.0;
}

double DegreeDistribution::pmf(uint32_t degree) const {
  if (degree < 1 || degree > b_) return 0.0;
  return pmf_[degree - 1];
}

uint32_t DegreeDistribution::sample_degree(Rng& rng) const {
  double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return static_cast<uint32_t>(it - cumulative_.begin()) + 1;
}

FountainSpec sample_spec(const DegreeDistribution& dist, Rng& rng) {
  uint32_t b = dist.block_count();
  uint32_t d = dist.sample_degree(rng);
  FountainSpec spec;
  spec.blocks.reserve(d);
  // Floyd's algorithm: d distinct indices without replacement.
  for (uint32_t j = b - d; j < b; ++j) {
    uint32_t candidate = static_cast<uint32_t>(rng.below(j + 1));
    if (std::find(spec.blocks.begin(), spec.blocks.end(), candidate) != spec.blocks.end())
      candidate = j;
    spec.blocks.push_back(candidate);
  }
  std::sort(spec.blocks.begin(), spec.blocks.end());
  return spec;
}

FieldMatrix fountain_encode(std::span<const FieldMatrix> blocks, const FountainSpec& spec) {
  spec.validate(static_cast<uint32_t>(blocks.size()));
  FieldMatrix out = blocks[spec.blocks[0]];
  for (std::size_t i = 1; i < spec.blocks.size(); ++i) {
    const FieldMatrix& blk = blocks[spec.blocks[i]];
    if (blk.rows() != out.rows() || blk.cols() != out.cols())
      throw DomainError("fountain blocks must share one shape");
    out.add_in_place(blk);
  }
  return out;
}

PeelingState::PeelingState(uint32_t block_count, std::size_t payload_len)
    : block_count_(block_count),
      payload_len_(payload_len),
      recovered_(block_count),
      by_block_(block_count) {
  if (block_count == 0) throw DomainError("decoder needs at least one block");
}

std::size_t PeelingState::ingest(const FountainSpec& spec, std::vector<uint8_t> payload) {
  spec.validate(block_count_);
  if (payload.size() != payload_len_) throw DomainError("payload length mismatch");
  ++received_count_;

  // Reduce against already-recovered blocks.
  std::vector<uint32_t> residual;
  residual.reserve(spec.blocks.size());
  for (uint32_t idx : spec.blocks) {
    if (recovered_[idx]) {
      xor_into(payload, *recovered_[idx]);
    } else {
      residual.push_back(idx);
    }
  }

  if (residual.empty()) {
    for (uint8_t byte : payload)
      if (byte != 0) throw IntegrityError("redundant packet disagrees with decoded blocks");
    return 0;
  }

  std::size_t newly = 0;
  if (residual.size() == 1) {
    recover_cascade(residual[0], std::move(payload), newly);
    if (is_complete() && received_at_completion_ == 0)
      received_at_completion_ = received_count_;
    return newly;
  }

  // Degree >= 2: detect duplicates of the same residual before storing.
  for (std::size_t pid : by_block_[residual[0]]) {
    Pending& p = pending_[pid];
    if (!p.alive || p.blocks != residual) continue;
    if (p.payload != payload)
      throw IntegrityError("duplicate spec with conflicting payload");
    return 0;
  }

  std::size_t pid = pending_.size();
  pending_.push_back(Pending{residual, std::move(payload)});
  for (uint32_t idx : residual) by_block_[idx].push_back(pid);
  return 0;
}

void PeelingState::recover_cascade(uint32_t index, std::vector<uint8_t> payload,
                                   std::size_t& newly) {
  std::vector<std::pair<uint32_t, std::vector<uint8_t>>> work;
  work.emplace_back(index, std::move(payload));

  while (!work.empty()) {
    auto [idx, value] = std::move(work.back());
    work.pop_back();
    if (recovered_[idx]) {
      if (*recovered_[idx] != value)
        throw IntegrityError("conflicting recovery for block " + std::to_string(idx));
      continue;
    }
    recovered_[idx] = std::move(value);
    ++recovered_count_;
    ++newly;

    auto ids = std::move(by_block_[idx]);
    by_block_[idx].clear();
    for (std::size_t pid : ids) {
      Pending& p = pending_[pid];
      if (!p.alive) continue;
      auto it = std::find(p.blocks.begin(), p.blocks.end(), idx);
      if (it == p.blocks.end()) continue;
      p.blocks.erase(it);
      xor_into(p.payload, *recovered_[idx]);
      if (p.blocks.size() == 1) {
        p.alive = false;
        work.emplace_back(p.blocks[0], std::move(p.payload));
      }
    }
  }
}

std::vector<std::vector<uint8_t>> PeelingState::decoded() const {
  if (!is_complete()) throw StateError("decode requested before completion");
  std::vector<std::vector<uint8_t>> out;
  out.reserve(block_count_);
  for (const auto& blk : recovered_) out.push_back(*blk);
  return out;
}

}  // namespace prac
