#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>

namespace prac {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t v = (state += 0x9e3779b97f4a7c15ULL);
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
  return v ^ (v >> 31);
}

// Derives an independent stream seed from a base seed and a path of tags.
// Used to give every (trial, worker, purpose) its own generator so paired
// experiments can replay the exact same delay samples.
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> path) {
  uint64_t s = base;
  (void)splitmix64(s);
  for (uint64_t p : path) {
    s ^= 0x632be59bd9b4e019ULL ^ p;
    (void)splitmix64(s);
  }
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 significant bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("below(0)");
    uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t r = engine_();
      if (r >= threshold) return r % n;
    }
  }

  uint8_t byte() {
    if (pool_bytes_ == 0) {
      pool_ = engine_();
      pool_bytes_ = 8;
    }
    uint8_t b = static_cast<uint8_t>(pool_);
    pool_ >>= 8;
    --pool_bytes_;
    return b;
  }

  void fill_bytes(std::span<uint8_t> out) {
    for (auto& b : out) b = byte();
  }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

  double shifted_exponential(double shift, double rate) {
    return shift + exponential(rate);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  uint64_t pool_ = 0;
  int pool_bytes_ = 0;
};

}  // namespace prac
