#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "prac/fountain.hpp"
#include "prac/gf256.hpp"
#include "prac/keycode.hpp"
#include "prac/rng.hpp"

namespace prac {

enum class PacketKind : uint8_t { Key = 0, Secure = 1 };

// One unit sent master -> worker. Slot j is the arrival rank among workers
// reaching round t; slots 1..z carry keys, slots z+1..n carry secure packets.
struct Packet {
  uint32_t worker = 0;  // 0-based
  uint32_t round = 0;   // 1-based
  uint32_t slot = 0;    // 1-based
  PacketKind kind = PacketKind::Secure;
  uint32_t key_index = 0;  // 1..z, valid for keys
  uint32_t g_row = 0;      // z+1..n, valid for secure packets
  FountainSpec spec;       // empty for keys
  FieldMatrix payload;     // block_rows x data columns
};

struct ResultMsg {
  uint32_t worker = 0;
  uint32_t round = 0;
  uint32_t slot = 0;
  std::vector<uint8_t> result;  // payload * x, block_rows bytes
};

// Running mean of observed per-packet service times, one per worker.
class BetaEstimator {
 public:
  void observe(double seconds) {
    ++count_;
    mean_ += (seconds - mean_) / static_cast<double>(count_);
  }
  std::size_t samples() const { return count_; }
  double mean() const { return mean_; }

 private:
  std::size_t count_ = 0;
  double mean_ = 0;
};

// When the next packet to a worker should leave: after waiting the current
// per-packet estimate since the previous send, or right when the previous
// result lands, whichever is first. Without history the packet goes now
// (first packet) or when the pending first result returns.
double dispatch_time(const BetaEstimator& beta, double now, double last_sent,
                     std::optional<double> last_result);

struct MasterConfig {
  uint32_t n = 0;
  uint32_t z = 0;
  uint32_t b = 1;
  uint64_t seed = 0;
  double soliton_c = DegreeDistribution::kDefaultC;
  double soliton_delta = DegreeDistribution::kDefaultDelta;
};

// Master-side protocol state: round/slot assignment, secure packet
// construction, key subtraction, decode gating. Transport-agnostic; the
// simulator and the networked runtime drive it identically. Single-owner
// mutable: all calls must come from one logical owner.
class MasterState {
 public:
  MasterState(FieldMatrix a, MasterConfig cfg);

  uint32_t n() const { return cfg_.n; }
  uint32_t z() const { return cfg_.z; }
  uint32_t b() const { return cfg_.b; }
  std::size_t block_rows() const { return block_rows_; }
  std::size_t data_cols() const { return data_cols_; }

  // Test seam: replaces the robust-soliton spec sampler.
  void set_spec_source(std::function<FountainSpec(Rng&)> source);

  // Builds and registers the next packet for this worker. StateError once
  // stopped.
  Packet next_packet(uint32_t worker);

  // Ingests one worker result; service_sample feeds the worker's beta
  // estimator. Returns the number of source blocks newly decodable.
  // Duplicates are ignored, results for packets never sent raise
  // ProtocolError.
  std::size_t on_result(const ResultMsg& msg, double service_sample);

  // Once the decoder completes: assembles A*x (padding rows stripped),
  // stops the stream, and returns the product. Idempotent afterwards.
  std::optional<FieldMatrix> try_finish();

  bool stopped() const { return stopped_; }
  uint64_t packets_sent() const { return packets_sent_; }
  const BetaEstimator& beta(uint32_t worker) const { return beta_.at(worker); }
  double dispatch_time(uint32_t worker, double now, double last_sent,
                       std::optional<double> last_result) const {
    return prac::dispatch_time(beta_.at(worker), now, last_sent, last_result);
  }

  const PeelingState& decoder() const { return decoder_; }
  int64_t epsilon_observed() const { return decoder_.epsilon(); }
  // Rounds whose secure results have reached the decoder.
  const std::set<uint32_t>& consumed_rounds() const { return consumed_rounds_; }
  uint32_t worker_round(uint32_t worker) const { return worker_round_.at(worker); }

 private:
  struct Outstanding {
    uint32_t slot;
    PacketKind kind;
    uint32_t key_index;
    uint32_t g_row;
    FountainSpec spec;
  };
  struct GatedSecure {
    uint32_t g_row;
    FountainSpec spec;
    std::vector<uint8_t> result;
  };

  RoundKeys& keys_for_round(uint32_t round);
  bool round_keys_complete(uint32_t round) const;
  std::size_t ingest_secure(uint32_t round, const GatedSecure& s);

  MasterConfig cfg_;
  std::size_t m_ = 0;          // rows of A before padding
  std::size_t data_cols_ = 0;  // columns of A
  std::size_t block_rows_ = 0;
  std::vector<FieldMatrix> blocks_;
  std::optional<KeyGenerator> generator_;  // absent when z == 0
  DegreeDistribution degree_dist_;
  std::function<FountainSpec(Rng&)> spec_source_;
  Rng rng_;

  std::vector<uint32_t> worker_round_;          // next round per worker, 1-based
  std::map<uint32_t, uint32_t> round_rank_;     // arrivals so far per round
  std::map<uint32_t, RoundKeys> round_keys_;
  std::map<uint32_t, std::vector<std::optional<std::vector<uint8_t>>>> key_results_;
  std::map<uint32_t, std::vector<GatedSecure>> gated_;
  std::map<std::pair<uint32_t, uint32_t>, Outstanding> outstanding_;
  std::vector<BetaEstimator> beta_;
  PeelingState decoder_;
  std::set<uint32_t> consumed_rounds_;
  uint64_t packets_sent_ = 0;
  bool stopped_ = false;
  std::optional<FieldMatrix> result_;
};

// Synchronous driver: dispatches one packet per worker per sweep and plays
// the results back in reverse worker order (so decode gating is exercised).
// Useful for correctness runs and the vector-hiding composition; timing
// behaviour lives in the simulator.
struct LockstepTranscript {
  FieldMatrix vector_sent;      // the multiplicand handed to the workers
  std::vector<Packet> packets;  // every packet dispatched, in order
};

FieldMatrix run_lockstep(const FieldMatrix& a, const FieldMatrix& x,
                         const MasterConfig& cfg,
                         LockstepTranscript* transcript = nullptr);

// Two-group vector-hiding composition: group one privately computes
// A(x+u), group two Au, for a fresh uniform mask u; the difference is Ax
// and neither group ever sees x itself.
struct HideXConfig {
  uint32_t n1 = 0, z1 = 0;
  uint32_t n2 = 0, z2 = 0;
  uint32_t b = 1;
  uint64_t seed = 0;
};

struct HideXTranscript {
  FieldMatrix mask;  // u
  LockstepTranscript group1, group2;
};

FieldMatrix hide_x_run(const FieldMatrix& a, const FieldMatrix& x,
                       const HideXConfig& cfg, HideXTranscript* transcript = nullptr);

}  // namespace prac
