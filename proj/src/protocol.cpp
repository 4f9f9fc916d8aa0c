#include "prac/protocol.hpp"

#include <algorithm>

#include "prac/errors.hpp"

namespace prac {

double dispatch_time(const BetaEstimator& beta, double now, double last_sent,
                     std::optional<double> last_result) {
  if (beta.samples() == 0) {
    return last_result ? std::max(now, *last_result) : now;
  }
  double planned = last_sent + beta.mean();
  if (last_result) planned = std::min(planned, *last_result);
  return std::max(now, planned);
}

MasterState::MasterState(FieldMatrix a, MasterConfig cfg)
    : cfg_(cfg),
      m_(a.rows()),
      data_cols_(a.cols()),
      degree_dist_(cfg.b, cfg.soliton_c, cfg.soliton_delta),
      rng_(derive_seed(cfg.seed, {0x6d61737465ULL})),
      decoder_(cfg.b, 0) {
  if (cfg_.n == 0) throw DomainError("need at least one worker");
  if (cfg_.z >= cfg_.n) throw DomainError("z must be smaller than n");
  if (cfg_.b == 0) throw DomainError("need at least one row block");
  if (a.rows() == 0 || a.cols() == 0) throw DomainError("empty data matrix");

  // Zero-pad so b divides the row count, then slice into row blocks.
  block_rows_ = (m_ + cfg_.b - 1) / cfg_.b;
  blocks_.reserve(cfg_.b);
  for (uint32_t i = 0; i < cfg_.b; ++i) {
    FieldMatrix blk(block_rows_, data_cols_);
    for (std::size_t r = 0; r < block_rows_; ++r) {
      std::size_t src = static_cast<std::size_t>(i) * block_rows_ + r;
      if (src >= m_) break;
      for (std::size_t c = 0; c < data_cols_; ++c) blk.at(r, c) = a.at(src, c);
    }
    blocks_.push_back(std::move(blk));
  }

  if (cfg_.z > 0) generator_ = KeyGenerator::systematic_vandermonde(cfg_.n, cfg_.z);
  spec_source_ = [this](Rng& rng) { return sample_spec(degree_dist_, rng); };
  worker_round_.assign(cfg_.n, 1);
  beta_.resize(cfg_.n);
  decoder_ = PeelingState(cfg_.b, block_rows_);
}

void MasterState::set_spec_source(std::function<FountainSpec(Rng&)> source) {
  spec_source_ = std::move(source);
}

RoundKeys& MasterState::keys_for_round(uint32_t round) {
  auto it = round_keys_.find(round);
  if (it == round_keys_.end()) {
    it = round_keys_
             .emplace(round, fresh_round_keys(round, block_rows_, data_cols_, cfg_.z, rng_))
             .first;
    key_results_[round].assign(cfg_.z, std::nullopt);
  }
  return it->second;
}

bool MasterState::round_keys_complete(uint32_t round) const {
  if (cfg_.z == 0) return true;
  auto it = key_results_.find(round);
  if (it == key_results_.end()) return false;
  for (const auto& slot : it->second)
    if (!slot) return false;
  return true;
}

Packet MasterState::next_packet(uint32_t worker) {
  if (stopped_) throw StateError("packet requested after stop");
  if (worker >= cfg_.n) throw DomainError("worker index out of range");

  uint32_t round = worker_round_[worker];
  uint32_t slot = ++round_rank_[round];

  Packet p;
  p.worker = worker;
  p.round = round;
  p.slot = slot;

  if (cfg_.z > 0) {
    // Keys for a round come to life when its first worker arrives.
    RoundKeys& rk = keys_for_round(round);
    if (slot <= cfg_.z) {
      p.kind = PacketKind::Key;
      p.key_index = slot;
      p.payload = rk.keys[slot - 1];
    } else {
      p.kind = PacketKind::Secure;
      p.g_row = slot;
      p.spec = spec_source_(rng_);
      p.spec.validate(cfg_.b);
      p.payload = fountain_encode(blocks_, p.spec);
      p.payload.add_in_place(generator_->encode_key_row(slot, rk));
    }
  } else {
    p.kind = PacketKind::Secure;
    p.g_row = slot;
    p.spec = spec_source_(rng_);
    p.spec.validate(cfg_.b);
    p.payload = fountain_encode(blocks_, p.spec);
  }

  outstanding_[{worker, round}] =
      Outstanding{slot, p.kind, p.key_index, p.g_row, p.spec};
  worker_round_[worker] = round + 1;
  ++packets_sent_;
  return p;
}

std::size_t MasterState::ingest_secure(uint32_t round, const GatedSecure& s) {
  if (decoder_.is_complete()) return 0;  // stream is about to stop
  std::vector<uint8_t> packet_x = s.result;
  if (cfg_.z > 0) {
    const auto& slots = key_results_.at(round);
    std::vector<std::vector<uint8_t>> key_vecs;
    key_vecs.reserve(cfg_.z);
    for (const auto& kv : slots) key_vecs.push_back(*kv);
    xor_into(packet_x, generator_->combine_key_results(s.g_row, key_vecs));
  }
  consumed_rounds_.insert(round);
  return decoder_.ingest(s.spec, std::move(packet_x));
}

std::size_t MasterState::on_result(const ResultMsg& msg, double service_sample) {
  if (msg.worker >= cfg_.n) throw ProtocolError("result from unknown worker");
  auto key = std::make_pair(msg.worker, msg.round);
  auto it = outstanding_.find(key);
  if (it == outstanding_.end()) {
    if (msg.round >= 1 && msg.round < worker_round_[msg.worker]) return 0;  // duplicate
    throw ProtocolError("result for a packet that was never sent");
  }
  if (msg.result.size() != block_rows_) throw ProtocolError("result length mismatch");

  beta_[msg.worker].observe(service_sample);

  Outstanding out = it->second;
  outstanding_.erase(it);

  std::size_t newly = 0;
  if (out.kind == PacketKind::Key) {
    key_results_[msg.round][out.key_index - 1] = msg.result;
    if (round_keys_complete(msg.round)) {
      auto gated = gated_.find(msg.round);
      if (gated != gated_.end()) {
        for (const GatedSecure& s : gated->second) newly += ingest_secure(msg.round, s);
        gated_.erase(gated);
      }
    }
  } else {
    GatedSecure s{out.g_row, out.spec, msg.result};
    if (round_keys_complete(msg.round)) {
      newly += ingest_secure(msg.round, s);
    } else {
      gated_[msg.round].push_back(std::move(s));
    }
  }
  return newly;
}

std::optional<FieldMatrix> MasterState::try_finish() {
  if (result_) return result_;
  if (!decoder_.is_complete()) return std::nullopt;

  auto blocks = decoder_.decoded();
  FieldMatrix out(m_, 1);
  std::size_t row = 0;
  for (const auto& blk : blocks) {
    for (std::size_t r = 0; r < block_rows_ && row < m_; ++r, ++row)
      out.at(row, 0) = blk[r];
  }
  stopped_ = true;
  result_ = std::move(out);
  return result_;
}

FieldMatrix run_lockstep(const FieldMatrix& a, const FieldMatrix& x,
                         const MasterConfig& cfg, LockstepTranscript* transcript) {
  if (x.cols() != 1 || x.rows() != a.cols())
    throw DomainError("multiplicand shape mismatch");
  MasterState master(a, cfg);
  if (transcript) transcript->vector_sent = x;

  while (!master.stopped()) {
    std::vector<ResultMsg> sweep;
    for (uint32_t w = 0; w < cfg.n; ++w) {
      Packet p = master.next_packet(w);
      ResultMsg r{w, p.round, p.slot, {}};
      FieldMatrix product = mat_vec_mul(p.payload, x);
      r.result.assign(product.data().begin(), product.data().end());
      if (transcript) transcript->packets.push_back(std::move(p));
      sweep.push_back(std::move(r));
    }
    for (auto it = sweep.rbegin(); it != sweep.rend(); ++it) {
      master.on_result(*it, 1.0);
      if (master.try_finish()) break;
    }
  }
  return *master.try_finish();
}

FieldMatrix hide_x_run(const FieldMatrix& a, const FieldMatrix& x,
                       const HideXConfig& cfg, HideXTranscript* transcript) {
  if (cfg.n1 <= cfg.z1 || cfg.n2 <= cfg.z2)
    throw DomainError("degenerate worker group: size must exceed z");
  if (x.cols() != 1 || x.rows() != a.cols())
    throw DomainError("multiplicand shape mismatch");

  Rng rng(derive_seed(cfg.seed, {0x6d61736bULL}));
  FieldMatrix mask = FieldMatrix::random(x.rows(), 1, rng);
  FieldMatrix masked = x.added(mask);

  MasterConfig g1{cfg.n1, cfg.z1, cfg.b, derive_seed(cfg.seed, {1})};
  MasterConfig g2{cfg.n2, cfg.z2, cfg.b, derive_seed(cfg.seed, {2})};

  if (transcript) transcript->mask = mask;
  FieldMatrix y1 =
      run_lockstep(a, masked, g1, transcript ? &transcript->group1 : nullptr);
  FieldMatrix y2 =
      run_lockstep(a, mask, g2, transcript ? &transcript->group2 : nullptr);
  return y1.added(y2);
}

}  // namespace prac
