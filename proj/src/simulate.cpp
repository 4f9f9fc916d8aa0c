#include "prac/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>

#include "prac/errors.hpp"
#include "prac/stats.hpp"

namespace prac {

namespace {

// Stream purposes; every (trial seed, purpose, worker) pair is its own
// generator so paired experiments replay identical delay samples.
enum StreamTag : uint64_t {
  kService = 1,
  kTransmit = 2,
  kCapacity = 3,
  kLambda = 4,
  kProtocol = 5,
  kAdversary = 6,
  kData = 7,
  kTrial = 8,
};

uint64_t stream_seed(const SimConfig& cfg, uint64_t tag, uint64_t worker,
                     Scheme scheme) {
  uint64_t scheme_tag = cfg.paired ? 0 : static_cast<uint64_t>(scheme) + 1;
  return derive_seed(cfg.seed, {tag, worker, scheme_tag});
}

}  // namespace

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Prac: return "prac";
    case Scheme::Staircase: return "staircase";
    case Scheme::C3p: return "c3p";
    case Scheme::Gc3p: return "gc3p";
  }
  return "?";
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::One: return "1";
    case Scenario::Two: return "2";
    case Scenario::Three: return "3";
    case Scenario::Clustered: return "clustered";
    case Scenario::Custom: return "custom";
  }
  return "?";
}

std::string to_string(AdversaryRule r) {
  switch (r) {
    case AdversaryRule::Fastest: return "fastest";
    case AdversaryRule::Slowest: return "slowest";
    case AdversaryRule::Random: return "random";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "prac") return Scheme::Prac;
  if (s == "staircase") return Scheme::Staircase;
  if (s == "c3p") return Scheme::C3p;
  if (s == "gc3p") return Scheme::Gc3p;
  throw DomainError("unknown scheme: " + s);
}

Scenario parse_scenario(const std::string& s) {
  if (s == "1") return Scenario::One;
  if (s == "2") return Scenario::Two;
  if (s == "3") return Scenario::Three;
  if (s == "clustered") return Scenario::Clustered;
  if (s == "custom") return Scenario::Custom;
  throw DomainError("unknown scenario: " + s);
}

AdversaryRule parse_adversary_rule(const std::string& s) {
  if (s == "fastest") return AdversaryRule::Fastest;
  if (s == "slowest") return AdversaryRule::Slowest;
  if (s == "random") return AdversaryRule::Random;
  throw DomainError("unknown adversary rule: " + s);
}

void SimConfig::validate() const {
  if (n == 0 || z >= n) throw DomainError("simulation requires 0 <= z < n");
  if (b == 0 || m == 0 || ell == 0) throw DomainError("b, m, ell must be positive");
  if (scenario == Scenario::Custom && lambda_custom.size() != n)
    throw DomainError("custom scenario needs one lambda per worker");
  if (scenario == Scenario::Custom)
    for (double l : lambda_custom)
      if (l <= 0) throw DomainError("worker rates must be positive");
}

std::vector<double> trial_lambdas(const SimConfig& cfg) {
  cfg.validate();
  std::vector<double> lam(cfg.n);
  switch (cfg.scenario) {
    case Scenario::One: {
      // Half at 3, a quarter at 1, the remainder at 9: for n=50 this is the
      // 25/13/12 split.
      uint32_t half = cfg.n / 2;
      uint32_t quarter = (cfg.n + 3) / 4;
      for (uint32_t i = 0; i < cfg.n; ++i)
        lam[i] = i < half ? 3.0 : (i < half + quarter ? 1.0 : 9.0);
      break;
    }
    case Scenario::Two: {
      uint32_t third = cfg.n / 3;
      for (uint32_t i = 0; i < cfg.n; ++i)
        lam[i] = i < third ? 1.0 : (i < 2 * third ? 3.0 : 9.0);
      break;
    }
    case Scenario::Three: {
      Rng rng(stream_seed(cfg, kLambda, 0, Scheme::Prac));
      for (auto& l : lam) l = rng.uniform(0.5, 9.0);
      break;
    }
    case Scenario::Clustered: {
      // floor(z/2) fast, ceil(z/2) regular, and a homogeneous slow tail of
      // n-z workers.
      uint32_t fast = cfg.z / 2;
      uint32_t regular = cfg.z - fast;
      for (uint32_t i = 0; i < cfg.n; ++i)
        lam[i] = i < fast ? 9.0 : (i < fast + regular ? 3.0 : 1.0);
      break;
    }
    case Scenario::Custom:
      lam = cfg.lambda_custom;
      break;
  }
  return lam;
}

std::vector<double> trial_capacities(const SimConfig& cfg) {
  std::vector<double> cap(cfg.n);
  for (uint32_t w = 0; w < cfg.n; ++w) {
    Rng rng(stream_seed(cfg, kCapacity, w, Scheme::Prac));
    cap[w] = rng.uniform(10e6, 20e6);
  }
  return cap;
}

double sample_packet_service(double lambda, uint32_t b, Rng& rng) {
  double shift = 1.0 / (lambda * b);
  return rng.shifted_exponential(shift, lambda * b);
}

double expected_packet_service(double lambda, uint32_t b) {
  return 2.0 / (lambda * b);
}

double sample_transmission(double capacity_bps, double bits, Rng& rng) {
  if (bits <= 0) throw DomainError("transmission needs a positive bit count");
  std::poisson_distribution<long long> dist(capacity_bps);
  long long rate = dist(rng.engine());
  if (rate < 1) rate = 1;
  return bits / static_cast<double>(rate);
}

std::string csv_header() {
  return "scheme,n,z,b,m,ell,scenario,adversary_rule,trial,seed,"
         "completion_time_s,packets_sent,epsilon_observed";
}

std::string csv_row(const CompletionRecord& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%s,%u,%u,%u,%u,%u,%s,%s,%llu,%llu,%.12g,%llu,%lld",
                to_string(r.scheme).c_str(), r.n, r.z, r.b, r.m, r.ell,
                to_string(r.scenario).c_str(), to_string(r.adversary_rule).c_str(),
                static_cast<unsigned long long>(r.trial),
                static_cast<unsigned long long>(r.seed), r.completion_time,
                static_cast<unsigned long long>(r.packets_sent),
                static_cast<long long>(r.epsilon_observed));
  return buf;
}

namespace {

CompletionRecord base_record(Scheme scheme, const SimConfig& cfg) {
  CompletionRecord r;
  r.scheme = scheme;
  r.n = cfg.n;
  r.z = cfg.z;
  r.b = cfg.b;
  r.m = cfg.m;
  r.ell = cfg.ell;
  r.scenario = cfg.scenario;
  r.adversary_rule = cfg.adversary_rule;
  r.seed = cfg.seed;
  return r;
}

// Event-driven execution of the master state machine under sampled delays.
// `workers` maps engine slots to original worker ids so GC3P survivors keep
// their own delay streams.
struct EngineResult {
  double completion_time = 0;
  uint64_t packets_sent = 0;
  int64_t epsilon = 0;
  FieldMatrix product;
  RoundTrace trace;
};

EngineResult run_engine(const SimConfig& cfg, Scheme scheme, uint32_t z_effective,
                        std::span<const uint32_t> workers,
                        std::span<const double> lambdas,
                        std::span<const double> capacities,
                        const PracRunOptions& opts, FieldMatrix* expected_out) {
  const uint32_t n_eff = static_cast<uint32_t>(workers.size());

  Rng data_rng(stream_seed(cfg, kData, 0, scheme));
  FieldMatrix a = FieldMatrix::random(cfg.m, cfg.data_cols, data_rng);
  FieldMatrix x = FieldMatrix::random(cfg.data_cols, 1, data_rng);
  if (opts.capture_result && expected_out) *expected_out = mat_vec_mul(a, x);

  MasterConfig mcfg;
  mcfg.n = n_eff;
  mcfg.z = z_effective;
  mcfg.b = cfg.b;
  mcfg.seed = stream_seed(cfg, kProtocol, 0, scheme);
  mcfg.soliton_c = cfg.soliton_c;
  mcfg.soliton_delta = cfg.soliton_delta;
  MasterState master(std::move(a), mcfg);

  const double packet_bits = 8.0 * static_cast<double>(master.block_rows()) * cfg.ell;
  const double result_bits = 8.0 * static_cast<double>(master.block_rows());

  struct WorkerSim {
    double lambda = 1;
    double capacity = 15e6;
    Rng service{0};
    Rng transmit{0};
    double busy_until = 0;
    uint64_t sent = 0;
    uint64_t returned = 0;
  };
  std::vector<WorkerSim> ws(n_eff);
  for (uint32_t i = 0; i < n_eff; ++i) {
    uint32_t orig = workers[i];
    ws[i].lambda = lambdas[orig];
    ws[i].capacity = capacities[orig];
    ws[i].service = Rng(stream_seed(cfg, kService, orig, scheme));
    ws[i].transmit = Rng(stream_seed(cfg, kTransmit, orig, scheme));
  }

  struct Event {
    double time;
    int pri;  // results before timers at equal times
    uint64_t seq;
    uint32_t worker;
    uint64_t epoch;  // timers: worker.sent at scheduling time
    ResultMsg msg;
    double sample;
  };
  auto later = [](const Event& a, const Event& b) {
    return std::tie(a.time, a.pri, a.seq) > std::tie(b.time, b.pri, b.seq);
  };
  std::priority_queue<Event, std::vector<Event>, decltype(later)> queue(later);
  uint64_t seq = 0;

  EngineResult res;
  res.trace.z = z_effective;
  bool finished = false;

  auto dispatch = [&](uint32_t w, double now) {
    Packet p = master.next_packet(w);
    WorkerSim& sim = ws[w];
    double send_delay = sample_transmission(sim.capacity, packet_bits, sim.transmit);
    double arrive = now + send_delay;
    double start = std::max(arrive, sim.busy_until);
    double beta = sample_packet_service(sim.lambda, cfg.b, sim.service);
    sim.busy_until = start + beta;
    double ret_delay = sample_transmission(sim.capacity, result_bits, sim.transmit);
    double arrival = sim.busy_until + ret_delay;

    ResultMsg msg{w, p.round, p.slot, {}};
    FieldMatrix product = mat_vec_mul(p.payload, x);
    msg.result.assign(product.data().begin(), product.data().end());

    ++sim.sent;
    queue.push(Event{arrival, 0, seq++, w, 0, std::move(msg),
                     arrival - now - send_delay - ret_delay});
    if (master.beta(w).samples() > 0) {
      double at = master.dispatch_time(w, now, now, std::nullopt);
      queue.push(Event{at, 1, seq++, w, sim.sent, {}, 0});
    }
  };

  for (uint32_t w = 0; w < n_eff; ++w) dispatch(w, 0.0);

  while (!finished && !queue.empty()) {
    Event ev = queue.top();
    queue.pop();
    if (ev.pri == 0) {
      WorkerSim& sim = ws[ev.worker];
      ++sim.returned;
      master.on_result(ev.msg, ev.sample);
      if (opts.capture_trace)
        res.trace.round_completions[ev.msg.round].push_back(ev.time);
      if (auto product = master.try_finish()) {
        res.completion_time = ev.time;
        res.product = *product;
        finished = true;
        break;
      }
      if (sim.sent == sim.returned) dispatch(ev.worker, ev.time);
    } else {
      if (ws[ev.worker].sent != ev.epoch) continue;  // superseded
      dispatch(ev.worker, ev.time);
    }
  }
  if (!finished) throw StateError("simulation drained its event queue before decoding");

  res.packets_sent = master.packets_sent();
  res.epsilon = master.epsilon_observed();
  res.trace.consumed_rounds = master.consumed_rounds();
  res.trace.decode_time = res.completion_time;
  return res;
}

std::vector<uint32_t> all_workers(uint32_t n) {
  std::vector<uint32_t> ids(n);
  for (uint32_t i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

std::vector<uint32_t> gc3p_survivors(const SimConfig& cfg,
                                     std::span<const double> lambdas) {
  std::vector<uint32_t> ids = all_workers(cfg.n);
  switch (cfg.adversary_rule) {
    case AdversaryRule::Fastest:
    case AdversaryRule::Slowest: {
      // Fastest worker = largest rate. Stable on ties for reproducibility.
      std::vector<uint32_t> order = ids;
      std::stable_sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        return cfg.adversary_rule == AdversaryRule::Fastest ? lambdas[a] > lambdas[b]
                                                            : lambdas[a] < lambdas[b];
      });
      std::set<uint32_t> removed(order.begin(), order.begin() + cfg.z);
      std::vector<uint32_t> out;
      for (uint32_t w : ids)
        if (!removed.count(w)) out.push_back(w);
      return out;
    }
    case AdversaryRule::Random: {
      Rng rng(stream_seed(cfg, kAdversary, 0, Scheme::Gc3p));
      std::vector<uint32_t> pool = ids;
      std::set<uint32_t> removed;
      for (uint32_t i = 0; i < cfg.z; ++i) {
        std::size_t pick = static_cast<std::size_t>(rng.below(pool.size()));
        removed.insert(pool[pick]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      }
      std::vector<uint32_t> out;
      for (uint32_t w : ids)
        if (!removed.count(w)) out.push_back(w);
      return out;
    }
  }
  return ids;
}

}  // namespace

PracRunStats run_prac_detailed(const SimConfig& cfg, const PracRunOptions& opts) {
  cfg.validate();
  auto lambdas = trial_lambdas(cfg);
  auto capacities = trial_capacities(cfg);
  auto ids = all_workers(cfg.n);

  PracRunStats stats;
  EngineResult er = run_engine(cfg, Scheme::Prac, cfg.z, ids, lambdas, capacities,
                               opts, &stats.expected);
  stats.record = base_record(Scheme::Prac, cfg);
  stats.record.completion_time = er.completion_time;
  stats.record.packets_sent = er.packets_sent;
  stats.record.epsilon_observed = er.epsilon;
  if (opts.capture_result) stats.result = std::move(er.product);
  stats.trace = std::move(er.trace);
  return stats;
}

CompletionRecord run_prac(const SimConfig& cfg) {
  return run_prac_detailed(cfg, {}).record;
}

CompletionRecord run_c3p(const SimConfig& cfg) {
  cfg.validate();
  auto lambdas = trial_lambdas(cfg);
  auto capacities = trial_capacities(cfg);
  std::vector<uint32_t> ids =
      cfg.c3p_all_workers ? all_workers(cfg.n) : gc3p_survivors(cfg, lambdas);

  EngineResult er =
      run_engine(cfg, Scheme::C3p, 0, ids, lambdas, capacities, {}, nullptr);
  CompletionRecord rec = base_record(Scheme::C3p, cfg);
  rec.completion_time = er.completion_time;
  rec.packets_sent = er.packets_sent;
  rec.epsilon_observed = er.epsilon;
  return rec;
}

CompletionRecord run_gc3p(const SimConfig& cfg) {
  cfg.validate();
  auto lambdas = trial_lambdas(cfg);
  auto capacities = trial_capacities(cfg);
  auto ids = gc3p_survivors(cfg, lambdas);

  EngineResult er =
      run_engine(cfg, Scheme::Gc3p, 0, ids, lambdas, capacities, {}, nullptr);
  CompletionRecord rec = base_record(Scheme::Gc3p, cfg);
  rec.completion_time = er.completion_time;
  rec.packets_sent = er.packets_sent;
  rec.epsilon_observed = er.epsilon;
  return rec;
}

double staircase_eval_for_k(std::vector<double> task_times, uint32_t k, uint32_t z) {
  uint32_t n = static_cast<uint32_t>(task_times.size());
  if (k <= z || k > n) throw DomainError("staircase needs z < k <= n");
  std::sort(task_times.begin(), task_times.end());
  double best = std::numeric_limits<double>::infinity();
  for (uint32_t d = k; d <= n; ++d) {
    double v = static_cast<double>(k - z) / static_cast<double>(d - z) *
               task_times[d - 1];
    best = std::min(best, v);
  }
  return best;
}

CompletionRecord run_staircase(const SimConfig& cfg) {
  cfg.validate();
  auto lambdas = trial_lambdas(cfg);
  auto capacities = trial_capacities(cfg);

  // Shared per-block service draws: worker i's task time for threshold k is
  // its prefix sum over b/(k-z) blocks plus one packet round trip.
  std::vector<std::vector<double>> prefix(cfg.n);
  std::vector<double> rtt(cfg.n);
  const double packet_bits =
      8.0 * std::ceil(static_cast<double>(cfg.m) / cfg.b) * cfg.ell;
  const double result_bits = 8.0 * std::ceil(static_cast<double>(cfg.m) / cfg.b);
  for (uint32_t w = 0; w < cfg.n; ++w) {
    Rng service(stream_seed(cfg, kService, w, Scheme::Staircase));
    Rng transmit(stream_seed(cfg, kTransmit, w, Scheme::Staircase));
    rtt[w] = sample_transmission(capacities[w], packet_bits, transmit) +
             sample_transmission(capacities[w], result_bits, transmit);
    prefix[w].resize(cfg.b + 1);
    prefix[w][0] = 0;
    for (uint32_t j = 1; j <= cfg.b; ++j)
      prefix[w][j] = prefix[w][j - 1] + sample_packet_service(lambdas[w], cfg.b, service);
  }

  auto task_time = [&](uint32_t w, double blocks) {
    double fl = std::floor(blocks);
    std::size_t lo = static_cast<std::size_t>(fl);
    if (lo >= cfg.b) return rtt[w] + prefix[w][cfg.b];
    double frac = blocks - fl;
    return rtt[w] + prefix[w][lo] + frac * (prefix[w][lo + 1] - prefix[w][lo]);
  };

  double best = std::numeric_limits<double>::infinity();
  for (uint32_t k = cfg.z + 1; k <= cfg.n; ++k) {
    double blocks = static_cast<double>(cfg.b) / static_cast<double>(k - cfg.z);
    std::vector<double> t(cfg.n);
    for (uint32_t w = 0; w < cfg.n; ++w) t[w] = task_time(w, blocks);
    best = std::min(best, staircase_eval_for_k(std::move(t), k, cfg.z));
  }

  CompletionRecord rec = base_record(Scheme::Staircase, cfg);
  rec.completion_time = best;
  rec.packets_sent = cfg.n;
  rec.epsilon_observed = 0;
  return rec;
}

CompletionRecord run_scheme(Scheme scheme, const SimConfig& cfg) {
  switch (scheme) {
    case Scheme::Prac: return run_prac(cfg);
    case Scheme::Staircase: return run_staircase(cfg);
    case Scheme::C3p: return run_c3p(cfg);
    case Scheme::Gc3p: return run_gc3p(cfg);
  }
  throw DomainError("unknown scheme");
}

bool decode_floor_holds(const RoundTrace& trace) {
  for (uint32_t round : trace.consumed_rounds) {
    auto it = trace.round_completions.find(round);
    if (it == trace.round_completions.end()) return false;
    std::vector<double> times = it->second;
    if (times.size() < trace.z + 1) return false;
    std::nth_element(times.begin(), times.begin() + trace.z, times.end());
    if (trace.decode_time < times[trace.z]) return false;
  }
  return true;
}

namespace {

std::vector<double> sorted_expected_betas(const SimConfig& cfg) {
  auto lambdas = trial_lambdas(cfg);
  std::vector<double> betas(cfg.n);
  for (uint32_t i = 0; i < cfg.n; ++i) betas[i] = expected_packet_service(lambdas[i], cfg.b);
  std::sort(betas.begin(), betas.end());
  return betas;
}

}  // namespace

double closed_form_completion(const SimConfig& cfg, double epsilon) {
  cfg.validate();
  auto betas = sorted_expected_betas(cfg);
  double denom = 0;
  for (uint32_t i = cfg.z; i < cfg.n; ++i) denom += 1.0 / betas[i];
  return (static_cast<double>(cfg.b) + epsilon) / denom;
}

double staircase_gap_bound(const SimConfig& cfg, uint32_t d_star, double epsilon) {
  cfg.validate();
  if (d_star <= cfg.z || d_star > cfg.n)
    throw DomainError("gap bound needs z < d* <= n");
  auto betas = sorted_expected_betas(cfg);
  double x = static_cast<double>(cfg.n - d_star) / betas[cfg.n - 1];
  double y = static_cast<double>(d_star - cfg.z) / betas[d_star - 1];
  return (static_cast<double>(cfg.b) * x - epsilon * y) / (y * (x + y));
}

uint32_t staircase_optimal_d(const SimConfig& cfg) {
  cfg.validate();
  auto betas = sorted_expected_betas(cfg);
  uint32_t best_d = cfg.z + 1;
  double best = std::numeric_limits<double>::infinity();
  for (uint32_t d = cfg.z + 1; d <= cfg.n; ++d) {
    double v = static_cast<double>(cfg.b) / static_cast<double>(d - cfg.z) *
               betas[d - 1];
    if (v < best) {
      best = v;
      best_d = d;
    }
  }
  return best_d;
}

std::vector<CompletionRecord> run_batch(const SimConfig& base, Scheme scheme,
                                        std::size_t trials) {
  if (trials == 0) throw DomainError("need at least one trial");
  std::vector<CompletionRecord> records;
  records.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    SimConfig cfg = base;
    cfg.seed = derive_seed(base.seed, {kTrial, t});
    CompletionRecord rec = run_scheme(scheme, cfg);
    rec.trial = t;
    records.push_back(rec);
  }
  return records;
}

BatchSummary summarize(std::span<const CompletionRecord> records) {
  BatchSummary s;
  s.trials = records.size();
  std::vector<double> times, eps;
  times.reserve(records.size());
  for (const auto& r : records) {
    times.push_back(r.completion_time);
    eps.push_back(static_cast<double>(r.epsilon_observed));
  }
  s.mean_completion = mean(times);
  s.ci95_halfwidth = records.size() > 1 ? ci95_halfwidth(times) : 0.0;
  s.mean_epsilon = mean(eps);
  return s;
}

}  // namespace prac
