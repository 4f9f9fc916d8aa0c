#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "prac/gf256.hpp"
#include "prac/protocol.hpp"
#include "prac/rng.hpp"

namespace prac {

enum class Scheme { Prac, Staircase, C3p, Gc3p };
enum class Scenario { One = 1, Two = 2, Three = 3, Clustered = 4, Custom = 0 };
enum class AdversaryRule { Fastest, Slowest, Random };

std::string to_string(Scheme s);
std::string to_string(Scenario s);
std::string to_string(AdversaryRule r);
Scheme parse_scheme(const std::string& s);
Scenario parse_scenario(const std::string& s);
AdversaryRule parse_adversary_rule(const std::string& s);

// One stochastic run is fully determined by this config; the seed is a
// per-trial seed (run_batch derives one per trial from a base seed).
struct SimConfig {
  uint32_t n = 50;
  uint32_t z = 13;
  uint32_t b = 1000;
  uint32_t m = 1000;    // rows of A used for packet sizing
  uint32_t ell = 1000;  // columns of A used for packet sizing
  Scenario scenario = Scenario::One;
  std::vector<double> lambda_custom;  // used when scenario == Custom
  AdversaryRule adversary_rule = AdversaryRule::Random;
  uint64_t seed = 0;
  // Width of the payloads actually carried through the protocol. Timing is
  // charged for ell-wide packets either way, so batch runs keep this at 1
  // and correctness runs set it to ell.
  uint32_t data_cols = 1;
  bool c3p_all_workers = true;  // false: run C3P on the n-z survivors
  // When false, every scheme draws its own delay samples instead of sharing
  // the per-(trial, worker) streams.
  bool paired = true;
  double soliton_c = DegreeDistribution::kDefaultC;
  double soliton_delta = DegreeDistribution::kDefaultDelta;

  void validate() const;
};

// Per-worker rate parameters for this trial (scenario 3 draws them from the
// trial's lambda stream; the others are deterministic multisets).
std::vector<double> trial_lambdas(const SimConfig& cfg);
// Per-worker channel capacities in bits/second, uniform on [10, 20] Mbps.
std::vector<double> trial_capacities(const SimConfig& cfg);

// Per-packet computing time: shifted exponential with shift c_i/b and rate
// b*lambda_i, so a whole task of b packets keeps the mean c_i + 1/lambda_i.
double sample_packet_service(double lambda, uint32_t b, Rng& rng);
double expected_packet_service(double lambda, uint32_t b);

// Transmission time for one message: bits divided by a Poisson(capacity)
// rate draw, truncated to at least 1 bit/s.
double sample_transmission(double capacity_bps, double bits, Rng& rng);

struct CompletionRecord {
  Scheme scheme = Scheme::Prac;
  uint32_t n = 0, z = 0, b = 0, m = 0, ell = 0;
  Scenario scenario = Scenario::Custom;
  AdversaryRule adversary_rule = AdversaryRule::Random;
  uint64_t trial = 0;
  uint64_t seed = 0;
  double completion_time = 0;  // seconds
  uint64_t packets_sent = 0;
  int64_t epsilon_observed = 0;
};

// CSV schema shared by every record-producing command.
std::string csv_header();
std::string csv_row(const CompletionRecord& r);

struct PracRunOptions {
  bool capture_result = false;  // also computes the direct A*x oracle
  bool capture_trace = false;   // records per-round completion times
};

struct RoundTrace {
  std::map<uint32_t, std::vector<double>> round_completions;
  std::set<uint32_t> consumed_rounds;
  double decode_time = 0;
  uint32_t z = 0;
};

struct PracRunStats {
  CompletionRecord record;
  FieldMatrix result;    // decoded A*x (capture_result)
  FieldMatrix expected;  // direct oracle (capture_result)
  RoundTrace trace;      // capture_trace
};

PracRunStats run_prac_detailed(const SimConfig& cfg, const PracRunOptions& opts);
CompletionRecord run_prac(const SimConfig& cfg);
CompletionRecord run_c3p(const SimConfig& cfg);
CompletionRecord run_gc3p(const SimConfig& cfg);
CompletionRecord run_staircase(const SimConfig& cfg);
CompletionRecord run_scheme(Scheme scheme, const SimConfig& cfg);

// Decode may not beat the (z+1)-st fastest worker over the rounds that fed
// the decoder.
bool decode_floor_holds(const RoundTrace& trace);

// min over d in {k..n} of (k-z)/(d-z) * T_(d), the Staircase completion for
// a fixed threshold k given the sampled whole-task times.
double staircase_eval_for_k(std::vector<double> task_times, uint32_t k, uint32_t z);

// Closed-form completion approximation (b+eps) / sum_{i=z+1}^n 1/E[beta_i],
// workers sorted from fastest to slowest.
double closed_form_completion(const SimConfig& cfg, double epsilon);
// Gap lower bound (b*x - eps*y)/(y*(x+y)) with x=(n-d*)/E[beta_(n)],
// y=(d*-z)/E[beta_(d*)].
double staircase_gap_bound(const SimConfig& cfg, uint32_t d_star, double epsilon);
// The d minimizing b/(d-z)*E[beta_(d)], the analytic Staircase optimum.
uint32_t staircase_optimal_d(const SimConfig& cfg);

std::vector<CompletionRecord> run_batch(const SimConfig& base, Scheme scheme,
                                        std::size_t trials);

struct BatchSummary {
  std::size_t trials = 0;
  double mean_completion = 0;
  double ci95_halfwidth = 0;
  double mean_epsilon = 0;
};
BatchSummary summarize(std::span<const CompletionRecord> records);

}  // namespace prac
