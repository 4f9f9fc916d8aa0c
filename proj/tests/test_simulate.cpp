#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "prac/simulate.hpp"
#include "prac/stats.hpp"

using namespace prac;

namespace {

SimConfig small_cfg() {
  SimConfig cfg;
  cfg.n = 6;
  cfg.z = 2;
  cfg.b = 50;
  cfg.m = 50;
  cfg.ell = 8;
  cfg.scenario = Scenario::Three;
  cfg.seed = 1234;
  return cfg;
}

}  // namespace

TEST_CASE("packet service respects the shift floor and the mean") {
  Rng rng(51);
  const double lambda = 3.0;
  const uint32_t b = 100;
  double sum = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    double s = sample_packet_service(lambda, b, rng);
    REQUIRE(s >= 1.0 / (lambda * b));
    sum += s;
  }
  double mean_draw = sum / draws;
  CHECK(mean_draw == doctest::Approx(expected_packet_service(lambda, b)).epsilon(0.01));
}

TEST_CASE("b per-packet draws sum to the whole-task mean 2/lambda") {
  Rng rng(52);
  const double lambda = 2.0;
  const uint32_t b = 200;
  double total = 0;
  const int tasks = 2000;
  for (int t = 0; t < tasks; ++t)
    for (uint32_t j = 0; j < b; ++j) total += sample_packet_service(lambda, b, rng);
  CHECK(total / tasks == doctest::Approx(2.0 / lambda).epsilon(0.01));
}

TEST_CASE("transmission time matches bits over capacity and is finite") {
  Rng rng(53);
  const double capacity = 15e6;
  const double bits = 8000;  // ell = 1000 one-row packet
  double sum = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    double t = sample_transmission(capacity, bits, rng);
    REQUIRE(std::isfinite(t));
    REQUIRE(t > 0);
    sum += t;
  }
  CHECK(sum / draws == doctest::Approx(bits / capacity).epsilon(0.01));

  // Doubling ell doubles the mean.
  Rng rng2(53);
  double sum2 = 0;
  for (int i = 0; i < draws; ++i) sum2 += sample_transmission(capacity, 2 * bits, rng2);
  CHECK(sum2 / sum == doctest::Approx(2.0).epsilon(0.001));
}

TEST_CASE("scenario lambda multisets match the stated splits at n=50") {
  SimConfig cfg;
  cfg.n = 50;
  cfg.z = 13;
  cfg.scenario = Scenario::One;
  auto lam = trial_lambdas(cfg);
  CHECK(std::count(lam.begin(), lam.end(), 3.0) == 25);
  CHECK(std::count(lam.begin(), lam.end(), 1.0) == 13);
  CHECK(std::count(lam.begin(), lam.end(), 9.0) == 12);

  cfg.scenario = Scenario::Two;
  lam = trial_lambdas(cfg);
  CHECK(std::count(lam.begin(), lam.end(), 1.0) == 16);
  CHECK(std::count(lam.begin(), lam.end(), 3.0) == 16);
  CHECK(std::count(lam.begin(), lam.end(), 9.0) == 18);

  cfg.scenario = Scenario::Three;
  lam = trial_lambdas(cfg);
  for (double l : lam) {
    CHECK(l >= 0.5);
    CHECK(l <= 9.0);
  }

  cfg.scenario = Scenario::Clustered;
  lam = trial_lambdas(cfg);
  CHECK(std::count(lam.begin(), lam.end(), 9.0) == 6);
  CHECK(std::count(lam.begin(), lam.end(), 3.0) == 7);
  CHECK(std::count(lam.begin(), lam.end(), 1.0) == 37);
}

TEST_CASE("minimal topology n=2 z=1 b=1 completes") {
  SimConfig cfg;
  cfg.n = 2;
  cfg.z = 1;
  cfg.b = 1;
  cfg.m = 1;
  cfg.ell = 4;
  cfg.scenario = Scenario::Custom;
  cfg.lambda_custom = {2.0, 1.0};
  cfg.seed = 9;
  auto rec = run_prac(cfg);
  CHECK(rec.completion_time > 0);
  CHECK(rec.epsilon_observed == 0);  // b=1 decodes on the first packet
}

TEST_CASE("simulated PRAC returns the exact product") {
  SimConfig cfg = small_cfg();
  cfg.data_cols = 5;
  PracRunOptions opts;
  opts.capture_result = true;
  for (uint64_t s = 0; s < 10; ++s) {
    cfg.seed = 100 + s;
    auto stats = run_prac_detailed(cfg, opts);
    CHECK(stats.result == stats.expected);
  }
}

TEST_CASE("determinism: same config and seed give identical records") {
  SimConfig cfg = small_cfg();
  auto a = run_batch(cfg, Scheme::Prac, 5);
  auto b = run_batch(cfg, Scheme::Prac, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].completion_time == b[i].completion_time);
    CHECK(a[i].packets_sent == b[i].packets_sent);
    CHECK(a[i].epsilon_observed == b[i].epsilon_observed);
    CHECK(csv_row(a[i]) == csv_row(b[i]));
  }
}

TEST_CASE("z = 0 makes PRAC and C3P coincide") {
  SimConfig cfg = small_cfg();
  cfg.z = 0;
  auto prac_rec = run_prac(cfg);
  auto c3p_rec = run_c3p(cfg);
  CHECK(prac_rec.completion_time == c3p_rec.completion_time);
  CHECK(prac_rec.packets_sent == c3p_rec.packets_sent);
  CHECK(prac_rec.epsilon_observed == c3p_rec.epsilon_observed);
}

TEST_CASE("decode floor holds on every trial") {
  SimConfig cfg = small_cfg();
  PracRunOptions opts;
  opts.capture_trace = true;
  for (uint64_t s = 0; s < 50; ++s) {
    cfg.seed = 2000 + s;
    auto stats = run_prac_detailed(cfg, opts);
    CHECK(decode_floor_holds(stats.trace));
  }
}

TEST_CASE("gc3p survivor selection follows the rule") {
  SimConfig cfg = small_cfg();
  cfg.scenario = Scenario::Custom;
  cfg.lambda_custom = {1.0, 9.0, 3.0, 2.0, 8.0, 5.0};
  cfg.z = 2;

  // Removing the slowest should beat removing the fastest.
  cfg.adversary_rule = AdversaryRule::Slowest;
  auto slow_removed = run_batch(cfg, Scheme::Gc3p, 30);
  cfg.adversary_rule = AdversaryRule::Fastest;
  auto fast_removed = run_batch(cfg, Scheme::Gc3p, 30);
  CHECK(summarize(slow_removed).mean_completion <
        summarize(fast_removed).mean_completion);
}

TEST_CASE("staircase evaluator on the fixed fixture") {
  // T = (1,2,3,4), k = 3, z = 1: min((3-1)/(3-1)*3, (3-1)/(4-1)*4) = 8/3.
  std::vector<double> t{1, 2, 3, 4};
  CHECK(staircase_eval_for_k(t, 3, 1) == doctest::Approx(8.0 / 3.0));
  // d = k term alone has coefficient 1.
  CHECK(staircase_eval_for_k(t, 4, 1) == doctest::Approx(4.0));
  CHECK_THROWS_AS(staircase_eval_for_k(t, 1, 1), DomainError);
  CHECK_THROWS_AS(staircase_eval_for_k(t, 5, 1), DomainError);
}

TEST_CASE("staircase inner minimum equals brute force over d") {
  Rng rng(54);
  for (int trial = 0; trial < 200; ++trial) {
    uint32_t n = 3 + static_cast<uint32_t>(rng.below(8));
    uint32_t z = static_cast<uint32_t>(rng.below(n - 1));
    uint32_t k = z + 1 + static_cast<uint32_t>(rng.below(n - z));
    std::vector<double> t(n);
    for (auto& v : t) v = rng.uniform(0.1, 5.0);

    auto sorted = t;
    std::sort(sorted.begin(), sorted.end());
    double best = std::numeric_limits<double>::infinity();
    for (uint32_t d = k; d <= n; ++d)
      best = std::min(best, double(k - z) / double(d - z) * sorted[d - 1]);

    CHECK(staircase_eval_for_k(t, k, z) == doctest::Approx(best));
  }
}

TEST_CASE("staircase double minimization equals an exhaustive (k, d) scan") {
  Rng rng(55);
  const uint32_t n = 6, z = 2;
  // Synthetic per-threshold task times: worker w needs time[w] per block and
  // b/(k-z) blocks under threshold k.
  std::vector<double> per_block(n);
  for (auto& v : per_block) v = rng.uniform(0.2, 2.0);
  const double b = 60;

  double folded = std::numeric_limits<double>::infinity();
  double exhaustive = std::numeric_limits<double>::infinity();
  for (uint32_t k = z + 1; k <= n; ++k) {
    std::vector<double> t(n);
    for (uint32_t w = 0; w < n; ++w) t[w] = per_block[w] * b / (k - z);
    folded = std::min(folded, staircase_eval_for_k(t, k, z));

    auto sorted = t;
    std::sort(sorted.begin(), sorted.end());
    for (uint32_t d = k; d <= n; ++d)
      exhaustive = std::min(exhaustive,
                            double(k - z) / double(d - z) * sorted[d - 1]);
  }
  CHECK(folded == doctest::Approx(exhaustive));
}

TEST_CASE("gc3p ignoring the fastest workers lands near PRAC") {
  // Removing the z fastest leaves GC3P computing on exactly the worker set
  // whose rates drive the PRAC closed form, so the means should agree.
  SimConfig cfg;
  cfg.n = 20;
  cfg.z = 5;
  cfg.b = 400;
  cfg.m = 400;
  cfg.ell = 8;
  cfg.scenario = Scenario::One;
  cfg.adversary_rule = AdversaryRule::Fastest;
  cfg.seed = 4242;
  auto prac_mean = summarize(run_batch(cfg, Scheme::Prac, 60)).mean_completion;
  auto gc3p_mean = summarize(run_batch(cfg, Scheme::Gc3p, 60)).mean_completion;
  CHECK(std::abs(prac_mean - gc3p_mean) / prac_mean < 0.10);
}

TEST_CASE("closed-form completion point values") {
  // Two slowest with E[beta]=1.0 each, b=100, eps=5 -> 105/2.
  SimConfig cfg;
  cfg.n = 4;
  cfg.z = 2;
  cfg.b = 100;
  cfg.m = 100;
  cfg.scenario = Scenario::Custom;
  // E[beta_i] = 2/(b*lambda); lambda = 0.02 gives E[beta] = 1.0 at b=100.
  cfg.lambda_custom = {5.0, 5.0, 0.02, 0.02};
  CHECK(closed_form_completion(cfg, 5.0) == doctest::Approx(52.5));

  // z = n-1: single slowest term.
  cfg.z = 3;
  CHECK(closed_form_completion(cfg, 5.0) == doctest::Approx(105.0 * 1.0));

  // Homogeneous: (b+eps) E[beta] / (n-z).
  cfg.z = 2;
  cfg.lambda_custom = {0.02, 0.02, 0.02, 0.02};
  CHECK(closed_form_completion(cfg, 5.0) == doctest::Approx(105.0 / 2.0));
}

TEST_CASE("gap bound point values and domain errors") {
  SimConfig cfg;
  cfg.n = 4;
  cfg.z = 1;
  cfg.b = 100;
  cfg.m = 100;
  cfg.scenario = Scenario::Custom;
  // All E[beta] = 1.0: lambda = 2/b = 0.02.
  cfg.lambda_custom = {0.02, 0.02, 0.02, 0.02};
  // d* = 2: x = (4-2)/1 = 2, y = (2-1)/1 = 1, bound = (200-5)/3 = 65.
  CHECK(staircase_gap_bound(cfg, 2, 5.0) == doctest::Approx(65.0));
  // d* = n: x = 0, vacuous negative bound -eps/y.
  double vac = staircase_gap_bound(cfg, 4, 5.0);
  CHECK(vac == doctest::Approx(-5.0 / 3.0));
  CHECK_THROWS_AS(staircase_gap_bound(cfg, 1, 5.0), DomainError);
  CHECK_THROWS_AS(staircase_gap_bound(cfg, 5, 5.0), DomainError);
}

TEST_CASE("staircase optimal d matches a hand check") {
  SimConfig cfg;
  cfg.n = 4;
  cfg.z = 1;
  cfg.b = 100;
  cfg.m = 100;
  cfg.scenario = Scenario::Custom;
  cfg.lambda_custom = {9.0, 3.0, 3.0, 3.0};
  // Sorted E[beta]: 2/900, 2/300, 2/300, 2/300.
  // d=2: 100/1 * 2/300 = 0.667; d=3: 100/2 * 2/300 = 0.333; d=4: 0.222.
  CHECK(staircase_optimal_d(cfg) == 4);
}

TEST_CASE("homogeneous slowest agrees with the closed form within 10%") {
  SimConfig cfg;
  cfg.n = 8;
  cfg.z = 2;
  cfg.b = 400;
  cfg.m = 400;
  cfg.ell = 8;
  cfg.scenario = Scenario::Clustered;
  cfg.seed = 777;
  auto records = run_batch(cfg, Scheme::Prac, 60);
  auto s = summarize(records);
  double closed = (cfg.b + s.mean_epsilon) *
                  expected_packet_service(1.0, cfg.b) / (cfg.n - cfg.z);
  CHECK(std::abs(s.mean_completion - closed) / closed < 0.10);
}

TEST_CASE("confidence interval shrinks like one over sqrt trials") {
  SimConfig cfg = small_cfg();
  cfg.scenario = Scenario::One;
  auto s40 = summarize(run_batch(cfg, Scheme::Prac, 40));
  auto s160 = summarize(run_batch(cfg, Scheme::Prac, 160));
  double ratio = s40.ci95_halfwidth / s160.ci95_halfwidth;
  CHECK(ratio > 1.3);
  CHECK(ratio < 3.1);
}

TEST_CASE("csv header and row format") {
  CHECK(csv_header() ==
        "scheme,n,z,b,m,ell,scenario,adversary_rule,trial,seed,"
        "completion_time_s,packets_sent,epsilon_observed");
  CompletionRecord r;
  r.scheme = Scheme::Gc3p;
  r.n = 4;
  r.z = 1;
  r.b = 6;
  r.m = 12;
  r.ell = 3;
  r.scenario = Scenario::Clustered;
  r.adversary_rule = AdversaryRule::Slowest;
  r.trial = 2;
  r.seed = 99;
  r.completion_time = 0.25;
  r.packets_sent = 10;
  r.epsilon_observed = 1;
  CHECK(csv_row(r) == "gc3p,4,1,6,12,3,clustered,slowest,2,99,0.25,10,1");
}

TEST_CASE("config validation") {
  SimConfig cfg = small_cfg();
  cfg.z = cfg.n;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = small_cfg();
  cfg.scenario = Scenario::Custom;
  cfg.lambda_custom = {1.0};
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
