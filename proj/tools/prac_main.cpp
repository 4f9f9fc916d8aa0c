// Operator entry point: simulation batches, closed-form evaluation, privacy
// audits, fountain overhead measurement, and the networked master/worker
// runtime. Exit codes: 0 success, 2 usage, 3 verification/audit failure,
// 4 timeout.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prac/errors.hpp"
#include "prac/fountain.hpp"
#include "prac/keycode.hpp"
#include "prac/netproto.hpp"
#include "prac/protocol.hpp"
#include "prac/simulate.hpp"
#include "prac/stats.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitVerification = 3;
constexpr int kExitTimeout = 4;

uint64_t default_seed() {
  const char* env = std::getenv("PRAC_SEED");
  if (!env) return 0;
  return std::strtoull(env, nullptr, 10);
}

struct SweepSpec {
  std::string param;
  uint32_t lo = 0, hi = 0, step = 1;
};

SweepSpec parse_sweep(const std::string& text) {
  // param:lo..hi[:step]
  SweepSpec sw;
  auto colon = text.find(':');
  auto dots = text.find("..");
  if (colon == std::string::npos || dots == std::string::npos || dots < colon)
    throw prac::DomainError("sweep must look like z:1..40[:step]");
  sw.param = text.substr(0, colon);
  sw.lo = static_cast<uint32_t>(std::stoul(text.substr(colon + 1, dots - colon - 1)));
  std::string rest = text.substr(dots + 2);
  auto colon2 = rest.find(':');
  if (colon2 == std::string::npos) {
    sw.hi = static_cast<uint32_t>(std::stoul(rest));
  } else {
    sw.hi = static_cast<uint32_t>(std::stoul(rest.substr(0, colon2)));
    sw.step = static_cast<uint32_t>(std::stoul(rest.substr(colon2 + 1)));
  }
  if (sw.hi < sw.lo || sw.step == 0) throw prac::DomainError("bad sweep range");
  if (sw.param != "n" && sw.param != "z" && sw.param != "b" && sw.param != "m" &&
      sw.param != "ell")
    throw prac::DomainError("sweep parameter must be one of n,z,b,m,ell");
  return sw;
}

void apply_sweep(prac::SimConfig& cfg, const std::string& param, uint32_t value) {
  if (param == "n") cfg.n = value;
  else if (param == "z") cfg.z = value;
  else if (param == "b") cfg.b = value;
  else if (param == "m") cfg.m = value;
  else if (param == "ell") cfg.ell = value;
}

int cmd_simulate(const std::string& scheme_arg, const prac::SimConfig& base,
                 std::size_t trials, const std::string& out_path,
                 const std::string& sweep_arg, const std::string& epsilon_mode) {
  std::vector<prac::Scheme> schemes;
  if (scheme_arg == "all") {
    schemes = {prac::Scheme::C3p, prac::Scheme::Gc3p, prac::Scheme::Prac,
               prac::Scheme::Staircase};
  } else {
    schemes = {prac::parse_scheme(scheme_arg)};
  }

  std::vector<uint32_t> points;
  std::string sweep_param;
  if (!sweep_arg.empty()) {
    SweepSpec sw = parse_sweep(sweep_arg);
    sweep_param = sw.param;
    for (uint32_t v = sw.lo; v <= sw.hi; v += sw.step) points.push_back(v);
  } else {
    points.push_back(0);  // single point, no override
  }

  std::ostringstream manifest;
  manifest << "# prac simulate scheme=" << scheme_arg << " scenario="
           << prac::to_string(base.scenario) << " n=" << base.n << " z=" << base.z
           << " b=" << base.b << " m=" << base.m << " ell=" << base.ell
           << " trials=" << trials << " seed=" << base.seed
           << " adversary-rule=" << prac::to_string(base.adversary_rule)
           << " data-cols=" << base.data_cols
           << " paired=" << (base.paired ? 1 : 0)
           << " c3p-workers=" << (base.c3p_all_workers ? "all" : "survivors");
  if (!sweep_arg.empty()) manifest << " sweep=" << sweep_arg;
  manifest << " epsilon-mode=" << epsilon_mode;

  std::ostringstream body;
  body << manifest.str() << "\n" << prac::csv_header() << "\n";

  for (uint32_t point : points) {
    prac::SimConfig cfg = base;
    if (!sweep_param.empty()) apply_sweep(cfg, sweep_param, point);
    cfg.validate();
    for (prac::Scheme scheme : schemes) {
      auto records = prac::run_batch(cfg, scheme, trials);
      for (const auto& r : records) body << prac::csv_row(r) << "\n";
      auto s = prac::summarize(records);
      std::printf("%-9s", prac::to_string(scheme).c_str());
      if (!sweep_param.empty()) std::printf(" %s=%-5u", sweep_param.c_str(), point);
      std::printf(" trials=%zu mean=%.6gs ci95=%.3gs mean_eps=%.4g\n", s.trials,
                  s.mean_completion, s.ci95_halfwidth, s.mean_epsilon);
      if (scheme == prac::Scheme::Prac) {
        double eps = epsilon_mode == "nominal" ? 0.05 * cfg.b : s.mean_epsilon;
        double est = prac::closed_form_completion(cfg, eps);
        std::printf("          closed-form=%.6gs (eps=%.4g) rel-err=%.2f%%\n", est, eps,
                    100.0 * (s.mean_completion - est) / est);
      }
    }
  }

  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::fprintf(stderr, "cannot open %s\n", out_path.c_str());
      return kExitUsage;
    }
    out << body.str();
    std::printf("wrote %s\n", out_path.c_str());
  }
  return kExitOk;
}

int cmd_audit_privacy(uint32_t n, uint32_t z, uint32_t rounds, uint64_t seed) {
  if (n > 20) {
    std::fprintf(stderr, "exhaustive audit supports n <= 20\n");
    return kExitUsage;
  }
  auto gen = prac::KeyGenerator::systematic_vandermonde(n, z);

  if (auto bad = prac::find_singular_subset(gen.matrix())) {
    std::printf("FAIL singular key-coefficient subset (rows:");
    for (uint32_t r : *bad) std::printf(" %u", r);
    std::printf(")\n");
    return kExitVerification;
  }
  uint64_t subsets = 1;
  for (uint32_t i = 0; i < z; ++i) subsets = subsets * (n - i) / (i + 1);
  std::printf("mds-audit n=%u z=%u subsets=%" PRIu64 " all invertible\n", n, z, subsets);

  // Pad uniformity: bytes of g_j * R over fresh keys should look uniform.
  constexpr std::size_t kBytesPerRound = 64;
  prac::Rng rng(prac::derive_seed(seed, {0x617564ULL}));
  std::vector<std::vector<double>> counts(n + 1, std::vector<double>(256, 0.0));
  for (uint32_t t = 1; t <= rounds; ++t) {
    auto keys = prac::fresh_round_keys(t, 1, kBytesPerRound, z, rng);
    for (uint32_t j = z + 1; j <= n; ++j) {
      auto pad = gen.encode_key_row(j, keys);
      for (uint8_t byte : pad.data()) counts[j][byte] += 1.0;
    }
  }
  double crit = prac::chi2_critical(255, 0.01);
  std::vector<double> expected(256, rounds * kBytesPerRound / 256.0);
  bool ok = true;
  for (uint32_t j = z + 1; j <= n; ++j) {
    double stat = prac::chi2_statistic(counts[j], expected);
    bool pass = stat < crit;
    ok = ok && pass;
    std::printf("pad-uniformity row=%u chi2=%.1f crit=%.1f %s\n", j, stat, crit,
                pass ? "ok" : "FAIL");
  }
  if (!ok) return kExitVerification;
  std::printf("audit passed (%u rounds)\n", rounds);
  return kExitOk;
}

int cmd_fountain_overhead(uint32_t b, std::size_t trials, uint64_t seed, double c,
                          double delta, const std::string& out_path) {
  prac::DegreeDistribution dist(b, c, delta);
  std::vector<double> eps_ratio;
  std::vector<int64_t> eps_raw;
  for (std::size_t t = 0; t < trials; ++t) {
    prac::Rng rng(prac::derive_seed(seed, {0x6f7668ULL, t}));
    std::vector<uint8_t> blocks(b);
    rng.fill_bytes(blocks);
    prac::PeelingState decoder(b, 1);
    while (!decoder.is_complete()) {
      auto spec = prac::sample_spec(dist, rng);
      uint8_t acc = 0;
      for (uint32_t i : spec.blocks) acc ^= blocks[i];
      decoder.ingest(spec, {acc});
    }
    auto decoded = decoder.decoded();
    for (uint32_t i = 0; i < b; ++i)
      if (decoded[i][0] != blocks[i]) throw prac::IntegrityError("decode mismatch");
    eps_raw.push_back(decoder.epsilon());
    eps_ratio.push_back(static_cast<double>(decoder.epsilon()) / b);
  }

  std::ostringstream manifest;
  manifest << "# prac fountain-overhead b=" << b << " trials=" << trials
           << " seed=" << seed << " c=" << c << " delta=" << delta;
  std::printf("%s\n", manifest.str().c_str());
  std::printf("eps/b min=%.4f p25=%.4f median=%.4f p75=%.4f p90=%.4f max=%.4f mean=%.4f\n",
              prac::quantile(eps_ratio, 0.0), prac::quantile(eps_ratio, 0.25),
              prac::quantile(eps_ratio, 0.5), prac::quantile(eps_ratio, 0.75),
              prac::quantile(eps_ratio, 0.9), prac::quantile(eps_ratio, 1.0),
              prac::mean(eps_ratio));

  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::fprintf(stderr, "cannot open %s\n", out_path.c_str());
      return kExitUsage;
    }
    out << manifest.str() << "\ntrial,epsilon\n";
    for (std::size_t t = 0; t < trials; ++t)
      out << t << "," << eps_raw[t] << "\n";
  }
  return kExitOk;
}

int cmd_net_worker(uint16_t port, double delay_mean, uint64_t seed) {
  prac::WorkerOptions opts;
  opts.port = port;
  opts.delay_mean_s = delay_mean;
  opts.seed = seed;
  return prac::run_worker(opts);
}

void write_transcript(const std::string& path, const std::string& manifest,
                      const prac::Transcript& tr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw prac::DomainError("cannot open " + path);
  out << manifest << "\n";
  tr.write_csv(out);
}

int cmd_net_master(const std::vector<std::string>& endpoints, uint32_t z, uint32_t b,
                   uint32_t m, uint32_t ell, uint64_t seed, double timeout, bool verify,
                   const std::string& transcript_path, bool hide_x, uint32_t group1,
                   uint32_t z1, uint32_t z2) {
  prac::Rng rng(prac::derive_seed(seed, {0x6e6574ULL}));
  prac::FieldMatrix a = prac::FieldMatrix::random(m, ell, rng);
  prac::FieldMatrix x = prac::FieldMatrix::random(ell, 1, rng);

  std::ostringstream manifest;
  manifest << "# prac net-master workers=" << endpoints.size() << " z=" << z
           << " b=" << b << " m=" << m << " ell=" << ell << " seed=" << seed
           << " timeout=" << timeout << " hide-x=" << (hide_x ? 1 : 0);

  prac::FieldMatrix product;
  double elapsed = 0;

  if (!hide_x) {
    prac::NetMasterOptions opts;
    opts.endpoints = endpoints;
    opts.z = z;
    opts.b = b;
    opts.seed = seed;
    opts.timeout_s = timeout;
    auto res = prac::run_master(a, x, opts);
    product = std::move(res.product);
    elapsed = res.elapsed_s;
    if (!transcript_path.empty())
      write_transcript(transcript_path, manifest.str(), res.transcript);
  } else {
    if (group1 == 0 || group1 >= endpoints.size())
      throw prac::DomainError("--group1 must split the endpoint list in two");
    std::vector<std::string> g1(endpoints.begin(), endpoints.begin() + group1);
    std::vector<std::string> g2(endpoints.begin() + group1, endpoints.end());
    if (g1.size() <= z1 || g2.size() <= z2)
      throw prac::DomainError("degenerate group: size must exceed its z");

    prac::FieldMatrix mask = prac::FieldMatrix::random(ell, 1, rng);
    prac::FieldMatrix masked = x.added(mask);
    if (masked == x) throw prac::IntegrityError("mask degenerated to zero");

    prac::NetMasterOptions o1;
    o1.endpoints = g1;
    o1.z = z1;
    o1.b = b;
    o1.seed = prac::derive_seed(seed, {1});
    o1.timeout_s = timeout;
    auto r1 = prac::run_master(a, masked, o1);

    prac::NetMasterOptions o2;
    o2.endpoints = g2;
    o2.z = z2;
    o2.b = b;
    o2.seed = prac::derive_seed(seed, {2});
    o2.timeout_s = timeout;
    auto r2 = prac::run_master(a, mask, o2);

    product = r1.product.added(r2.product);
    elapsed = r1.elapsed_s + r2.elapsed_s;
    std::printf("hide-x audit: group-1 vector differs from raw x: %s\n",
                masked == x ? "NO" : "yes");
    if (!transcript_path.empty()) {
      write_transcript(transcript_path + ".group1", manifest.str(), r1.transcript);
      write_transcript(transcript_path + ".group2", manifest.str(), r2.transcript);
    }
  }

  std::printf("completed in %.3f s, %zu result rows\n", elapsed, product.rows());
  if (verify) {
    bool ok = product == prac::mat_vec_mul(a, x);
    std::printf("verify: %s\n", ok ? "PASS" : "FAIL");
    if (!ok) return kExitVerification;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PRAC: private rateless adaptive coded matrix-vector multiplication"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run seeded scheme simulations, emit CSV");
  std::string scheme = "prac", scenario = "1", adversary = "random", out_path;
  std::string sweep_arg, epsilon_mode = "measured", c3p_workers = "all";
  prac::SimConfig cfg;
  std::size_t trials = 100;
  uint64_t seed = default_seed();
  sim->add_option("--scheme", scheme, "prac|staircase|c3p|gc3p|all");
  sim->add_option("--scenario", scenario, "1|2|3|clustered");
  sim->add_option("--n", cfg.n, "workers");
  sim->add_option("--z", cfg.z, "colluding workers");
  sim->add_option("--b", cfg.b, "row blocks");
  sim->add_option("--m", cfg.m, "rows of A");
  sim->add_option("--ell", cfg.ell, "columns of A");
  sim->add_option("--trials", trials, "trials per point");
  sim->add_option("--seed", seed, "base seed (default: PRAC_SEED env or 0)");
  sim->add_option("--out", out_path, "CSV output path");
  sim->add_option("--adversary-rule", adversary, "fastest|slowest|random");
  sim->add_option("--sweep", sweep_arg, "param:lo..hi[:step], param in n,z,b,m,ell");
  sim->add_option("--data-cols", cfg.data_cols, "payload width carried in runs");
  sim->add_option("--epsilon-mode", epsilon_mode,
                  "measured|nominal epsilon for closed forms");
  sim->add_option("--c3p-workers", c3p_workers, "all|survivors");
  bool paired = true;
  sim->add_flag("--paired,!--no-paired", paired,
                "share per-trial delay streams across schemes");

  // audit-privacy
  auto* audit = app.add_subcommand("audit-privacy",
                                   "exhaustive MDS subset audit plus pad uniformity");
  uint32_t a_n = 4, a_z = 2, a_rounds = 100;
  uint64_t a_seed = default_seed();
  audit->add_option("--n", a_n, "workers (<= 20)");
  audit->add_option("--z", a_z, "colluding workers");
  audit->add_option("--rounds", a_rounds, "rounds of fresh keys to sample");
  audit->add_option("--seed", a_seed, "seed");

  // fountain-overhead
  auto* overhead = app.add_subcommand("fountain-overhead",
                                      "measure LT decoding overhead quantiles");
  uint32_t f_b = 1000;
  std::size_t f_trials = 200;
  uint64_t f_seed = default_seed();
  double f_c = prac::DegreeDistribution::kDefaultC;
  double f_delta = prac::DegreeDistribution::kDefaultDelta;
  std::string f_out;
  overhead->add_option("--b", f_b, "source blocks");
  overhead->add_option("--trials", f_trials, "decode trials");
  overhead->add_option("--seed", f_seed, "seed");
  overhead->add_option("--c", f_c, "robust soliton c");
  overhead->add_option("--delta", f_delta, "robust soliton delta");
  overhead->add_option("--out", f_out, "per-trial CSV output path");

  // net-worker
  auto* worker = app.add_subcommand("net-worker", "serve one master until STOP");
  uint16_t w_port = 0;
  double w_delay = 0;
  uint64_t w_seed = default_seed() + 1;
  worker->add_option("--port", w_port, "listen port (0 = ephemeral, printed)");
  worker->add_option("--delay-mean", w_delay, "exponential artificial delay mean (s)");
  worker->add_option("--seed", w_seed, "delay stream seed");

  // net-master
  auto* master = app.add_subcommand("net-master", "offload A*x to live workers");
  std::vector<std::string> endpoints;
  uint32_t m_z = 1, m_b = 6, m_m = 60, m_ell = 1000;
  uint64_t m_seed = default_seed();
  double m_timeout = 120;
  bool m_verify = false, m_hidex = false;
  std::string m_transcript;
  uint32_t m_group1 = 0, m_z1 = 0, m_z2 = 0;
  master->add_option("--workers", endpoints, "host:port list")->delimiter(',')->required();
  master->add_option("--z", m_z, "colluding workers");
  master->add_option("--b", m_b, "row blocks");
  master->add_option("--m", m_m, "rows of A");
  master->add_option("--ell", m_ell, "columns of A");
  master->add_option("--seed", m_seed, "seed for A, x and the packet stream");
  master->add_option("--timeout", m_timeout, "seconds before giving up");
  master->add_flag("--verify", m_verify, "check the result against local A*x");
  master->add_option("--transcript", m_transcript, "write the event transcript CSV");
  master->add_flag("--hide-x", m_hidex, "two-group run that also hides x");
  master->add_option("--group1", m_group1, "size of worker group 1 (hide-x)");
  master->add_option("--z1", m_z1, "z for group 1 (hide-x)");
  master->add_option("--z2", m_z2, "z for group 2 (hide-x)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      cfg.scenario = prac::parse_scenario(scenario);
      cfg.adversary_rule = prac::parse_adversary_rule(adversary);
      cfg.seed = seed;
      cfg.paired = paired;
      cfg.c3p_all_workers = c3p_workers != "survivors";
      if (epsilon_mode != "measured" && epsilon_mode != "nominal")
        throw prac::DomainError("--epsilon-mode must be measured or nominal");
      if (sweep_arg.empty()) cfg.validate();
      return cmd_simulate(scheme, cfg, trials, out_path, sweep_arg, epsilon_mode);
    }
    if (audit->parsed()) return cmd_audit_privacy(a_n, a_z, a_rounds, a_seed);
    if (overhead->parsed())
      return cmd_fountain_overhead(f_b, f_trials, f_seed, f_c, f_delta, f_out);
    if (worker->parsed()) return cmd_net_worker(w_port, w_delay, w_seed);
    if (master->parsed())
      return cmd_net_master(endpoints, m_z, m_b, m_m, m_ell, m_seed, m_timeout,
                            m_verify, m_transcript, m_hidex, m_group1, m_z1, m_z2);
  } catch (const prac::TimeoutError& e) {
    std::fprintf(stderr, "timeout: %s\n", e.what());
    return kExitTimeout;
  } catch (const prac::DomainError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitVerification;
  }
  return kExitUsage;
}
