#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "prac/fountain.hpp"
#include "prac/stats.hpp"

using namespace prac;

namespace {

std::vector<FieldMatrix> random_blocks(uint32_t b, std::size_t rows, std::size_t cols,
                                       Rng& rng) {
  std::vector<FieldMatrix> blocks;
  for (uint32_t i = 0; i < b; ++i) blocks.push_back(FieldMatrix::random(rows, cols, rng));
  return blocks;
}

std::vector<uint8_t> block_bytes(const FieldMatrix& m) {
  return std::vector<uint8_t>(m.data().begin(), m.data().end());
}

// GF(2) rank of the incidence matrix of the received specs (rows) over the
// b source blocks, by elimination on bitmasks. Oracle for small b.
uint32_t gf2_rank(const std::vector<FountainSpec>& specs, uint32_t b) {
  REQUIRE(b <= 32);
  std::vector<uint32_t> rows;
  for (const auto& s : specs) {
    uint32_t mask = 0;
    for (uint32_t i : s.blocks) mask |= 1u << i;
    rows.push_back(mask);
  }
  uint32_t rank = 0;
  for (uint32_t col = 0; col < b; ++col) {
    uint32_t bit = 1u << col;
    auto pivot = std::find_if(rows.begin() + rank, rows.end(),
                              [&](uint32_t r) { return r & bit; });
    if (pivot == rows.end()) continue;
    std::swap(*pivot, rows[rank]);
    for (std::size_t r = 0; r < rows.size(); ++r)
      if (r != rank && (rows[r] & bit)) rows[r] ^= rows[rank];
    ++rank;
  }
  return rank;
}

// The seven information packets carried by the worked 4-worker example, as
// 0-based block sets over b=6, in their usable-arrival order: the block-1
// packet straggles in last, so the decode needs all seven.
const std::vector<FountainSpec> kWalkthroughSpecs = {
    FountainSpec{{3}},    FountainSpec{{2, 3, 5}}, FountainSpec{{2}},
    FountainSpec{{3, 4}}, FountainSpec{{1}},       FountainSpec{{1, 2}},
    FountainSpec{{0}},
};

}  // namespace

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(FountainSpec{}.validate(4), DomainError);
  CHECK_THROWS_AS((FountainSpec{{0, 0}}.validate(4)), DomainError);
  CHECK_THROWS_AS((FountainSpec{{2, 1}}.validate(4)), DomainError);
  CHECK_THROWS_AS((FountainSpec{{4}}.validate(4)), DomainError);
  FountainSpec{{0, 3}}.validate(4);
}

TEST_CASE("spec wire form") {
  FountainSpec spec{{1, 5, 70000}};
  ByteWriter w;
  spec.serialize(w);
  auto bytes = w.take();
  REQUIRE(bytes.size() == 2 + 3 * 4);
  CHECK(bytes[0] == 0);
  CHECK(bytes[1] == 3);
  ByteReader r(bytes);
  CHECK(FountainSpec::deserialize(r) == spec);
}

TEST_CASE("degree distribution sums to one and spans 1..b") {
  for (uint32_t b : {1u, 2u, 10u, 100u, 1000u}) {
    DegreeDistribution dist(b);
    double total = 0;
    for (uint32_t d = 1; d <= b; ++d) {
      CHECK(dist.pmf(d) > 0.0);
      total += dist.pmf(d);
    }
    CHECK(std::abs(total - 1.0) < 0x1.0p-32);
    CHECK(dist.pmf(0) == 0.0);
    CHECK(dist.pmf(b + 1) == 0.0);
  }
}

TEST_CASE("single block always yields spec {0}") {
  DegreeDistribution dist(1);
  Rng rng(11);
  for (int i = 0; i < 100; ++i) CHECK(sample_spec(dist, rng) == FountainSpec{{0}});
}

TEST_CASE("sampled indices stay below b") {
  DegreeDistribution dist(17);
  Rng rng(12);
  for (int i = 0; i < 10000; ++i) {
    auto spec = sample_spec(dist, rng);
    spec.validate(17);
  }
}

TEST_CASE("empirical degree histogram matches the robust soliton pmf") {
  const uint32_t b = 30;
  const int draws = 100000;
  DegreeDistribution dist(b);
  Rng rng(13);
  std::vector<double> counts(b, 0.0);
  for (int i = 0; i < draws; ++i) counts[dist.sample_degree(rng) - 1] += 1.0;

  // Merge degrees with small expectation into one tail cell.
  std::vector<double> observed, expected;
  double tail_obs = 0, tail_exp = 0;
  for (uint32_t d = 1; d <= b; ++d) {
    double e = dist.pmf(d) * draws;
    if (e >= 10.0) {
      observed.push_back(counts[d - 1]);
      expected.push_back(e);
    } else {
      tail_obs += counts[d - 1];
      tail_exp += e;
    }
  }
  if (tail_exp > 0) {
    observed.push_back(tail_obs);
    expected.push_back(tail_exp);
  }
  double stat = chi2_statistic(observed, expected);
  CHECK(stat < chi2_critical(observed.size() - 1, 0.01));
}

TEST_CASE("encode selects and xors blocks") {
  Rng rng(14);
  auto blocks = random_blocks(6, 2, 3, rng);

  CHECK(fountain_encode(blocks, FountainSpec{{4}}) == blocks[4]);

  auto equal = blocks;
  equal[1] = equal[0];
  FieldMatrix zero(2, 3);
  CHECK(fountain_encode(equal, FountainSpec{{0, 1}}) == zero);

  // The walkthrough's first-round packet A_1 + A_3 (1-based blocks).
  CHECK(fountain_encode(blocks, FountainSpec{{0, 2}}) == blocks[0].added(blocks[2]));

  auto ragged = blocks;
  ragged[2] = FieldMatrix(3, 3);
  CHECK_THROWS_AS(fountain_encode(ragged, FountainSpec{{0, 2}}), DomainError);
}

TEST_CASE("degree-1 ingest recovers immediately") {
  PeelingState st(6, 4);
  CHECK_FALSE(st.is_complete());
  CHECK(st.ingest(FountainSpec{{3}}, {1, 2, 3, 4}) == 1);
  CHECK(st.recovered_count() == 1);
}

TEST_CASE("peeling chain: {0,1} then {0}") {
  PeelingState st(2, 1);
  CHECK(st.ingest(FountainSpec{{0, 1}}, {0x5a}) == 0);
  CHECK(st.ingest(FountainSpec{{0}}, {0x21}) == 2);
  CHECK(st.is_complete());
  auto blocks = st.decoded();
  CHECK(blocks[0][0] == 0x21);
  CHECK(blocks[1][0] == (0x5a ^ 0x21));
}

TEST_CASE("walkthrough packet set decodes all six blocks with epsilon 1") {
  Rng rng(15);
  auto blocks = random_blocks(6, 1, 5, rng);
  PeelingState st(6, 5);
  for (const auto& spec : kWalkthroughSpecs)
    st.ingest(spec, block_bytes(fountain_encode(blocks, spec)));
  REQUIRE(st.is_complete());
  CHECK(st.received_count() == 7);
  CHECK(st.epsilon() == 1);
  auto decoded = st.decoded();
  for (uint32_t i = 0; i < 6; ++i) CHECK(decoded[i] == block_bytes(blocks[i]));
}

TEST_CASE("identical duplicates are ignored, conflicting ones rejected") {
  PeelingState st(4, 1);
  CHECK(st.ingest(FountainSpec{{0, 1}}, {0x11}) == 0);
  CHECK(st.ingest(FountainSpec{{0, 1}}, {0x11}) == 0);  // idempotent
  CHECK_THROWS_AS(st.ingest(FountainSpec{{0, 1}}, {0x12}), IntegrityError);

  PeelingState st2(4, 1);
  st2.ingest(FountainSpec{{2}}, {0x40});
  st2.ingest(FountainSpec{{2}}, {0x40});  // consistent redundancy
  CHECK_THROWS_AS(st2.ingest(FountainSpec{{2}}, {0x41}), IntegrityError);
}

TEST_CASE("decoded before completion is a state error") {
  PeelingState st(3, 1);
  st.ingest(FountainSpec{{0}}, {1});
  CHECK_THROWS_AS(st.decoded(), StateError);
}

TEST_CASE("b degree-1 packets complete the decode") {
  PeelingState st(5, 1);
  for (uint32_t i = 0; i < 5; ++i) {
    CHECK_FALSE(st.is_complete());
    st.ingest(FountainSpec::single(i), {static_cast<uint8_t>(i)});
  }
  CHECK(st.is_complete());
  CHECK(st.received_count() == 5);
}

TEST_CASE("random decode equals originals and rank-b incidence") {
  Rng rng(16);
  for (int trial = 0; trial < 40; ++trial) {
    uint32_t b = 2 + static_cast<uint32_t>(rng.below(15));
    DegreeDistribution dist(b);
    auto blocks = random_blocks(b, 1, 3, rng);
    PeelingState st(b, 3);
    std::vector<FountainSpec> received;
    while (!st.is_complete()) {
      auto spec = sample_spec(dist, rng);
      received.push_back(spec);
      st.ingest(spec, block_bytes(fountain_encode(blocks, spec)));
    }
    CHECK(st.received_count() >= b);
    CHECK(gf2_rank(received, b) == b);
    auto decoded = st.decoded();
    for (uint32_t i = 0; i < b; ++i) CHECK(decoded[i] == block_bytes(blocks[i]));
  }
}

TEST_CASE("completion is insensitive to ingest order") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    uint32_t b = 2 + static_cast<uint32_t>(rng.below(5));
    DegreeDistribution dist(b);
    auto blocks = random_blocks(b, 1, 2, rng);

    std::vector<FountainSpec> specs;
    {
      PeelingState probe(b, 2);
      while (!probe.is_complete()) {
        auto spec = sample_spec(dist, rng);
        specs.push_back(spec);
        probe.ingest(spec, block_bytes(fountain_encode(blocks, spec)));
      }
    }
    for (int perm = 0; perm < 10; ++perm) {
      auto shuffled = specs;
      for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
      PeelingState st(b, 2);
      for (const auto& spec : shuffled)
        st.ingest(spec, block_bytes(fountain_encode(blocks, spec)));
      CHECK(st.is_complete());
    }
  }
}

TEST_CASE("moderate-b overhead stays sane") {
  // The acceptance suite pins the b=1000 figure; this is a smoke check.
  Rng rng(18);
  const uint32_t b = 200;
  DegreeDistribution dist(b);
  std::vector<double> ratios;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<uint8_t> blocks(b);
    rng.fill_bytes(blocks);
    PeelingState st(b, 1);
    while (!st.is_complete()) {
      auto spec = sample_spec(dist, rng);
      uint8_t acc = 0;
      for (uint32_t i : spec.blocks) acc ^= blocks[i];
      st.ingest(spec, {acc});
    }
    ratios.push_back(static_cast<double>(st.epsilon()) / b);
  }
  CHECK(quantile(ratios, 0.5) < 0.35);
}
