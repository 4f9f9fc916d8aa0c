#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "prac/gf256.hpp"
#include "prac/rng.hpp"

using namespace prac;

TEST_CASE("field addition is xor") {
  CHECK(gf::add(0x00, 0x57) == 0x57);
  CHECK(gf::add(0x57, 0x57) == 0x00);  // characteristic 2
  CHECK(gf::add(0x53, 0xca) == 0x99);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    uint8_t a = rng.byte(), b = rng.byte();
    CHECK(gf::add(a, b) == (a ^ b));
    CHECK(gf::add(a, gf::add(a, b)) == b);  // self-inverse
  }
}

TEST_CASE("table multiply matches the bit-serial reference exhaustively") {
  CHECK(gf::mul(0x01, 0xab) == 0xab);
  CHECK(gf::mul(0x00, 0xab) == 0x00);
  CHECK(gf::mul(0x53, 0xca) == gf::mul_bitserial(0x53, 0xca));
  // Known answer for this reduction polynomial: 0x53 and 0xca are inverses.
  CHECK(gf::mul(0x53, 0xca) == 0x01);
  for (int a = 0; a < 256; ++a)
    for (int b = 0; b < 256; ++b)
      REQUIRE(gf::mul(static_cast<uint8_t>(a), static_cast<uint8_t>(b)) ==
              gf::mul_bitserial(static_cast<uint8_t>(a), static_cast<uint8_t>(b)));
}

TEST_CASE("inverses") {
  CHECK(gf::inv(0x01) == 0x01);
  CHECK_THROWS_AS(gf::inv(0x00), DomainError);
  for (int a = 1; a < 256; ++a) {
    uint8_t inv = gf::inv(static_cast<uint8_t>(a));
    CHECK(gf::mul(static_cast<uint8_t>(a), inv) == 1);
    CHECK(gf::inv(inv) == a);
  }
}

TEST_CASE("field laws on random triples") {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    uint8_t a = rng.byte(), b = rng.byte(), c = rng.byte();
    CHECK(gf::add(gf::add(a, b), c) == gf::add(a, gf::add(b, c)));
    CHECK(gf::mul(a, gf::add(b, c)) == gf::add(gf::mul(a, b), gf::mul(a, c)));
    CHECK(gf::mul(gf::mul(a, b), c) == gf::mul(a, gf::mul(b, c)));
  }
}

TEST_CASE("mat_vec_mul identity and zero") {
  Rng rng(3);
  FieldMatrix v = FieldMatrix::random(5, 1, rng);
  CHECK(mat_vec_mul(FieldMatrix::identity(5), v) == v);
  FieldMatrix zero(4, 5);
  FieldMatrix out = mat_vec_mul(zero, v);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.at(i, 0) == 0);
}

TEST_CASE("mat_vec_mul equals the scalar-loop oracle") {
  Rng rng(4);
  FieldMatrix m = FieldMatrix::random(4, 3, rng);
  FieldMatrix v = FieldMatrix::random(3, 1, rng);
  FieldMatrix got = mat_vec_mul(m, v);
  for (std::size_t i = 0; i < 4; ++i) {
    uint8_t acc = 0;
    for (std::size_t j = 0; j < 3; ++j) acc ^= gf::mul(m.at(i, j), v.at(j, 0));
    CHECK(got.at(i, 0) == acc);
  }
  CHECK_THROWS_AS(mat_vec_mul(m, FieldMatrix::random(4, 1, rng)), DomainError);
  CHECK_THROWS_AS(mat_vec_mul(m, FieldMatrix::random(3, 2, rng)), DomainError);
}

TEST_CASE("matrix product is associative with a vector") {
  Rng rng(5);
  FieldMatrix m = FieldMatrix::random(4, 4, rng);
  FieldMatrix n = FieldMatrix::random(4, 3, rng);
  FieldMatrix v = FieldMatrix::random(3, 1, rng);
  CHECK(mat_vec_mul(m.mul(n), v) == mat_vec_mul(m, mat_vec_mul(n, v)));
}

TEST_CASE("mat_vec_mul is linear") {
  Rng rng(6);
  FieldMatrix m = FieldMatrix::random(6, 5, rng);
  FieldMatrix u = FieldMatrix::random(5, 1, rng);
  FieldMatrix v = FieldMatrix::random(5, 1, rng);
  CHECK(mat_vec_mul(m, u.added(v)) == mat_vec_mul(m, u).added(mat_vec_mul(m, v)));
}

TEST_CASE("inverse of identity and diagonal") {
  CHECK(FieldMatrix::identity(3).inverse() == FieldMatrix::identity(3));
  FieldMatrix d(3, 3);
  d.at(0, 0) = 0x02;
  d.at(1, 1) = 0x53;
  d.at(2, 2) = 0xff;
  FieldMatrix di = d.inverse();
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(di.at(i, i) == gf::inv(d.at(i, i)));
}

TEST_CASE("random nonsingular inverses verify by multiplication") {
  Rng rng(7);
  int done = 0;
  while (done < 100) {
    std::size_t n = 1 + rng.below(8);
    FieldMatrix m = FieldMatrix::random(n, n, rng);
    FieldMatrix inv;
    try {
      inv = m.inverse();
    } catch (const SingularMatrixError&) {
      continue;
    }
    CHECK(m.mul(inv) == FieldMatrix::identity(n));
    CHECK(inv.mul(m) == FieldMatrix::identity(n));
    ++done;
  }
}

TEST_CASE("singular matrix reports the pivot column") {
  FieldMatrix m(3, 3);
  m.at(0, 0) = 1;
  m.at(1, 0) = 1;  // column 1 and 2 are all zero
  try {
    (void)m.inverse();
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(e.pivot_col() == 1);
  }
}

TEST_CASE("serialization round trip and layout") {
  Rng rng(8);
  FieldMatrix m = FieldMatrix::random(3, 2, rng);
  auto bytes = m.serialize();
  REQUIRE(bytes.size() == 8 + 6);
  // rows then cols, big-endian.
  CHECK(bytes[3] == 3);
  CHECK(bytes[7] == 2);
  CHECK(bytes[8] == m.at(0, 0));
  CHECK(bytes[9] == m.at(0, 1));
  CHECK(FieldMatrix::deserialize(bytes) == m);
}
