#include <doctest.h>

#include <bit>
#include <cstdint>
#include <stdexcept>

#include "mvba/gf.hpp"
#include "mvba/rng.hpp"

using mvba::BitVec;
using mvba::FieldElement;
using mvba::Rational;

namespace {

// Independent multiply oracle: Russian peasant with per-step reduction of
// the running power of x, instead of the library's full product followed by
// one long division.
std::uint32_t slow_mul(std::uint32_t a, std::uint32_t b, int k) {
    std::uint64_t top = std::uint64_t{1} << k;
    std::uint64_t modulus = top | mvba::reduction_poly(k);
    std::uint64_t acc = 0, x = a;
    for (int i = 0; i < k; ++i) {
        if ((b >> i) & 1u) acc ^= x;
        x <<= 1;
        if (x & top) x ^= modulus;
    }
    return static_cast<std::uint32_t>(acc);
}

// Remainder of a modulo d, both bit-packed GF(2) polynomials.
std::uint64_t poly_mod(std::uint64_t a, std::uint64_t d) {
    int dd = std::bit_width(d) - 1;
    while (a != 0) {
        int da = std::bit_width(a) - 1;
        if (da < dd) break;
        a ^= d << (da - dd);
    }
    return a;
}

}  // namespace

TEST_SUITE("gf") {

TEST_CASE("every reduction polynomial is irreducible") {
    // A reducible degree-k polynomial has a factor of degree <= k/2, so
    // trial division by everything up that high is a complete check.
    for (int k = 1; k <= 32; ++k) {
        std::uint64_t p = (std::uint64_t{1} << k) | mvba::reduction_poly(k);
        for (std::uint64_t d = 2; std::bit_width(d) - 1 <= k / 2; ++d) {
            CAPTURE(k);
            CAPTURE(d);
            CHECK(poly_mod(p, d) != 0);
        }
    }
}

TEST_CASE("multiplication matches the independent oracle for every width") {
    mvba::RngStream rng(0xF1E7D);
    for (int k = 1; k <= 32; ++k) {
        std::uint64_t mask = k == 32 ? 0xFFFFFFFFull : (1ull << k) - 1;
        for (int rep = 0; rep < 200; ++rep) {
            auto a = static_cast<std::uint32_t>(rng.next() & mask);
            auto b = static_cast<std::uint32_t>(rng.next() & mask);
            CAPTURE(k);
            CAPTURE(a);
            CAPTURE(b);
            CHECK(mvba::gf_mul(FieldElement(a, k), FieldElement(b, k)).value ==
                  slow_mul(a, b, k));
        }
    }
}

TEST_CASE("GF(4) multiplication table, exhaustively") {
    // x^2 + x + 1: 2 * 2 = x^2 = x + 1 = 3, and so on.
    const std::uint32_t table[4][4] = {
        {0, 0, 0, 0},
        {0, 1, 2, 3},
        {0, 2, 3, 1},
        {0, 3, 1, 2},
    };
    for (std::uint32_t a = 0; a < 4; ++a)
        for (std::uint32_t b = 0; b < 4; ++b)
            CHECK(mvba::gf_mul(FieldElement(a, 2), FieldElement(b, 2)).value == table[a][b]);
}

TEST_CASE("field axioms hold on random triples") {
    mvba::RngStream rng(0xA1);
    for (int k : {1, 4, 8, 16, 32}) {
        std::uint64_t mask = k == 32 ? 0xFFFFFFFFull : (1ull << k) - 1;
        for (int rep = 0; rep < 100; ++rep) {
            FieldElement a(static_cast<std::uint32_t>(rng.next() & mask), k);
            FieldElement b(static_cast<std::uint32_t>(rng.next() & mask), k);
            FieldElement c(static_cast<std::uint32_t>(rng.next() & mask), k);
            CHECK(mvba::gf_mul(a, b) == mvba::gf_mul(b, a));
            CHECK(mvba::gf_mul(mvba::gf_mul(a, b), c) == mvba::gf_mul(a, mvba::gf_mul(b, c)));
            CHECK(mvba::gf_mul(a, mvba::gf_add(b, c)) ==
                  mvba::gf_add(mvba::gf_mul(a, b), mvba::gf_mul(a, c)));
            FieldElement one(1, k);
            CHECK(mvba::gf_mul(a, one) == a);
        }
    }
}

TEST_CASE("every nonzero element of GF(16) has a multiplicative inverse") {
    for (std::uint32_t a = 1; a < 16; ++a) {
        int inverses = 0;
        for (std::uint32_t b = 1; b < 16; ++b) {
            if (mvba::gf_mul(FieldElement(a, 4), FieldElement(b, 4)).value == 1) ++inverses;
        }
        CHECK(inverses == 1);
    }
}

TEST_CASE("digest of a two block payload evaluates b1*K + b2*K^2") {
    // k = 2, payload blocks (1, 2) packed low block first: bits 1001.
    BitVec payload = BitVec::from_u64(0b1001, 4);
    REQUIRE(payload.block_u32(0, 2) == 1);
    REQUIRE(payload.block_u32(1, 2) == 2);

    // Key 3: 1*3 + 2*(3*3) = 3 + 2*2 = 3 + 3 = 0.
    CHECK(mvba::keyed_hash(payload, FieldElement(3, 2)).value == 0);
    // Key 2: 1*2 + 2*(2*2) = 2 + 2*3 = 2 + 1 = 3.
    CHECK(mvba::keyed_hash(payload, FieldElement(2, 2)).value == 3);
    // Key 1: 1 + 2 = 3.  Key 0: zero constant term.
    CHECK(mvba::keyed_hash(payload, FieldElement(1, 2)).value == 3);
    CHECK(mvba::keyed_hash(payload, FieldElement(0, 2)).value == 0);
}

TEST_CASE("digest is linear in the payload and zero on the zero payload") {
    mvba::RngStream rng(0x5EED);
    for (int rep = 0; rep < 100; ++rep) {
        BitVec a = rng.bits(16);
        BitVec b = rng.bits(16);
        FieldElement key(static_cast<std::uint32_t>(rng.below(16)), 4);
        CHECK(mvba::keyed_hash(a ^ b, key) ==
              mvba::gf_add(mvba::keyed_hash(a, key), mvba::keyed_hash(b, key)));
    }
    for (std::uint32_t key = 0; key < 8; ++key)
        CHECK(mvba::keyed_hash(BitVec(9), FieldElement(key, 3)).value == 0);
}

TEST_CASE("no payload collides with another on more than D/k keys") {
    // By linearity it suffices that every nonzero 6-bit payload has at most
    // 2 = D/k roots among the 8 keys of GF(8); checked exhaustively.
    for (std::uint32_t p = 1; p < 64; ++p) {
        BitVec payload = BitVec::from_u64(p, 6);
        int roots = 0;
        for (std::uint32_t key = 0; key < 8; ++key) {
            if (mvba::keyed_hash(payload, FieldElement(key, 3)).value == 0) ++roots;
        }
        CAPTURE(p);
        CHECK(roots >= 1);  // key 0 is always a root
        CHECK(roots <= 2);
    }
}

TEST_CASE("digest_matches compares a recomputation against the received pair") {
    BitVec payload = BitVec::from_u64(0xBEEF, 16);
    FieldElement key(0x9, 4);
    mvba::KeyedDigest good{key, mvba::keyed_hash(payload, key)};
    CHECK(mvba::digest_matches(payload, good));
    mvba::KeyedDigest bad = good;
    bad.digest.value ^= 1u;
    CHECK_FALSE(mvba::digest_matches(payload, bad));
    BitVec other = payload;
    other.flip_bit(3);
    CHECK_FALSE(mvba::digest_matches(other, good));
}

TEST_CASE("collision bound is exactly (D/k) / 2^k") {
    CHECK(mvba::collision_bound(8, 4) == Rational(1, 8));
    CHECK(mvba::collision_bound(64, 8) == Rational(1, 32));
    CHECK(mvba::collision_bound(4, 4) == Rational(1, 16));
    CHECK(mvba::collision_bound(16, 16) == Rational(1, 65536));
    CHECK(mvba::collision_bound(2, 1) == Rational(1, 1));  // degenerate, not < 1
    CHECK_THROWS_AS(mvba::collision_bound(10, 4), mvba::ConfigError);
    CHECK_THROWS_AS(mvba::collision_bound(0, 4), mvba::ConfigError);
    CHECK_THROWS_AS(mvba::collision_bound(-8, 4), mvba::ConfigError);
}

TEST_CASE("width validation rejects out of range and mismatched operands") {
    CHECK_THROWS_AS(mvba::reduction_poly(0), mvba::ConfigError);
    CHECK_THROWS_AS(mvba::reduction_poly(33), mvba::ConfigError);
    CHECK_THROWS_AS(FieldElement(16, 4), std::invalid_argument);
    CHECK_NOTHROW(FieldElement(0xFFFFFFFFu, 32));
    CHECK_THROWS_AS(mvba::gf_add(FieldElement(1, 4), FieldElement(1, 5)),
                    std::invalid_argument);
    CHECK_THROWS_AS(mvba::gf_mul(FieldElement(1, 4), FieldElement(1, 5)),
                    std::invalid_argument);
    // Payload length must be a positive multiple of the key width.
    CHECK_THROWS_AS(mvba::keyed_hash(BitVec(5), FieldElement(1, 2)), std::invalid_argument);
    CHECK_THROWS_AS(mvba::keyed_hash(BitVec(), FieldElement(1, 2)), std::invalid_argument);
}

}  // TEST_SUITE
