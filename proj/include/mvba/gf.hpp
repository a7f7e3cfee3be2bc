// GF(2^k) arithmetic for k in [1, 32] and the keyed payload digest built on
// it.  Field elements are polynomials over GF(2) reduced modulo a fixed
// irreducible polynomial per width (see reduction_poly); addition is XOR.
//
// The digest of a payload of D bits under key K is
//     sum over j in [1, D/k] of  b_j * K^j
// where b_j is the j-th k-bit block of the payload.  The sum is a polynomial
// in K with zero constant term and degree at most D/k, so two distinct
// payloads collide on at most D/k of the 2^k keys.
#pragma once

#include <cstdint>

#include <boost/multiprecision/cpp_int.hpp>

#include "mvba/bitvec.hpp"
#include "mvba/common.hpp"

namespace mvba {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr int kMinFieldWidth = 1;
inline constexpr int kMaxFieldWidth = 32;

// Low-order bits of the width-k modulus (the leading x^k term is implicit).
// Lowest-weight irreducible polynomials per degree; the table is a
// reproducibility contract and is verified irreducible by the test suite.
std::uint32_t reduction_poly(int width);

struct FieldElement {
    std::uint32_t value = 0;
    std::uint8_t width = 0;

    FieldElement() = default;
    FieldElement(std::uint32_t v, int w);

    bool operator==(const FieldElement&) const = default;
};

FieldElement gf_add(FieldElement a, FieldElement b);
FieldElement gf_mul(FieldElement a, FieldElement b);

// Digest payload under key; payload.size() must be a positive multiple of
// key.width.
FieldElement keyed_hash(const BitVec& payload, FieldElement key);

struct KeyedDigest {
    FieldElement key;
    FieldElement digest;

    bool operator==(const KeyedDigest&) const = default;
};

// Per-pair check performed in every generation: does the digest the receiver
// got match the receiver's own payload?
inline bool digest_matches(const BitVec& own_payload, const KeyedDigest& h) {
    return keyed_hash(own_payload, h.key) == h.digest;
}

// Exact worst-case collision probability (D/k) / 2^k for one keyed check.
Rational collision_bound(int payload_bits, int key_bits);

}  // namespace mvba
