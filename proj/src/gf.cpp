#include "mvba/gf.hpp"

#include <array>
#include <string>

namespace mvba {

namespace {

// Index = degree k; value = modulus with the leading x^k bit stripped.
// Degrees 1..32, lowest-weight irreducible polynomial for each degree
// (trinomial where one exists, else pentanomial).
constexpr std::array<std::uint32_t, 33> kReductionPoly = {
    0,
    0x1,        // x + 1
    0x3,        // x^2 + x + 1
    0x3,        // x^3 + x + 1
    0x3,        // x^4 + x + 1
    0x5,        // x^5 + x^2 + 1
    0x3,        // x^6 + x + 1
    0x3,        // x^7 + x + 1
    0x1B,       // x^8 + x^4 + x^3 + x + 1
    0x3,        // x^9 + x + 1
    0x9,        // x^10 + x^3 + 1
    0x5,        // x^11 + x^2 + 1
    0x9,        // x^12 + x^3 + 1
    0x1B,       // x^13 + x^4 + x^3 + x + 1
    0x21,       // x^14 + x^5 + 1
    0x3,        // x^15 + x + 1
    0x2B,       // x^16 + x^5 + x^3 + x + 1
    0x9,        // x^17 + x^3 + 1
    0x9,        // x^18 + x^3 + 1
    0x27,       // x^19 + x^5 + x^2 + x + 1
    0x9,        // x^20 + x^3 + 1
    0x5,        // x^21 + x^2 + 1
    0x3,        // x^22 + x + 1
    0x21,       // x^23 + x^5 + 1
    0x1B,       // x^24 + x^4 + x^3 + x + 1
    0x9,        // x^25 + x^3 + 1
    0x1B,       // x^26 + x^4 + x^3 + x + 1
    0x27,       // x^27 + x^5 + x^2 + x + 1
    0x3,        // x^28 + x + 1
    0x5,        // x^29 + x^2 + 1
    0x3,        // x^30 + x + 1
    0x9,        // x^31 + x^3 + 1
    0x8D,       // x^32 + x^7 + x^3 + x^2 + 1
};

void check_width(int width) {
    if (width < kMinFieldWidth || width > kMaxFieldWidth)
        throw ConfigError("unsupported field width k=" + std::to_string(width) +
                          " (supported: 1..32)");
}

std::uint32_t width_mask(int width) {
    return width == 32 ? ~std::uint32_t{0} : ((std::uint32_t{1} << width) - 1);
}

}  // namespace

std::uint32_t reduction_poly(int width) {
    check_width(width);
    return kReductionPoly[static_cast<std::size_t>(width)];
}

FieldElement::FieldElement(std::uint32_t v, int w) {
    check_width(w);
    if ((v & ~width_mask(w)) != 0)
        throw std::invalid_argument("field element value wider than field");
    value = v;
    width = static_cast<std::uint8_t>(w);
}

FieldElement gf_add(FieldElement a, FieldElement b) {
    if (a.width != b.width)
        throw std::invalid_argument("gf_add: width mismatch");
    return FieldElement(a.value ^ b.value, a.width);
}

FieldElement gf_mul(FieldElement a, FieldElement b) {
    if (a.width != b.width)
        throw std::invalid_argument("gf_mul: width mismatch");
    int k = a.width;
    check_width(k);
    // Carry-less product, degree <= 2k - 2 <= 62, fits in 64 bits.
    std::uint64_t prod = 0, x = a.value, y = b.value;
    while (y) {
        if (y & 1u) prod ^= x;
        x <<= 1;
        y >>= 1;
    }
    std::uint64_t modulus = (std::uint64_t{1} << k) | kReductionPoly[static_cast<std::size_t>(k)];
    for (int bit = 2 * k - 2; bit >= k; --bit)
        if ((prod >> bit) & 1u) prod ^= modulus << (bit - k);
    return FieldElement(static_cast<std::uint32_t>(prod), k);
}

FieldElement keyed_hash(const BitVec& payload, FieldElement key) {
    int k = key.width;
    check_width(k);
    std::size_t d_bits = payload.size();
    if (d_bits == 0 || d_bits % static_cast<std::size_t>(k) != 0)
        throw std::invalid_argument(
            "keyed_hash: payload length must be a positive multiple of key width");
    std::size_t blocks = d_bits / static_cast<std::size_t>(k);
    // Horner over b_1 K + b_2 K^2 + ... + b_d K^d, taken from the top:
    // acc = (...((b_d) K + b_{d-1}) K ... + b_1) K.
    FieldElement acc(0, k);
    for (std::size_t j = blocks; j >= 1; --j) {
        FieldElement block(payload.block_u32(j - 1, static_cast<std::size_t>(k)), k);
        acc = gf_mul(gf_add(acc, block), key);
    }
    return acc;
}

Rational collision_bound(int payload_bits, int key_bits) {
    check_width(key_bits);
    if (payload_bits <= 0 || payload_bits % key_bits != 0)
        throw ConfigError("collision_bound: payload bits must be a positive multiple of k");
    BigInt keyspace = BigInt{1} << key_bits;
    return Rational(BigInt{payload_bits / key_bits}, keyspace);
}

}  // namespace mvba
