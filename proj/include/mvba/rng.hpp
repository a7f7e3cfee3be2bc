// Deterministic randomness.  Every consumer (per-node key draws, the
// adversary, message generation, trial scheduling) owns a private splitmix64
// stream derived from the run seed by a fixed label, so one consumer drawing
// more or less never perturbs another and replays are bit-exact across
// platforms (std::uniform_int_distribution is implementation-defined, so it
// is avoided on purpose).
#pragma once

#include <cstdint>

#include "mvba/bitvec.hpp"

namespace mvba {

namespace seed_label {
// Fixed substream labels.  New labels must not collide with existing ones.
inline constexpr std::uint64_t kMessage = 0x01;
inline constexpr std::uint64_t kAdversary = 0x02;
inline constexpr std::uint64_t kNodeKeys = 0x100;   // + node id
inline constexpr std::uint64_t kTrial = 0x10000;    // + trial index
}  // namespace seed_label

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derive an independent child seed from (seed, label).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
    std::uint64_t s = seed ^ (0xA5A5A5A55A5A5A5Aull + label * 0x9E3779B97F4A7C15ull);
    splitmix64(s);
    return splitmix64(s);
}

class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return splitmix64(state_); }

    // Uniform in [0, bound) via 128-bit multiply; bound must be nonzero.
    std::uint64_t below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    bool coin() { return next() & 1u; }

    // True with probability num/den.
    bool chance(std::uint64_t num, std::uint64_t den) { return below(den) < num; }

    BitVec bits(std::size_t nbits) {
        BitVec v(nbits);
        for (std::size_t i = 0; i < nbits; i += 64) {
            std::uint64_t w = next();
            for (std::size_t j = 0; j < 64 && i + j < nbits; ++j)
                if ((w >> j) & 1u) v.set_bit(i + j, true);
        }
        return v;
    }

  private:
    std::uint64_t state_;
};

}  // namespace mvba
