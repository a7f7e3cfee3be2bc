// Arbitrary-length bit string with positional access and fixed-width block
// extraction.  Bit i of the string is bit (i % 64) of word (i / 64), so
// index 0 is the least significant bit of the first word.  All wire payloads
// in the simulator are BitVecs; message sizes are BitVec::size() bits.
#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvba {

class BitVec {
  public:
    BitVec() = default;
    explicit BitVec(std::size_t nbits) : nbits_(nbits), words_(word_count(nbits), 0) {}

    static BitVec from_u64(std::uint64_t value, std::size_t nbits) {
        if (nbits < 64 && nbits > 0 && (value >> nbits) != 0)
            throw std::invalid_argument("BitVec::from_u64: value wider than nbits");
        BitVec v(nbits);
        if (nbits > 0) v.words_[0] = value & mask_low(nbits >= 64 ? 64 : nbits);
        return v;
    }

    std::size_t size() const { return nbits_; }
    bool empty() const { return nbits_ == 0; }

    bool bit(std::size_t i) const {
        check_index(i);
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    void set_bit(std::size_t i, bool v) {
        check_index(i);
        std::uint64_t m = std::uint64_t{1} << (i & 63);
        if (v)
            words_[i >> 6] |= m;
        else
            words_[i >> 6] &= ~m;
    }

    void flip_bit(std::size_t i) { set_bit(i, !bit(i)); }

    // Value of the w-bit block starting at bit block_index * w, LSB first.
    std::uint32_t block_u32(std::size_t block_index, std::size_t w) const {
        if (w == 0 || w > 32) throw std::invalid_argument("block width out of range");
        std::size_t base = block_index * w;
        if (base + w > nbits_) throw std::out_of_range("block beyond BitVec end");
        std::uint32_t out = 0;
        for (std::size_t i = 0; i < w; ++i)
            out |= std::uint32_t{bit(base + i)} << i;
        return out;
    }

    void set_block_u32(std::size_t block_index, std::size_t w, std::uint32_t value) {
        if (w == 0 || w > 32) throw std::invalid_argument("block width out of range");
        if (w < 32 && (value >> w) != 0)
            throw std::invalid_argument("block value wider than block");
        std::size_t base = block_index * w;
        if (base + w > nbits_) throw std::out_of_range("block beyond BitVec end");
        for (std::size_t i = 0; i < w; ++i)
            set_bit(base + i, (value >> i) & 1u);
    }

    void append(const BitVec& other) {
        std::size_t base = nbits_;
        resize(nbits_ + other.nbits_);
        for (std::size_t i = 0; i < other.nbits_; ++i)
            if (other.bit(i)) set_bit(base + i, true);
    }

    BitVec slice(std::size_t pos, std::size_t len) const {
        if (pos + len > nbits_) throw std::out_of_range("slice beyond BitVec end");
        BitVec out(len);
        for (std::size_t i = 0; i < len; ++i)
            if (bit(pos + i)) out.set_bit(i, true);
        return out;
    }

    void resize(std::size_t nbits) {
        nbits_ = nbits;
        words_.resize(word_count(nbits), 0);
        trim();
    }

    bool any() const {
        for (auto w : words_)
            if (w) return true;
        return false;
    }

    BitVec operator^(const BitVec& rhs) const {
        if (nbits_ != rhs.nbits_)
            throw std::invalid_argument("BitVec xor: length mismatch");
        BitVec out = *this;
        for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] ^= rhs.words_[i];
        return out;
    }

    bool operator==(const BitVec& rhs) const {
        return nbits_ == rhs.nbits_ && words_ == rhs.words_;
    }
    bool operator!=(const BitVec& rhs) const { return !(*this == rhs); }

    // Lexicographic on (length, words); only used as a map key.
    bool operator<(const BitVec& rhs) const {
        if (nbits_ != rhs.nbits_) return nbits_ < rhs.nbits_;
        return words_ < rhs.words_;
    }

    // Hex digit j encodes bits [4j, 4j+4), low bit first.
    std::string to_hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (std::size_t base = 0; base < nbits_; base += 4) {
            unsigned nib = 0;
            for (std::size_t i = 0; i < 4 && base + i < nbits_; ++i)
                nib |= unsigned{bit(base + i)} << i;
            out.push_back(digits[nib]);
        }
        return out;
    }

    static BitVec from_hex(const std::string& hex, std::size_t nbits) {
        BitVec v(nbits);
        for (std::size_t j = 0; j < hex.size(); ++j) {
            char c = hex[j];
            unsigned nib;
            if (c >= '0' && c <= '9')
                nib = static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f')
                nib = static_cast<unsigned>(c - 'a') + 10;
            else if (c >= 'A' && c <= 'F')
                nib = static_cast<unsigned>(c - 'A') + 10;
            else
                throw std::invalid_argument("BitVec::from_hex: bad digit");
            for (std::size_t i = 0; i < 4; ++i) {
                std::size_t pos = 4 * j + i;
                if (pos < nbits && ((nib >> i) & 1u)) v.set_bit(pos, true);
            }
        }
        return v;
    }

  private:
    static std::size_t word_count(std::size_t nbits) { return (nbits + 63) / 64; }
    static std::uint64_t mask_low(std::size_t bits) {
        return bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
    }
    void check_index(std::size_t i) const {
        if (i >= nbits_) throw std::out_of_range("BitVec index out of range");
    }
    // Bits past nbits_ stay zero so equality can compare whole words.
    void trim() {
        if (nbits_ % 64 != 0 && !words_.empty())
            words_.back() &= mask_low(nbits_ % 64);
    }

    std::size_t nbits_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace mvba
