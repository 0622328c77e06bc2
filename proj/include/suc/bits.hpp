#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "suc/errors.hpp"

namespace suc {

namespace detail {

using ScrubObserver = void (*)(const void*, std::size_t);

// Test hook: invoked after a buffer has been wiped, with the wiped range.
inline std::atomic<ScrubObserver>& scrub_observer()
{
    static std::atomic<ScrubObserver> obs{nullptr};
    return obs;
}

inline void scrub_bytes(void* p, std::size_t n)
{
    auto* vp = static_cast<volatile std::uint8_t*>(p);
    for (std::size_t i = 0; i < n; ++i)
        vp[i] = 0;
    if (auto obs = scrub_observer().load())
        obs(p, n);
}

} // namespace detail

// Packed bit sequence. Bit i lives in words()[i/64] at position i%64.
// Byte/hex exports pack MSB-first: stream bit 0 becomes bit 7 of byte 0.
class BitVec {
public:
    BitVec() = default;

    explicit BitVec(std::size_t n) : size_(n), words_(word_count(n), 0) {}

    static BitVec from_string(std::string_view s)
    {
        BitVec v(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1')
                v.set(i, 1);
            else if (s[i] != '0')
                throw ParseError("bit string may contain only 0 and 1");
        }
        return v;
    }

    static BitVec from_bytes(const std::uint8_t* data, std::size_t bit_len)
    {
        BitVec v(bit_len);
        for (std::size_t i = 0; i < bit_len; ++i)
            v.set(i, (data[i / 8] >> (7 - i % 8)) & 1);
        return v;
    }

    static BitVec from_bytes(const std::vector<std::uint8_t>& b, std::size_t bit_len)
    {
        if (bit_len > b.size() * 8)
            throw ValidationError("bit length exceeds byte buffer");
        return from_bytes(b.data(), bit_len);
    }

    static BitVec from_hex(std::string_view hex, std::size_t bit_len)
    {
        if (hex.size() % 2 != 0)
            throw ParseError("hex string must have even length");
        if (hex.size() * 4 < bit_len)
            throw ValidationError("hex string too short for requested bit length");
        std::vector<std::uint8_t> bytes(hex.size() / 2);
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            auto nib = [&](char c) -> int {
                if (c >= '0' && c <= '9') return c - '0';
                if (c >= 'a' && c <= 'f') return c - 'a' + 10;
                if (c >= 'A' && c <= 'F') return c - 'A' + 10;
                throw ParseError("invalid hex digit");
            };
            bytes[i] = static_cast<std::uint8_t>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
        }
        return from_bytes(bytes, bit_len);
    }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    int get(std::size_t i) const { return static_cast<int>((words_[i >> 6] >> (i & 63)) & 1u); }

    void set(std::size_t i, int bit)
    {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (bit)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    void push_back(int bit)
    {
        if (words_.size() * 64 == size_)
            words_.push_back(0);
        ++size_;
        set(size_ - 1, bit);
    }

    void append(const BitVec& o)
    {
        for (std::size_t i = 0; i < o.size_; ++i)
            push_back(o.get(i));
    }

    const std::vector<std::uint64_t>& words() const { return words_; }

    std::size_t weight() const
    {
        std::size_t w = 0;
        for (auto word : words_)
            w += static_cast<std::size_t>(std::popcount(word));
        return w;
    }

    BitVec slice(std::size_t off, std::size_t len) const
    {
        if (off + len > size_)
            throw ValidationError("slice out of range");
        BitVec v(len);
        for (std::size_t w = 0; w * 64 < len; ++w)
            v.words_[w] = read64(off + w * 64);
        v.mask_tail();
        return v;
    }

    void xor_with(const BitVec& o)
    {
        if (o.size_ != size_)
            throw ValidationError("xor_with size mismatch");
        for (std::size_t i = 0; i < words_.size(); ++i)
            words_[i] ^= o.words_[i];
    }

    // this ^= (src << shift), growing as needed. Used by the LFSR synthesis loop.
    void xor_shifted(const BitVec& src, std::size_t shift)
    {
        if (src.size_ == 0)
            return;
        ensure_size(src.size_ + shift);
        const std::size_t w = shift >> 6, r = shift & 63;
        if (r == 0) {
            for (std::size_t i = 0; i < src.words_.size(); ++i)
                words_[w + i] ^= src.words_[i];
        } else {
            std::uint64_t carry = 0;
            for (std::size_t i = 0; i < src.words_.size(); ++i) {
                words_[w + i] ^= (src.words_[i] << r) | carry;
                carry = src.words_[i] >> (64 - r);
            }
            if (carry != 0)
                words_[w + src.words_.size()] ^= carry;
        }
        mask_tail();
    }

    // Reads 64 bits starting at pos; positions past the end read as zero.
    std::uint64_t read64(std::size_t pos) const
    {
        const std::size_t w = pos >> 6, r = pos & 63;
        const std::uint64_t lo = w < words_.size() ? words_[w] : 0;
        if (r == 0)
            return lo;
        const std::uint64_t hi = w + 1 < words_.size() ? words_[w + 1] : 0;
        return (lo >> r) | (hi << (64 - r));
    }

    // Parity of the AND of two equal-length windows. Core of the
    // discrepancy computation in Berlekamp-Massey.
    static int window_and_parity(const BitVec& a, std::size_t a_off,
                                 const BitVec& b, std::size_t b_off, std::size_t len)
    {
        std::uint64_t acc = 0;
        std::size_t done = 0;
        while (done + 64 <= len) {
            acc ^= a.read64(a_off + done) & b.read64(b_off + done);
            done += 64;
        }
        if (done < len) {
            const std::uint64_t mask = (std::uint64_t{1} << (len - done)) - 1;
            acc ^= a.read64(a_off + done) & b.read64(b_off + done) & mask;
        }
        return std::popcount(acc) & 1;
    }

    bool operator==(const BitVec& o) const { return size_ == o.size_ && words_ == o.words_; }

    std::string to_string() const
    {
        std::string s(size_, '0');
        for (std::size_t i = 0; i < size_; ++i)
            if (get(i))
                s[i] = '1';
        return s;
    }

    std::vector<std::uint8_t> to_bytes() const
    {
        std::vector<std::uint8_t> out((size_ + 7) / 8, 0);
        for (std::size_t i = 0; i < size_; ++i)
            if (get(i))
                out[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
        return out;
    }

    std::string to_hex() const
    {
        static const char* digits = "0123456789abcdef";
        std::string s;
        for (auto b : to_bytes()) {
            s.push_back(digits[b >> 4]);
            s.push_back(digits[b & 0xf]);
        }
        return s;
    }

    void scrub()
    {
        if (!words_.empty())
            detail::scrub_bytes(words_.data(), words_.size() * sizeof(std::uint64_t));
        size_ = 0;
        words_.clear();
    }

private:
    static std::size_t word_count(std::size_t bits) { return (bits + 63) / 64; }

    void ensure_size(std::size_t bits)
    {
        if (bits > size_)
            size_ = bits;
        if (word_count(size_) > words_.size())
            words_.resize(word_count(size_), 0);
    }

    void mask_tail()
    {
        const std::size_t r = size_ & 63;
        if (r != 0 && !words_.empty())
            words_.back() &= (std::uint64_t{1} << r) - 1;
    }

    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

} // namespace suc
