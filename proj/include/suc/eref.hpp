#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <vector>

#include "suc/errors.hpp"

namespace suc {

// Invertible 64-bit block cipher interface keyed by a response Y. Pluggable
// so deployments can swap in a vetted cipher; the protocol only needs the
// decrypt(encrypt) identity.
class CipherE {
public:
    virtual ~CipherE() = default;
    virtual std::array<std::uint8_t, 8> encrypt(const std::vector<std::uint8_t>& key,
                                                const std::array<std::uint8_t, 8>& block) const = 0;
    virtual std::array<std::uint8_t, 8> decrypt(const std::vector<std::uint8_t>& key,
                                                const std::array<std::uint8_t, 8>& block) const = 0;
};

// Fixed reference instantiation: an unbalanced Feistel over two 32-bit
// halves, 32 rounds, golden-ratio round constants, data-independent
// rotations. Deliberately simple and bit-exact so transcripts reproduce;
// not a vetted cipher, the interface exists to replace it.
class ErefCipher final : public CipherE {
public:
    std::array<std::uint8_t, 8> encrypt(const std::vector<std::uint8_t>& key,
                                        const std::array<std::uint8_t, 8>& block) const override
    {
        const auto k = key_words(key);
        std::uint32_t l = load_be(block.data());
        std::uint32_t r = load_be(block.data() + 4);
        for (int round = 0; round < 32; ++round) {
            const std::uint32_t next =
                l ^ std::rotl(r + round_key(k, round), (round % 31) + 1);
            l = r;
            r = next;
        }
        return pack(l, r);
    }

    std::array<std::uint8_t, 8> decrypt(const std::vector<std::uint8_t>& key,
                                        const std::array<std::uint8_t, 8>& block) const override
    {
        const auto k = key_words(key);
        std::uint32_t l = load_be(block.data());
        std::uint32_t r = load_be(block.data() + 4);
        for (int round = 31; round >= 0; --round) {
            const std::uint32_t prev =
                r ^ std::rotl(l + round_key(k, round), (round % 31) + 1);
            r = l;
            l = prev;
        }
        return pack(l, r);
    }

private:
    static std::array<std::uint32_t, 4> key_words(const std::vector<std::uint8_t>& key)
    {
        std::array<std::uint8_t, 16> padded{};
        if (!key.empty())
            std::memcpy(padded.data(), key.data(), key.size() < 16 ? key.size() : 16);
        std::array<std::uint32_t, 4> k;
        for (int i = 0; i < 4; ++i)
            k[i] = load_be(padded.data() + 4 * i);
        return k;
    }

    static std::uint32_t round_key(const std::array<std::uint32_t, 4>& k, int round)
    {
        return k[round % 4] ^
               static_cast<std::uint32_t>(std::uint32_t{0x9E3779B9} *
                                          static_cast<std::uint32_t>(round));
    }

    static std::uint32_t load_be(const std::uint8_t* p)
    {
        return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
               (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
    }

    static std::array<std::uint8_t, 8> pack(std::uint32_t l, std::uint32_t r)
    {
        std::array<std::uint8_t, 8> out;
        for (int i = 0; i < 4; ++i) {
            out[i] = static_cast<std::uint8_t>((l >> (24 - 8 * i)) & 0xff);
            out[4 + i] = static_cast<std::uint8_t>((r >> (24 - 8 * i)) & 0xff);
        }
        return out;
    }
};

// Counter mode over any CipherE: block j of keystream is E(key, j as a
// 64-bit big-endian counter), j starting at 0. Involution, so the same call
// encrypts and decrypts. Keys are single-use in this protocol, so there is
// no nonce.
inline std::vector<std::uint8_t> ctr_crypt(const CipherE& cipher,
                                           const std::vector<std::uint8_t>& key,
                                           const std::vector<std::uint8_t>& data)
{
    std::vector<std::uint8_t> out(data.size());
    std::array<std::uint8_t, 8> counter{};
    for (std::size_t j = 0; j * 8 < data.size(); ++j) {
        for (int i = 0; i < 8; ++i)
            counter[i] = static_cast<std::uint8_t>((j >> (56 - 8 * i)) & 0xff);
        const auto ks = cipher.encrypt(key, counter);
        const std::size_t n = data.size() - 8 * j < 8 ? data.size() - 8 * j : 8;
        for (std::size_t i = 0; i < n; ++i)
            out[8 * j + i] = data[8 * j + i] ^ ks[i];
    }
    return out;
}

} // namespace suc
