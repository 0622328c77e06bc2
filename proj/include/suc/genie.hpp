#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <zlib.h>

#include "suc/bits.hpp"
#include "suc/catalog.hpp"
#include "suc/errors.hpp"
#include "suc/ksg.hpp"
#include "suc/nlfsr.hpp"

namespace suc {

// Randomness for instance creation. Two modes: OS-seeded for real draws,
// fixed-seed for reproducible tests and audits. Every raw 64-bit draw is
// counted so a caller can prove, by replay, which draws fed which decision.
class EntropySource {
public:
    static EntropySource from_os()
    {
        std::random_device rd;
        std::array<std::uint32_t, 16> noise;
        for (auto& w : noise)
            w = rd();
        std::seed_seq seq(noise.begin(), noise.end());
        return EntropySource(seq, false);
    }

    static EntropySource from_seed(const std::array<std::uint8_t, 32>& seed)
    {
        std::array<std::uint32_t, 8> words{};
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t b = 0; b < 4; ++b)
                words[i] |= std::uint32_t{seed[i * 4 + b]} << (8 * b);
        std::seed_seq seq(words.begin(), words.end());
        return EntropySource(seq, true);
    }

    std::uint64_t next_u64()
    {
        ++draws_;
        return rng_();
    }

    // Unbiased value in [0, bound) by rejection.
    std::uint64_t uniform_below(std::uint64_t bound)
    {
        if (bound == 0)
            throw ValidationError("uniform_below needs a positive bound");
        if (bound == 1)
            return 0; // no information needed, no draw spent
        const std::uint64_t threshold = (~bound + 1) % bound; // 2^64 mod bound
        for (;;) {
            const std::uint64_t v = next_u64();
            if (v >= threshold)
                return v % bound;
        }
    }

    std::uint64_t draws() const { return draws_; }
    bool deterministic() const { return deterministic_; }

private:
    explicit EntropySource(std::seed_seq& seq, bool det) : rng_(seq), deterministic_(det) {}

    std::mt19937_64 rng_;
    std::uint64_t draws_ = 0;
    bool deterministic_;
};

// One register choice: which entry of the per-length family, in which of the
// four derived forms. Resolvable against any catalog with the same content.
struct RegisterPick {
    int length_n = 0;
    std::uint16_t entry_index = 0; // position within the basics of this length
    FeedbackForm form = FeedbackForm::basic;
};

struct CreationReport {
    std::uint64_t selection_draws = 0; // raw u64 draws spent picking functions
    std::uint64_t state_draws = 0;     // raw u64 draws spent filling states
    std::uint64_t total_draws = 0;
};

struct EntropyAccount {
    double selection_bits = 0.0; // log2 of the function-choice space
    double state_bits = 0.0;     // raw state bits before degeneracy rejection
    double total_bits() const { return selection_bits + state_bits; }
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v)
{
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
    const std::uint8_t* p;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t k) const
    {
        if (size - pos < k)
            throw ParseError("instance blob truncated");
    }
    std::uint8_t u8()
    {
        need(1);
        return p[pos++];
    }
    std::uint16_t u16()
    {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[pos] | (p[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= std::uint32_t{p[pos + i]} << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64()
    {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= std::uint64_t{p[pos + i]} << (8 * i);
        pos += 8;
        return v;
    }
};

inline std::uint32_t blob_crc(const std::uint8_t* p, std::size_t n)
{
    return static_cast<std::uint32_t>(
        ::crc32(::crc32(0L, nullptr, 0), p, static_cast<uInt>(n)));
}

// XOR of all inputs, the neutral combiner for catalogs that do not match the
// shipped 16-register layout.
inline AnfFunction xor_all_combiner(int m)
{
    AnfFunction f;
    f.num_vars = m;
    for (int i = 1; i <= m; ++i)
        f.terms.push_back({i});
    f.validate();
    return f;
}

inline AnfFunction default_combiner_for(const std::vector<int>& lengths)
{
    const auto& design = design_lengths();
    if (lengths.size() == design.size() &&
        std::equal(lengths.begin(), lengths.end(), design.begin()))
        return full_combiner();
    return xor_all_combiner(static_cast<int>(lengths.size()));
}

// Entry positions of one length, in the order the canonical serialization
// lists them. Blob indices use this order so they survive a save/load cycle
// of a catalog that was built in a different insertion order.
inline std::vector<std::size_t> canonical_entry_positions(const Catalog& catalog, int length)
{
    std::vector<std::pair<std::string, std::size_t>> keyed;
    std::size_t pos = 0;
    for (const auto& e : catalog.basics())
        if (e.length_n == length)
            keyed.emplace_back(format_anf(e.basic_rff), pos++);
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> order;
    order.reserve(keyed.size());
    for (const auto& [text, p] : keyed) {
        (void)text;
        order.push_back(p);
    }
    return order;
}

inline const FeedbackSpec& resolve_pick(const Catalog& catalog, int length,
                                        std::uint16_t entry_index, FeedbackForm form)
{
    const auto& family = catalog.specs_for(length);
    const auto order = canonical_entry_positions(catalog, length);
    if (entry_index >= order.size())
        throw ValidationError("register pick is outside the catalog family");
    const std::size_t flat = order[entry_index] * 4 + static_cast<std::size_t>(form);
    return family.at(flat);
}

} // namespace detail

// A drawn cipher instance: the secret register picks and states, plus a
// cursor counting how many challenges it has answered. Owns its secrets;
// movable but not copyable, and wipes state memory on destruction.
class SucInstance {
public:
    SucInstance(const Catalog& catalog, std::vector<RegisterPick> picks,
                std::vector<std::uint32_t> states, std::uint64_t cursor,
                AnfFunction combiner = {})
        : picks_(std::move(picks)),
          creation_states_(states),
          states_(std::move(states)),
          cursor_(cursor),
          fingerprint_(catalog.fingerprint())
    {
        if (picks_.empty())
            throw ValidationError("instance needs at least one register");
        if (states_.size() != picks_.size())
            throw ValidationError("state count does not match register count");

        std::vector<int> lengths;
        config_.registers.reserve(picks_.size());
        for (std::size_t i = 0; i < picks_.size(); ++i) {
            const auto& pick = picks_[i];
            const FeedbackSpec& spec =
                detail::resolve_pick(catalog, pick.length_n, pick.entry_index, pick.form);
            if (states_[i] == spec.degenerate_state() ||
                (states_[i] >> spec.length_n) != 0)
                throw ValidationError("register state invalid for its cycle");
            config_.registers.push_back(spec);
            lengths.push_back(spec.length_n);
        }
        config_.combiner = combiner.num_vars == 0
                               ? detail::default_combiner_for(lengths)
                               : std::move(combiner);
        config_.validate();
    }

    SucInstance(const SucInstance&) = delete;
    SucInstance& operator=(const SucInstance&) = delete;

    SucInstance(SucInstance&& other) noexcept
        : picks_(std::move(other.picks_)),
          creation_states_(std::move(other.creation_states_)),
          states_(std::move(other.states_)),
          cursor_(other.cursor_),
          fingerprint_(other.fingerprint_),
          config_(std::move(other.config_))
    {
        other.creation_states_.clear();
        other.states_.clear();
    }

    SucInstance& operator=(SucInstance&& other) noexcept
    {
        if (this != &other) {
            wipe();
            picks_ = std::move(other.picks_);
            creation_states_ = std::move(other.creation_states_);
            states_ = std::move(other.states_);
            cursor_ = other.cursor_;
            fingerprint_ = other.fingerprint_;
            config_ = std::move(other.config_);
            other.creation_states_.clear();
            other.states_.clear();
        }
        return *this;
    }

    ~SucInstance() { wipe(); }

    // Produce the next k keystream bits and advance the stored states.
    BitVec respond(std::size_t k)
    {
        if (k == 0)
            throw ValidationError("challenge length must be positive");
        Ksg ksg(config_, states_);
        BitVec out = ksg.next_bits(k);
        states_ = ksg.states();
        ++cursor_;
        return out;
    }

    const std::vector<RegisterPick>& picks() const { return picks_; }
    const std::vector<std::uint32_t>& current_states() const { return states_; }
    const std::vector<std::uint32_t>& creation_states() const { return creation_states_; }
    std::uint64_t cursor() const { return cursor_; }
    const std::array<std::uint8_t, 32>& catalog_fingerprint() const { return fingerprint_; }
    const KsgConfig& config() const { return config_; }

private:
    void wipe()
    {
        if (!states_.empty())
            detail::scrub_bytes(states_.data(), states_.size() * sizeof(std::uint32_t));
        if (!creation_states_.empty())
            detail::scrub_bytes(creation_states_.data(),
                                creation_states_.size() * sizeof(std::uint32_t));
        states_.clear();
        creation_states_.clear();
    }

    std::vector<RegisterPick> picks_;
    std::vector<std::uint32_t> creation_states_;
    std::vector<std::uint32_t> states_;
    std::uint64_t cursor_ = 0;
    std::array<std::uint8_t, 32> fingerprint_{};
    KsgConfig config_;
};

// Draw a fresh instance from a verified catalog. All function-selection draws
// happen before any state draw, so the two phases can be audited separately
// from the draw counter alone; no draw log is retained.
inline SucInstance genie_create(const Catalog& catalog, EntropySource& entropy,
                                AnfFunction combiner = {},
                                CreationReport* report = nullptr)
{
    if (!catalog.is_verified())
        throw ValidationError("catalog must be verified before drawing instances");
    if (catalog.empty())
        throw ValidationError("catalog is empty");

    std::vector<int> lengths;
    for (const auto& [n, family] : catalog.specs()) {
        (void)family;
        lengths.push_back(n);
    }

    const std::uint64_t draws_start = entropy.draws();

    std::vector<RegisterPick> picks;
    picks.reserve(lengths.size());
    for (int n : lengths) {
        const auto& family = catalog.specs_for(n);
        const std::uint64_t idx = entropy.uniform_below(family.size());
        RegisterPick pick;
        pick.length_n = n;
        pick.entry_index = static_cast<std::uint16_t>(idx / 4);
        pick.form = static_cast<FeedbackForm>(idx % 4);
        picks.push_back(pick);
    }

    const std::uint64_t draws_mid = entropy.draws();

    std::vector<std::uint32_t> states;
    states.reserve(picks.size());
    for (const auto& pick : picks) {
        const FeedbackSpec& spec =
            detail::resolve_pick(catalog, pick.length_n, pick.entry_index, pick.form);
        const std::uint64_t space = std::uint64_t{1} << pick.length_n;
        std::uint32_t state;
        do {
            state = static_cast<std::uint32_t>(entropy.uniform_below(space));
        } while (state == spec.degenerate_state());
        states.push_back(state);
    }

    const std::uint64_t draws_end = entropy.draws();
    if (report != nullptr) {
        report->selection_draws = draws_mid - draws_start;
        report->state_draws = draws_end - draws_mid;
        report->total_draws = draws_end - draws_start;
    }

    return SucInstance(catalog, std::move(picks), std::move(states), 0, std::move(combiner));
}

// Portable secret snapshot of an instance.
//
//   "SUC1"            magic
//   u8                version (1)
//   u8[32]            catalog fingerprint
//   u16 LE            register count
//   per register:     u8 length, u16 LE entry index, u8 form, u32 LE state
//   u64 LE            cursor
//   u32 LE            crc32 of everything above
inline std::vector<std::uint8_t> export_blob(const SucInstance& inst)
{
    std::vector<std::uint8_t> out;
    const auto& picks = inst.picks();
    out.reserve(51 + 8 * picks.size());
    out.insert(out.end(), {'S', 'U', 'C', '1'});
    out.push_back(1);
    out.insert(out.end(), inst.catalog_fingerprint().begin(),
               inst.catalog_fingerprint().end());
    detail::put_u16(out, static_cast<std::uint16_t>(picks.size()));
    for (std::size_t i = 0; i < picks.size(); ++i) {
        out.push_back(static_cast<std::uint8_t>(picks[i].length_n));
        detail::put_u16(out, picks[i].entry_index);
        out.push_back(static_cast<std::uint8_t>(picks[i].form));
        detail::put_u32(out, inst.current_states()[i]);
    }
    detail::put_u64(out, inst.cursor());
    detail::put_u32(out, detail::blob_crc(out.data(), out.size()));
    return out;
}

// Rebuild an instance from a blob against the catalog it was drawn from.
// Structural damage raises ParseError; a well-formed blob that does not fit
// the catalog raises ValidationError. The creation states are not in the
// blob, so the imported instance reports its current states as both.
inline SucInstance import_blob(const std::vector<std::uint8_t>& bytes,
                               const Catalog& catalog, AnfFunction combiner = {})
{
    detail::ByteReader r{bytes.data(), bytes.size()};
    r.need(4);
    if (std::memcmp(r.p, "SUC1", 4) != 0)
        throw ParseError("instance blob has a bad magic");
    r.pos = 4;
    const std::uint8_t version = r.u8();
    if (version != 1)
        throw ParseError("unsupported instance blob version");

    std::array<std::uint8_t, 32> fp{};
    r.need(32);
    std::memcpy(fp.data(), r.p + r.pos, 32);
    r.pos += 32;

    const std::uint16_t reg_count = r.u16();
    if (reg_count == 0)
        throw ParseError("instance blob declares zero registers");

    std::vector<RegisterPick> picks;
    std::vector<std::uint32_t> states;
    picks.reserve(reg_count);
    states.reserve(reg_count);
    for (std::uint16_t i = 0; i < reg_count; ++i) {
        RegisterPick pick;
        pick.length_n = r.u8();
        pick.entry_index = r.u16();
        const std::uint8_t form = r.u8();
        if (form > 3)
            throw ParseError("instance blob has an unknown register form");
        pick.form = static_cast<FeedbackForm>(form);
        picks.push_back(pick);
        states.push_back(r.u32());
    }
    const std::uint64_t cursor = r.u64();

    const std::size_t body = r.pos;
    const std::uint32_t declared = r.u32();
    if (r.pos != bytes.size())
        throw ParseError("instance blob has trailing bytes");
    if (declared != detail::blob_crc(bytes.data(), body))
        throw ParseError("instance blob checksum mismatch");

    if (fp != catalog.fingerprint())
        throw ValidationError("instance blob was drawn from a different catalog");

    return SucInstance(catalog, std::move(picks), std::move(states), cursor,
                       std::move(combiner));
}

// How much randomness one creation consumes, in bits of decision space.
inline EntropyAccount entropy_account(const Catalog& catalog)
{
    if (catalog.empty())
        throw ValidationError("catalog is empty");
    EntropyAccount acc;
    for (const auto& [n, family] : catalog.specs()) {
        acc.selection_bits += std::log2(static_cast<double>(family.size()));
        acc.state_bits += n;
    }
    return acc;
}

} // namespace suc
