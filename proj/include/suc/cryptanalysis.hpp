#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "suc/bits.hpp"
#include "suc/errors.hpp"
#include "suc/ksg.hpp"
#include "suc/nlfsr.hpp"

namespace suc {

// Shortest LFSR that reproduces a sequence. connection_polynomial holds
// c_0..c_L with c_0 = 1; the recurrence is s[t] = XOR of c_i * s[t-i]
// for i = 1..L.
struct BmResult {
    std::size_t linear_complexity = 0;
    BitVec connection_polynomial;
};

// Word-packed LFSR synthesis. The discrepancy at step n is the parity of
// the connection polynomial ANDed with the window s[n-L..n], which runs
// backwards through the sequence; matching it against a reversed copy
// turns every step into one aligned window operation.
inline BmResult berlekamp_massey(const BitVec& seq)
{
    const std::size_t n = seq.size();
    if (n == 0)
        throw ValidationError("empty sequence has no synthesis");

    BitVec rev(n);
    for (std::size_t i = 0; i < n; ++i)
        if (seq.get(n - 1 - i))
            rev.set(i, 1);

    BitVec c(1), b(1);
    c.set(0, 1);
    b.set(0, 1);
    std::size_t l = 0, m = 1;
    for (std::size_t t = 0; t < n; ++t) {
        const int d = BitVec::window_and_parity(c, 0, rev, n - 1 - t, l + 1);
        if (d == 0) {
            ++m;
        } else if (2 * l <= t) {
            const BitVec keep = c;
            c.xor_shifted(b, m);
            l = t + 1 - l;
            b = keep;
            m = 1;
        } else {
            c.xor_shifted(b, m);
            ++m;
        }
    }
    BmResult out;
    out.linear_complexity = l;
    out.connection_polynomial = BitVec(l + 1);
    for (std::size_t i = 0; i <= l; ++i)
        if (i < c.size() && c.get(i))
            out.connection_polynomial.set(i, 1);
    return out;
}

// Checks that the synthesized recurrence reproduces every position past
// the initial fill.
inline bool lfsr_regenerates(const BmResult& r, const BitVec& seq)
{
    const std::size_t l = r.linear_complexity;
    const std::size_t n = seq.size();
    BitVec rev(n);
    for (std::size_t i = 0; i < n; ++i)
        if (seq.get(n - 1 - i))
            rev.set(i, 1);
    for (std::size_t t = l; t < n; ++t)
        if (BitVec::window_and_parity(r.connection_polynomial, 0, rev, n - 1 - t, l + 1))
            return false;
    return true;
}

// Linear-complexity measurement of a toy generator: per-register stream
// complexities, the combined keystream complexity, and the product floor
// when its conditions hold. Sampling is exact: two full joint periods.
struct LcExperiment {
    std::vector<std::size_t> register_lc;
    std::size_t combined_lc = 0;
    bool bound_available = false;
    BigInt bound = 0;
    BigInt period = 0;

    bool consistent() const
    {
        if (BigInt(combined_lc) > period)
            return false;
        return !bound_available || BigInt(combined_lc) >= bound;
    }
};

inline LcExperiment lc_bound_experiment(const KsgConfig& config,
                                        const std::vector<std::uint32_t>& states)
{
    config.validate();
    if (states.size() != config.registers.size())
        throw ValidationError("state count does not match register count");
    LcExperiment rep;
    rep.period = period_lcm(config);
    if (rep.period > (1 << 21))
        throw ValidationError("joint period too large to sample exactly");
    const std::size_t sample = 2 * rep.period.convert_to<std::size_t>();

    for (std::size_t i = 0; i < config.registers.size(); ++i) {
        Nlfsr reg(config.registers[i], states.at(i));
        const std::size_t span = 2 * ((std::size_t{1} << config.registers[i].length_n) - 1);
        rep.register_lc.push_back(berlekamp_massey(reg.generate(span)).linear_complexity);
    }

    Ksg gen(config, states);
    rep.combined_lc = berlekamp_massey(gen.next_bits(sample)).linear_complexity;

    const LcBoundReport lc = lc_lower_bound(config);
    rep.bound_available = lc.conditions_met;
    rep.bound = lc.bound;
    return rep;
}

// One row of a correlation scan: how often the keystream agrees with the
// XOR of the chosen register streams, in binomial sigma units.
struct CorrelationEntry {
    std::uint32_t mask = 0;  // bit i selects register i
    int order = 0;
    std::size_t agreements = 0;
    double bias = 0.0;  // agreements/n - 1/2
    double z = 0.0;     // bias in sigma units for n fair coin flips
};

struct CorrelationTable {
    std::size_t sample_size = 0;
    std::vector<CorrelationEntry> entries;

    double max_abs_z() const
    {
        double m = 0.0;
        for (const auto& e : entries)
            m = std::max(m, std::abs(e.z));
        return m;
    }

    const CorrelationEntry* find(std::uint32_t mask) const
    {
        for (const auto& e : entries)
            if (e.mask == mask)
                return &e;
        return nullptr;
    }

    std::string to_text(std::size_t top) const
    {
        std::vector<const CorrelationEntry*> byz;
        for (const auto& e : entries)
            byz.push_back(&e);
        std::sort(byz.begin(), byz.end(),
                  [](const auto* a, const auto* b) { return std::abs(a->z) > std::abs(b->z); });
        std::string out = "subset scan over " + std::to_string(sample_size) + " bits, " +
                          std::to_string(entries.size()) + " subsets\n";
        for (std::size_t i = 0; i < byz.size() && i < top; ++i) {
            const auto* e = byz[i];
            out += "  mask " + std::to_string(e->mask) + " order " + std::to_string(e->order) +
                   " bias " + std::to_string(e->bias) + " z " + std::to_string(e->z) + "\n";
        }
        return out;
    }
};

namespace detail {

inline CorrelationEntry correlation_entry(const BitVec& keystream, const BitVec& subset_xor,
                                          std::uint32_t mask, int order)
{
    BitVec diff = keystream;
    diff.xor_with(subset_xor);
    const std::size_t n = keystream.size();
    CorrelationEntry e;
    e.mask = mask;
    e.order = order;
    e.agreements = n - diff.weight();
    e.bias = static_cast<double>(e.agreements) / static_cast<double>(n) - 0.5;
    e.z = 2.0 * (static_cast<double>(e.agreements) - static_cast<double>(n) / 2.0) /
          std::sqrt(static_cast<double>(n));
    return e;
}

} // namespace detail

// Empirical bias of the keystream against the XOR of every register subset
// of order 1..max_order. Subsets are walked depth-first so each one costs a
// single stream XOR on top of its parent.
inline CorrelationTable correlation_scan(const BitVec& keystream,
                                         const std::vector<BitVec>& register_streams,
                                         int max_order)
{
    const std::size_t n = keystream.size();
    if (n == 0)
        throw ValidationError("empty keystream");
    if (register_streams.empty() || register_streams.size() > 31)
        throw ValidationError("register stream count out of range");
    for (const auto& s : register_streams)
        if (s.size() != n)
            throw ValidationError("register stream length mismatch");
    if (max_order < 1 || static_cast<std::size_t>(max_order) > register_streams.size())
        throw ValidationError("scan order out of range");

    CorrelationTable table;
    table.sample_size = n;
    BitVec partial(n);
    std::function<void(std::size_t, std::uint32_t, int)> walk =
        [&](std::size_t first, std::uint32_t mask, int order) {
            for (std::size_t i = first; i < register_streams.size(); ++i) {
                partial.xor_with(register_streams[i]);
                const std::uint32_t m = mask | (1u << i);
                table.entries.push_back(detail::correlation_entry(keystream, partial, m, order + 1));
                if (order + 1 < max_order)
                    walk(i + 1, m, order + 1);
                partial.xor_with(register_streams[i]);
            }
        };
    walk(0, 0, 0);
    return table;
}

// Bias for one specific register subset.
inline CorrelationEntry correlation_for_mask(const BitVec& keystream,
                                             const std::vector<BitVec>& register_streams,
                                             std::uint32_t mask)
{
    const std::size_t n = keystream.size();
    if (mask == 0 || (mask >> register_streams.size()) != 0)
        throw ValidationError("subset mask out of range");
    BitVec acc(n);
    int order = 0;
    for (std::size_t i = 0; i < register_streams.size(); ++i)
        if ((mask >> i) & 1) {
            if (register_streams[i].size() != n)
                throw ValidationError("register stream length mismatch");
            acc.xor_with(register_streams[i]);
            ++order;
        }
    return detail::correlation_entry(keystream, acc, mask, order);
}

// XOR-with-shift cascade: one stage per period, so the expansion covers
// every subset sum of the periods. A stage with shift T annihilates any
// additive contribution of period T.
struct ParityCascade {
    std::vector<std::uint64_t> periods;
    std::vector<std::uint64_t> taps;  // all 2^m subset sums, subset order

    std::uint64_t span() const
    {
        std::uint64_t s = 0;
        for (std::uint64_t p : periods)
            s += p;
        return s;
    }
};

inline ParityCascade build_parity_cascade(const std::vector<std::uint64_t>& periods)
{
    if (periods.size() > 20)
        throw ValidationError("cascade too deep");
    for (std::uint64_t p : periods)
        if (p == 0)
            throw ValidationError("zero period in cascade");
    ParityCascade c;
    c.periods = periods;
    c.taps.resize(std::size_t{1} << periods.size());
    for (std::size_t sub = 0; sub < c.taps.size(); ++sub) {
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < periods.size(); ++i)
            if ((sub >> i) & 1)
                sum += periods[i];
        c.taps[sub] = sum;
    }
    return c;
}

// residual[t] = XOR over taps s of seq[t + s]. The output shrinks by the
// cascade span; anything the stages annihilate comes out identically zero.
inline BitVec apply_cascade(const ParityCascade& cascade, const BitVec& seq)
{
    const std::uint64_t span = cascade.span();
    if (seq.size() <= span)
        throw ValidationError("sequence shorter than the cascade span");
    const std::size_t len = seq.size() - static_cast<std::size_t>(span);
    BitVec out(len);
    for (std::uint64_t tap : cascade.taps)
        out.xor_with(seq.slice(static_cast<std::size_t>(tap), len));
    return out;
}

// log2 of the expected number of guessed guard states that pass every
// check position by chance: 2^(state bits) * 2^(-check bits).
inline double degeneration_probability(const std::vector<int>& guard_lengths, int check_bits)
{
    if (guard_lengths.empty())
        throw ValidationError("no guard registers");
    if (check_bits < 0)
        throw ValidationError("negative check count");
    int states = 0;
    for (int n : guard_lengths) {
        if (n < 1 || n > kMaxRegisterLength)
            throw ValidationError("guard register length out of range");
        states += n;
    }
    return static_cast<double>(states) - static_cast<double>(check_bits);
}

// Brute-force state recovery on toy instances: every joint non-degenerate
// state whose keystream prefix matches. Partitions the first register's
// state space across threads.
inline std::vector<std::vector<std::uint32_t>> exhaustive_recovery(const KsgConfig& config,
                                                                   const BitVec& keystream,
                                                                   int threads = 0)
{
    config.validate();
    if (config.total_length() > 22)
        throw ValidationError("state space too large for exhaustive recovery");

    const std::size_t regs = config.registers.size();
    std::vector<CompiledAnf> rffs;
    std::vector<int> lens;
    std::vector<std::uint32_t> degenerate;
    for (const auto& spec : config.registers) {
        rffs.push_back(CompiledAnf::compile(spec.rff, 1));
        lens.push_back(spec.length_n);
        degenerate.push_back(spec.degenerate_state());
    }
    const CompiledAnf combiner = CompiledAnf::compile(config.combiner, 0);
    const std::size_t k = keystream.size();

    // one candidate, stepped without any allocation
    auto matches = [&](std::vector<std::uint32_t>& s) {
        for (std::size_t t = 0; t < k; ++t) {
            std::uint64_t x = 0;
            for (std::size_t i = 0; i < regs; ++i)
                x |= static_cast<std::uint64_t>(s[i] & 1) << i;
            if ((combiner.eval(x) ? 1 : 0) != keystream.get(t))
                return false;
            for (std::size_t i = 0; i < regs; ++i) {
                const std::uint32_t fb =
                    static_cast<std::uint32_t>(rffs[i].eval(s[i])) ^ (s[i] & 1);
                s[i] = (s[i] >> 1) | (fb << (lens[i] - 1));
            }
        }
        return true;
    };

    if (threads <= 0)
        threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, 16);

    const std::uint32_t first_states = std::uint32_t{1} << lens[0];
    std::mutex sink_mutex;
    std::vector<std::vector<std::uint32_t>> found;
    std::atomic<std::uint32_t> next{0};

    auto worker = [&] {
        std::vector<std::vector<std::uint32_t>> local;
        std::vector<std::uint32_t> candidate(regs), scratch(regs);
        for (;;) {
            const std::uint32_t a = next.fetch_add(1);
            if (a >= first_states)
                break;
            if (a == degenerate[0])
                continue;
            candidate[0] = a;
            // odometer over the remaining registers
            for (std::size_t i = 1; i < regs; ++i)
                candidate[i] = degenerate[i] == 0 ? 1 : 0;
            for (;;) {
                scratch = candidate;
                if (matches(scratch))
                    local.push_back(candidate);
                std::size_t i = 1;
                for (; i < regs; ++i) {
                    const std::uint32_t limit = std::uint32_t{1} << lens[i];
                    std::uint32_t v = candidate[i] + 1;
                    if (v == degenerate[i])
                        ++v;
                    if (v < limit) {
                        candidate[i] = v;
                        break;
                    }
                    candidate[i] = degenerate[i] == 0 ? 1 : 0;
                }
                if (i == regs)
                    break;
            }
        }
        const std::lock_guard<std::mutex> lock(sink_mutex);
        for (auto& v : local)
            found.push_back(std::move(v));
    };

    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    std::sort(found.begin(), found.end());
    return found;
}

} // namespace suc
