#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "suc/anf.hpp"
#include "suc/bits.hpp"
#include "suc/catalog.hpp"
#include "suc/errors.hpp"
#include "suc/nlfsr.hpp"

namespace suc {

using BigInt = boost::multiprecision::cpp_int;

// A bank of shift registers feeding one combining function. Register at
// position i (0-based) drives combiner input x_{i+1}; keep registers in
// ascending length order so variable indices line up with the published
// security arguments.
struct KsgConfig {
    std::vector<FeedbackSpec> registers;
    AnfFunction combiner;

    void validate() const
    {
        if (registers.empty())
            throw ValidationError("generator needs at least one register");
        if (registers.size() > 48)
            throw ValidationError("too many registers for one combiner word");
        if (combiner.num_vars != static_cast<int>(registers.size()))
            throw ValidationError("combiner arity does not match register count");
        combiner.validate();
    }

    std::vector<int> lengths() const
    {
        std::vector<int> out;
        out.reserve(registers.size());
        for (const auto& r : registers)
            out.push_back(r.length_n);
        return out;
    }

    int total_length() const
    {
        int s = 0;
        for (const auto& r : registers)
            s += r.length_n;
        return s;
    }
};

// Production geometry: sixteen registers, lengths 6..17,19,21,22,23.
inline const std::array<int, 16>& full_lengths() { return design_lengths(); }

// The 16-input combining function used by every full-size instance.
// Linear in x1..x8, quadratic/cubic mixing on x9..x12 and x13..x16,
// one degree-4 product on the top block.
inline const AnfFunction& full_combiner()
{
    static const AnfFunction f = parse_anf(
        "1,2,3,4,5,6,7,8,"
        "(9,11),(10,11),(10,12),(13,15),(14,15),(14,16),"
        "(9,10,11),(10,11,12),(13,14,15,16)",
        16);
    return f;
}

// Steps the whole bank in lockstep: each cycle reads every register's
// stage 0, feeds those bits to the combiner, then shifts all registers
// once. Keystream bit t is therefore a function of the joint state at
// time t, and register i's emitted stream equals combiner input x_{i+1}
// over time.
class Ksg {
public:
    Ksg(KsgConfig config, const std::vector<std::uint32_t>& states)
        : config_(std::move(config)),
          combiner_(CompiledAnf::compile(config_.combiner, 0))
    {
        config_.validate();
        if (states.size() != config_.registers.size())
            throw ValidationError("state count does not match register count");
        regs_.reserve(states.size());
        for (std::size_t i = 0; i < states.size(); ++i)
            regs_.emplace_back(config_.registers[i], states[i]);
    }

    int next_bit()
    {
        std::uint64_t x = 0;
        for (std::size_t i = 0; i < regs_.size(); ++i)
            x |= static_cast<std::uint64_t>(regs_[i].output()) << i;
        const int z = combiner_.eval(x) ? 1 : 0;
        for (auto& r : regs_)
            r.step();
        ++cycles_;
        return z;
    }

    BitVec next_bits(std::size_t k)
    {
        BitVec out(k);
        for (std::size_t i = 0; i < k; ++i)
            if (next_bit())
                out.set(i, 1);
        return out;
    }

    const KsgConfig& config() const { return config_; }
    const std::vector<Nlfsr>& registers() const { return regs_; }
    std::uint64_t cycles() const { return cycles_; }

    std::vector<std::uint32_t> states() const
    {
        std::vector<std::uint32_t> out;
        out.reserve(regs_.size());
        for (const auto& r : regs_)
            out.push_back(r.state());
        return out;
    }

private:
    KsgConfig config_;
    CompiledAnf combiner_;
    std::vector<Nlfsr> regs_;
    std::uint64_t cycles_ = 0;
};

inline BigInt mersenne(int n)
{
    if (n < 1 || n > 4096)
        throw ValidationError("mersenne exponent out of range");
    return (BigInt(1) << n) - 1;
}

// Exact joint period of the register bank: lcm over i of 2^{N_i}-1.
// Shared length divisors collapse because gcd(2^a-1, 2^b-1) = 2^{gcd(a,b)}-1.
inline BigInt period_lcm(const std::vector<int>& lengths)
{
    if (lengths.empty())
        throw ValidationError("period of an empty register bank");
    BigInt l = 1;
    for (int n : lengths) {
        const BigInt m = mersenne(n);
        l = l / boost::multiprecision::gcd(l, m) * m;
    }
    return l;
}

inline BigInt period_lcm(const KsgConfig& config) { return period_lcm(config.lengths()); }

// log2 of a positive big integer, for reporting. Exact values stay BigInt;
// this is presentation only.
inline double log2_value(const BigInt& v)
{
    if (v <= 0)
        throw ValidationError("log2 of a non-positive value");
    const unsigned bits = boost::multiprecision::msb(v);
    if (bits <= 52)
        return std::log2(v.convert_to<double>());
    const BigInt top = v >> (bits - 52);
    return std::log2(top.convert_to<double>()) + static_cast<double>(bits - 52);
}

struct LcBoundReport {
    bool conditions_met = false;
    std::vector<int> witness;  // combiner variable indices backing the bound
    BigInt bound = 0;
    std::string reason;  // set when no bound holds
};

// Keystream linear-complexity floor. Needs a top-degree product term whose
// register lengths are pairwise coprime, and every other top-degree term
// must differ from it in exactly one variable with the swapped pair of
// lengths coprime. When that holds the keystream LC is at least the product
// over the term's registers of (2^{N-1} + N), each factor being the LC
// floor of one maximal-period register. No qualifying term means no claim.
inline LcBoundReport lc_lower_bound(const std::vector<int>& lengths, const AnfFunction& combiner)
{
    if (combiner.num_vars != static_cast<int>(lengths.size()))
        throw ValidationError("combiner arity does not match length count");
    LcBoundReport rep;
    const int d = combiner.degree();
    if (d < 1) {
        rep.reason = "combiner is constant";
        return rep;
    }
    std::vector<std::vector<int>> top;
    for (const auto& t : combiner.terms)
        if (static_cast<int>(t.size()) == d)
            top.push_back(t);

    auto pairwise_coprime = [&](const std::vector<int>& term) {
        for (std::size_t a = 0; a < term.size(); ++a)
            for (std::size_t b = a + 1; b < term.size(); ++b)
                if (std::gcd(lengths[term[a] - 1], lengths[term[b] - 1]) != 1)
                    return false;
        return true;
    };
    // The one-swap shape: same degree, d-1 shared variables, and the two
    // exchanged variables map to coprime lengths.
    auto swap_ok = [&](const std::vector<int>& w, const std::vector<int>& m) {
        std::vector<int> only_w, only_m;
        std::set_difference(w.begin(), w.end(), m.begin(), m.end(), std::back_inserter(only_w));
        std::set_difference(m.begin(), m.end(), w.begin(), w.end(), std::back_inserter(only_m));
        if (only_w.size() != 1 || only_m.size() != 1)
            return false;
        return std::gcd(lengths[only_w[0] - 1], lengths[only_m[0] - 1]) == 1;
    };

    for (const auto& w : top) {
        if (!pairwise_coprime(w))
            continue;
        bool others_ok = true;
        for (const auto& m : top) {
            if (m == w)
                continue;
            if (!swap_ok(w, m)) {
                others_ok = false;
                break;
            }
        }
        if (!others_ok)
            continue;
        BigInt b = 1;
        for (int idx : w)
            b *= (BigInt(1) << (lengths[idx - 1] - 1)) + lengths[idx - 1];
        if (b > rep.bound) {
            rep.conditions_met = true;
            rep.witness = w;
            rep.bound = b;
        }
    }
    if (!rep.conditions_met)
        rep.reason = "no top-degree product term satisfies the coprimality conditions";
    return rep;
}

inline LcBoundReport lc_lower_bound(const KsgConfig& config)
{
    return lc_lower_bound(config.lengths(), config.combiner);
}

// Cost exponent of trying every (state, feedback choice) pair across the
// bank: sum of N_i plus sum of log2 of the per-length function family size.
inline double brute_force_log2(const std::vector<int>& lengths,
                               const std::map<int, std::size_t>& family_sizes)
{
    if (lengths.empty())
        throw ValidationError("brute force over an empty register bank");
    double acc = 0.0;
    for (int n : lengths) {
        const auto it = family_sizes.find(n);
        if (it == family_sizes.end() || it->second == 0)
            throw ValidationError("no function family size for length " + std::to_string(n));
        acc += n + std::log2(static_cast<double>(it->second));
    }
    return acc;
}

inline double brute_force_log2(const KsgConfig& config,
                               const std::map<int, std::size_t>& family_sizes)
{
    return brute_force_log2(config.lengths(), family_sizes);
}

// Length mass the cheapest correlation target carries: with immunity ci any
// useful correlation involves at least ci+1 registers, so an attacker's best
// case is the ci+1 smallest ones.
inline int correlation_floor(std::vector<int> lengths, int ci)
{
    if (ci < 0)
        throw ValidationError("negative correlation immunity");
    if (static_cast<std::size_t>(ci) + 1 > lengths.size())
        throw ValidationError("immunity exceeds register count");
    std::sort(lengths.begin(), lengths.end());
    return std::accumulate(lengths.begin(), lengths.begin() + ci + 1, 0);
}

inline int correlation_floor(const KsgConfig& config, int ci)
{
    return correlation_floor(config.lengths(), ci);
}

struct AlgebraicAttackReport {
    std::vector<int> witness;        // top-degree product term the attacker exploits
    int equation_degree = 0;         // sum of (N_i - 1) over the term's registers
    double monomial_count_log2 = 0;  // working set of the linearized system
    double cost_log2 = 0;            // solve cost with fast matrix multiplication
};

// Solving-cost estimate for equations derived from a top-degree product
// term. The attacker picks the cheapest qualifying term, the system degree
// is the sum of (N_i - 1) over its registers, the linearized monomial count
// is about 2^degree, and elimination costs that count to the power omega.
inline AlgebraicAttackReport algebraic_attack_estimate(const std::vector<int>& lengths,
                                                       const AnfFunction& combiner,
                                                       double omega = 2.38)
{
    if (combiner.num_vars != static_cast<int>(lengths.size()))
        throw ValidationError("combiner arity does not match length count");
    const int d = combiner.degree();
    if (d < 1)
        throw ValidationError("constant combiner has no algebraic system");
    AlgebraicAttackReport rep;
    int best = -1;
    for (const auto& t : combiner.terms) {
        if (static_cast<int>(t.size()) != d)
            continue;
        int deg = 0;
        for (int idx : t)
            deg += lengths[idx - 1] - 1;
        if (best < 0 || deg < best) {
            best = deg;
            rep.witness = t;
        }
    }
    rep.equation_degree = best;
    rep.monomial_count_log2 = static_cast<double>(best);
    rep.cost_log2 = omega * static_cast<double>(best);
    return rep;
}

inline AlgebraicAttackReport algebraic_attack_estimate(const KsgConfig& config, double omega = 2.38)
{
    return algebraic_attack_estimate(config.lengths(), config.combiner, omega);
}

struct BoundReport {
    BigInt lc_lower_bound = 0;  // zero when the conditions do not hold
    bool lc_conditions_met = false;
    std::vector<int> witness_monomial;
    BigInt period_lcm = 0;
    double brute_force_log2 = 0;

    std::string to_text() const
    {
        std::string out;
        out += "period_lcm          = 2^" + std::to_string(log2_value(period_lcm)) + " exactly " +
               period_lcm.str() + "\n";
        if (lc_conditions_met) {
            out += "lc_lower_bound      = 2^" + std::to_string(log2_value(lc_lower_bound)) +
                   " exactly " + lc_lower_bound.str() + "\n";
            out += "witness_monomial    =";
            for (int idx : witness_monomial)
                out += " x" + std::to_string(idx);
            out += "\n";
        } else {
            out += "lc_lower_bound      = (conditions not met)\n";
        }
        out += "brute_force_log2    = " + std::to_string(brute_force_log2) + "\n";
        return out;
    }
};

inline BoundReport bound_report(const std::vector<int>& lengths, const AnfFunction& combiner,
                                const std::map<int, std::size_t>& family_sizes)
{
    BoundReport rep;
    const LcBoundReport lc = lc_lower_bound(lengths, combiner);
    rep.lc_conditions_met = lc.conditions_met;
    rep.lc_lower_bound = lc.bound;
    rep.witness_monomial = lc.witness;
    rep.period_lcm = period_lcm(lengths);
    rep.brute_force_log2 = brute_force_log2(lengths, family_sizes);
    return rep;
}

inline BoundReport bound_report(const KsgConfig& config,
                                const std::map<int, std::size_t>& family_sizes)
{
    return bound_report(config.lengths(), config.combiner, family_sizes);
}

// Family sizes from the published per-length counts, for headline numbers.
inline std::map<int, std::size_t> reference_family_sizes()
{
    std::map<int, std::size_t> out;
    const auto& lens = design_lengths();
    const auto& counts = reference_counts();
    for (std::size_t i = 0; i < lens.size(); ++i)
        out[lens[i]] = counts[i];
    return out;
}

} // namespace suc
