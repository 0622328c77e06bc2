#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "suc/anf.hpp"
#include "suc/bits.hpp"
#include "suc/errors.hpp"

namespace suc {

// Packed 2^n-entry truth table. Entry x lives at word x/64, bit x%64, with
// input variable x_i read from bit i-1 of x (same convention as AnfFunction).
class TruthTable {
public:
    static constexpr int kMaxVars = 26;

    TruthTable() = default;

    explicit TruthTable(int n) : n_(n)
    {
        if (n < 1 || n > kMaxVars)
            throw ValidationError("truth table arity out of range");
        bits_.assign(word_count(n), 0);
    }

    static TruthTable from_anf(const AnfFunction& f)
    {
        f.validate();
        TruthTable t(f.num_vars);
        if (f.constant)
            t.flip(0);
        for (const auto& term : f.terms) {
            std::uint32_t m = 0;
            for (int i : term)
                m |= std::uint32_t{1} << (i - 1);
            t.flip(m);
        }
        t.mobius_in_place(); // monomial coefficients -> point values
        return t;
    }

    AnfFunction to_anf() const
    {
        TruthTable coef = *this;
        coef.mobius_in_place(); // involution: point values -> coefficients
        AnfFunction f;
        f.num_vars = n_;
        f.constant = coef.get(0);
        const std::uint64_t size = std::uint64_t{1} << n_;
        for (std::uint64_t m = 1; m < size; ++m) {
            if (!coef.get(m))
                continue;
            std::vector<int> term;
            for (int i = 0; i < n_; ++i)
                if ((m >> i) & 1)
                    term.push_back(i + 1);
            f.terms.push_back(std::move(term));
        }
        f.canonicalize();
        return f;
    }

    int num_vars() const { return n_; }
    std::uint64_t size() const { return std::uint64_t{1} << n_; }

    bool get(std::uint64_t x) const { return (bits_[x >> 6] >> (x & 63)) & 1; }
    void set(std::uint64_t x, bool v)
    {
        const std::uint64_t m = std::uint64_t{1} << (x & 63);
        if (v)
            bits_[x >> 6] |= m;
        else
            bits_[x >> 6] &= ~m;
    }
    void flip(std::uint64_t x) { bits_[x >> 6] ^= std::uint64_t{1} << (x & 63); }

    std::uint64_t weight() const
    {
        std::uint64_t w = 0;
        for (std::uint64_t word : bits_)
            w += static_cast<std::uint64_t>(__builtin_popcountll(word));
        return w;
    }

    bool balanced() const { return weight() * 2 == size(); }

    const std::vector<std::uint64_t>& words() const { return bits_; }

    std::string to_hex() const
    {
        if (n_ < 2)
            throw ValidationError("hex serialization needs at least 2 variables");
        std::string out;
        out.reserve(size() / 4);
        static const char digits[] = "0123456789abcdef";
        // nibble per 4 entries, table entry 0 in the top bit of the first nibble
        for (std::uint64_t x = 0; x < size(); x += 4) {
            int nib = 0;
            for (int j = 0; j < 4; ++j)
                nib |= static_cast<int>(get(x + j)) << (3 - j);
            out += digits[nib];
        }
        return out;
    }

    static TruthTable from_hex(int n, std::string_view hex)
    {
        if (n < 2)
            throw ValidationError("hex serialization needs at least 2 variables");
        TruthTable t(n);
        if (hex.size() * 4 != t.size())
            throw ParseError("hex length does not match table size");
        for (std::uint64_t i = 0; i < hex.size(); ++i) {
            const char c = hex[i];
            int nib;
            if (c >= '0' && c <= '9')
                nib = c - '0';
            else if (c >= 'a' && c <= 'f')
                nib = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F')
                nib = c - 'A' + 10;
            else
                throw ParseError("invalid hex digit");
            for (int j = 0; j < 4; ++j)
                if ((nib >> (3 - j)) & 1)
                    t.set(i * 4 + j, true);
        }
        return t;
    }

    bool operator==(const TruthTable&) const = default;

private:
    static std::size_t word_count(int n)
    {
        return n >= 6 ? (std::size_t{1} << (n - 6)) : 1;
    }

    // GF(2) Moebius transform, its own inverse. Butterfly per variable:
    // entries with bit k set absorb their bit-k-cleared partner.
    void mobius_in_place()
    {
        static constexpr std::uint64_t kMask[6] = {
            0x5555555555555555ull, 0x3333333333333333ull, 0x0f0f0f0f0f0f0f0full,
            0x00ff00ff00ff00ffull, 0x0000ffff0000ffffull, 0x00000000ffffffffull,
        };
        const int in_word = std::min(n_, 6);
        for (int k = 0; k < in_word; ++k)
            for (auto& w : bits_)
                w ^= (w & kMask[k]) << (1 << k);
        if (n_ < 6) {
            // keep the unused upper region zero
            bits_[0] &= (std::uint64_t{1} << (1 << n_)) - 1;
        }
        for (int k = 6; k < n_; ++k) {
            const std::size_t stride = std::size_t{1} << (k - 6);
            for (std::size_t base = 0; base < bits_.size(); base += 2 * stride)
                for (std::size_t j = 0; j < stride; ++j)
                    bits_[base + stride + j] ^= bits_[base + j];
        }
    }

    int n_ = 0;
    std::vector<std::uint64_t> bits_;
};

// Signed spectrum W(w) = sum_x (-1)^{f(x) + <w,x>}. Max arity 26 would need
// 512 MiB of int32, so the practical cap matches TruthTable's.
struct WalshSpectrum {
    int n = 0;
    std::vector<std::int32_t> w;

    static WalshSpectrum compute(const TruthTable& t)
    {
        WalshSpectrum ws;
        ws.n = t.num_vars();
        const std::uint64_t size = t.size();
        ws.w.resize(size);
        for (std::uint64_t x = 0; x < size; ++x)
            ws.w[x] = t.get(x) ? -1 : 1;
        for (std::uint64_t len = 1; len < size; len <<= 1) {
            for (std::uint64_t base = 0; base < size; base += 2 * len) {
                for (std::uint64_t j = 0; j < len; ++j) {
                    const std::int32_t a = ws.w[base + j];
                    const std::int32_t b = ws.w[base + len + j];
                    ws.w[base + j] = a + b;
                    ws.w[base + len + j] = a - b;
                }
            }
        }
        return ws;
    }

    std::int32_t max_abs_nonzero_mask() const
    {
        std::int32_t m = 0;
        for (std::uint64_t i = 1; i < w.size(); ++i)
            m = std::max(m, std::abs(w[i]));
        return m;
    }

    std::int32_t max_abs() const
    {
        return std::max(std::abs(w[0]), max_abs_nonzero_mask());
    }

    // order = (smallest Hamming weight of a mask with nonzero coefficient) - 1
    int correlation_immunity() const
    {
        int min_wt = n + 1;
        for (std::uint64_t m = 1; m < w.size(); ++m)
            if (w[m] != 0)
                min_wt = std::min(min_wt, __builtin_popcountll(m));
        return min_wt - 1;
    }

    // any nonzero-coefficient mask of the given weight, or 0 if none
    std::uint64_t find_mask_of_weight(int weight) const
    {
        for (std::uint64_t m = 1; m < w.size(); ++m)
            if (__builtin_popcountll(m) == weight && w[m] != 0)
                return m;
        return 0;
    }

    std::int64_t nonlinearity() const
    {
        return (std::int64_t{1} << (n - 1)) - max_abs() / 2;
    }
};

struct AnnihilatorResult {
    int degree = 0;           // the algebraic immunity
    bool of_complement = false; // annihilator kills f^1 rather than f
    AnfFunction annihilator;  // nonzero, degree == `degree`, product with target == 0
};

namespace detail {

// Incremental GF(2) column-dependency finder over the support of target.
// Columns are monomials in ascending degree; the first dependent column
// yields a nonzero annihilator of minimal degree.
class AnnihilatorSearch {
public:
    AnnihilatorSearch(const TruthTable& t, bool complement) : t_(t), comp_(complement)
    {
        for (std::uint64_t x = 0; x < t.size(); ++x)
            if (t.get(x) != comp_)
                support_.push_back(x);
        words_ = (support_.size() + 63) / 64;
    }

    bool support_empty() const { return support_.empty(); }

    // feed every monomial of the given degree; true when a dependency appeared
    bool run_degree(int d, std::vector<std::uint64_t>& combo_out,
                    std::vector<std::uint64_t>& monos_out)
    {
        const int n = t_.num_vars();
        auto try_mask = [&](std::uint64_t m) {
            std::vector<std::uint64_t> col(words_, 0);
            for (std::size_t i = 0; i < support_.size(); ++i)
                if ((support_[i] & m) == m)
                    col[i >> 6] |= std::uint64_t{1} << (i & 63);
            std::vector<std::uint64_t> combo((monos_.size() + 64) / 64, 0);
            combo[monos_.size() >> 6] |= std::uint64_t{1} << (monos_.size() & 63);
            monos_.push_back(m);

            while (true) {
                std::size_t p = first_bit(col);
                if (p == kNone) {
                    combo_out = std::move(combo);
                    monos_out = monos_;
                    return true; // dependent: combo sums to the zero column
                }
                auto it = pivots_.find_slot(p);
                if (it == pivots_.none) {
                    pivots_.insert(p, std::move(col), std::move(combo));
                    return false;
                }
                xor_into(col, pivots_.cols[it]);
                xor_grow(combo, pivots_.combos[it]);
            }
        };

        if (d == 0)
            return try_mask(0);
        // Gosper iteration over all n-bit masks of popcount d
        std::uint64_t m = (std::uint64_t{1} << d) - 1;
        const std::uint64_t limit = std::uint64_t{1} << n;
        while (m < limit) {
            if (try_mask(m))
                return true;
            const std::uint64_t c = m & (~m + 1);
            const std::uint64_t r = m + c;
            m = (((r ^ m) >> 2) / c) | r;
        }
        return false;
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    struct PivotTable {
        std::vector<std::size_t> slot_of; // pivot position -> index, kNone if free
        std::vector<std::vector<std::uint64_t>> cols;
        std::vector<std::vector<std::uint64_t>> combos;
        std::size_t none = kNone;

        std::size_t find_slot(std::size_t p)
        {
            if (p >= slot_of.size())
                slot_of.resize(p + 1, kNone);
            return slot_of[p];
        }
        void insert(std::size_t p, std::vector<std::uint64_t>&& col,
                    std::vector<std::uint64_t>&& combo)
        {
            slot_of[p] = cols.size();
            cols.push_back(std::move(col));
            combos.push_back(std::move(combo));
        }
    };

    std::size_t first_bit(const std::vector<std::uint64_t>& v) const
    {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i])
                return i * 64 + static_cast<std::size_t>(__builtin_ctzll(v[i]));
        return kNone;
    }

    static void xor_into(std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b)
    {
        for (std::size_t i = 0; i < b.size(); ++i)
            a[i] ^= b[i];
    }

    static void xor_grow(std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b)
    {
        if (a.size() < b.size())
            a.resize(b.size(), 0);
        for (std::size_t i = 0; i < b.size(); ++i)
            a[i] ^= b[i];
    }

    const TruthTable& t_;
    bool comp_;
    std::vector<std::uint64_t> support_;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> monos_;
    PivotTable pivots_;
};

inline AnfFunction anf_from_mono_combo(int n, const std::vector<std::uint64_t>& combo,
                                       const std::vector<std::uint64_t>& monos)
{
    AnfFunction g;
    g.num_vars = n;
    for (std::size_t i = 0; i < monos.size(); ++i) {
        if (!((combo[i >> 6] >> (i & 63)) & 1))
            continue;
        if (monos[i] == 0) {
            g.constant = !g.constant;
            continue;
        }
        std::vector<int> term;
        for (int v = 0; v < n; ++v)
            if ((monos[i] >> v) & 1)
                term.push_back(v + 1);
        g.terms.push_back(std::move(term));
    }
    g.canonicalize();
    return g;
}

} // namespace detail

// Minimum degree of a nonzero annihilator of f or of f^1, with a witness.
inline AnnihilatorResult algebraic_immunity(const TruthTable& t)
{
    detail::AnnihilatorSearch on_f(t, false);
    detail::AnnihilatorSearch on_fc(t, true);

    AnnihilatorResult r;
    auto finish = [&](bool comp, const std::vector<std::uint64_t>& combo,
                      const std::vector<std::uint64_t>& monos, int d) {
        r.degree = d;
        r.of_complement = comp;
        r.annihilator = detail::anf_from_mono_combo(t.num_vars(), combo, monos);
        return r;
    };

    // empty support: the constant 1 annihilates outright
    for (auto [search, comp] : {std::pair{&on_f, false}, std::pair{&on_fc, true}}) {
        if (search->support_empty()) {
            AnfFunction one;
            one.num_vars = t.num_vars();
            one.constant = true;
            r.degree = 0;
            r.of_complement = comp;
            r.annihilator = one;
            return r;
        }
    }

    std::vector<std::uint64_t> combo, monos;
    for (int d = 0; d <= t.num_vars(); ++d) {
        if (on_f.run_degree(d, combo, monos))
            return finish(false, combo, monos, d);
        if (on_fc.run_degree(d, combo, monos))
            return finish(true, combo, monos, d);
    }
    throw ValidationError("annihilator search exhausted all degrees"); // unreachable
}

struct BfProfile {
    int num_vars = 0;
    bool balanced = false;
    int degree = 0;
    int correlation_immunity = 0;
    std::int64_t nonlinearity = 0;
    int algebraic_immunity = 0;
};

inline BfProfile profile(const AnfFunction& f)
{
    const TruthTable t = TruthTable::from_anf(f);
    const WalshSpectrum ws = WalshSpectrum::compute(t);
    BfProfile p;
    p.num_vars = f.num_vars;
    p.balanced = t.balanced();
    p.degree = f.degree();
    p.correlation_immunity = ws.correlation_immunity();
    p.nonlinearity = ws.nonlinearity();
    p.algebraic_immunity = algebraic_immunity(t).degree;
    return p;
}

} // namespace suc
