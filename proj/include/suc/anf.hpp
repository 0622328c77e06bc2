#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "suc/errors.hpp"

namespace suc {

// Boolean function in algebraic normal form over variables x_1..x_num_vars.
// Terms are canonical: each term's indices sorted ascending, no duplicate
// indices, term list sorted, no repeated terms. Evaluation maps variable
// x_i to bit (i-1) of the input word unless an offset says otherwise.
struct AnfFunction {
    int num_vars = 0;
    bool constant = false;
    std::vector<std::vector<int>> terms;

    void canonicalize()
    {
        for (auto& t : terms) {
            std::sort(t.begin(), t.end());
            t.erase(std::unique(t.begin(), t.end()), t.end());
        }
        std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
            if (a.size() != b.size())
                return a.size() < b.size();
            return a < b;
        });
        // XOR algebra: a term appearing twice cancels.
        std::vector<std::vector<int>> kept;
        for (std::size_t i = 0; i < terms.size();) {
            std::size_t j = i;
            while (j < terms.size() && terms[j] == terms[i])
                ++j;
            if ((j - i) % 2 == 1)
                kept.push_back(terms[i]);
            i = j;
        }
        terms = std::move(kept);
    }

    void validate() const
    {
        if (num_vars < 0)
            throw ValidationError("negative variable count");
        for (const auto& t : terms) {
            if (t.empty())
                throw ValidationError("empty product term");
            for (int idx : t)
                if (idx < 1 || idx > num_vars)
                    throw ValidationError("term index out of range: x" + std::to_string(idx));
        }
    }

    int degree() const
    {
        std::size_t d = 0;
        for (const auto& t : terms)
            d = std::max(d, t.size());
        return static_cast<int>(d);
    }

    bool eval(std::uint64_t x) const
    {
        bool acc = constant;
        for (const auto& t : terms) {
            bool prod = true;
            for (int idx : t)
                prod = prod && ((x >> (idx - 1)) & 1);
            acc ^= prod;
        }
        return acc;
    }

    AnfFunction remap(int (*index_map)(int, int), int arg) const
    {
        AnfFunction out;
        out.num_vars = num_vars;
        out.constant = constant;
        out.terms = terms;
        for (auto& t : out.terms)
            for (auto& idx : t)
                idx = index_map(idx, arg);
        out.canonicalize();
        return out;
    }

    // Substitutes x_i -> 1 XOR x_i for every variable and re-expands.
    // Each term of degree d contributes all 2^d subsets of itself.
    AnfFunction with_complemented_inputs() const
    {
        std::map<std::vector<int>, int> acc;
        int new_constant = constant ? 1 : 0;
        for (const auto& t : terms) {
            const std::size_t d = t.size();
            for (std::uint64_t sub = 0; sub < (std::uint64_t{1} << d); ++sub) {
                std::vector<int> s;
                for (std::size_t k = 0; k < d; ++k)
                    if ((sub >> k) & 1)
                        s.push_back(t[k]);
                if (s.empty())
                    new_constant ^= 1;
                else
                    acc[s] ^= 1;
            }
        }
        AnfFunction out;
        out.num_vars = num_vars;
        out.constant = new_constant != 0;
        for (const auto& [term, parity] : acc)
            if (parity)
                out.terms.push_back(term);
        out.canonicalize();
        return out;
    }

    bool operator==(const AnfFunction&) const = default;
};

// Mask-compiled evaluator for hot loops. bit_offset selects which input bit
// carries x_1 (register stepping uses offset 1 so x_i aligns with stage i).
struct CompiledAnf {
    std::vector<std::uint64_t> masks;
    std::uint64_t constant = 0;

    static CompiledAnf compile(const AnfFunction& f, int bit_offset = 0)
    {
        CompiledAnf c;
        c.constant = f.constant ? 1 : 0;
        for (const auto& t : f.terms) {
            std::uint64_t m = 0;
            for (int idx : t)
                m |= std::uint64_t{1} << (idx - 1 + bit_offset);
            c.masks.push_back(m);
        }
        return c;
    }

    bool eval(std::uint64_t x) const
    {
        std::uint64_t acc = constant;
        for (auto m : masks)
            acc ^= static_cast<std::uint64_t>((x & m) == m);
        return (acc & 1) != 0;
    }
};

// Parses the catalog notation: comma-separated variable indices, with
// parenthesized groups forming one product term. "1,2,(2,4)" reads as
// x1 + x2 + x2*x4. Indices must lie in [1, num_vars].
inline AnfFunction parse_anf(std::string_view text, int num_vars)
{
    AnfFunction f;
    f.num_vars = num_vars;

    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t'))
            ++i;
    };
    auto read_index = [&]() -> int {
        skip_ws();
        if (i >= text.size() || text[i] < '0' || text[i] > '9')
            throw ParseError("expected variable index in function text");
        long v = 0;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
            v = v * 10 + (text[i] - '0');
            if (v > 1'000'000)
                throw ParseError("variable index too large");
            ++i;
        }
        return static_cast<int>(v);
    };

    bool expect_item = true;
    while (true) {
        skip_ws();
        if (i >= text.size())
            break;
        if (!expect_item) {
            if (text[i] != ',')
                throw ParseError("expected comma between terms");
            ++i;
            expect_item = true;
            continue;
        }
        if (text[i] == '(') {
            ++i;
            std::vector<int> term;
            term.push_back(read_index());
            skip_ws();
            while (i < text.size() && text[i] == ',') {
                ++i;
                term.push_back(read_index());
                skip_ws();
            }
            if (i >= text.size() || text[i] != ')')
                throw ParseError("unterminated product group");
            ++i;
            if (term.size() < 2)
                throw ParseError("product group needs at least two indices");
            f.terms.push_back(std::move(term));
        } else {
            f.terms.push_back({read_index()});
        }
        expect_item = false;
    }
    if (expect_item && !f.terms.empty())
        throw ParseError("trailing comma in function text");
    if (f.terms.empty())
        throw ParseError("empty function text");

    f.canonicalize();
    f.validate();
    return f;
}

// Inverse of parse_anf for constant-free functions (the stored catalog form).
inline std::string format_anf(const AnfFunction& f)
{
    if (f.constant)
        throw ValidationError("catalog notation cannot express a constant term");
    std::string out;
    for (std::size_t i = 0; i < f.terms.size(); ++i) {
        if (i)
            out += ",";
        const auto& t = f.terms[i];
        if (t.size() == 1) {
            out += std::to_string(t[0]);
        } else {
            out += "(";
            for (std::size_t k = 0; k < t.size(); ++k) {
                if (k)
                    out += ",";
                out += std::to_string(t[k]);
            }
            out += ")";
        }
    }
    return out;
}

// Human-readable rendering, constant included.
inline std::string pretty_anf(const AnfFunction& f)
{
    std::string out;
    for (std::size_t i = 0; i < f.terms.size(); ++i) {
        if (i)
            out += " + ";
        for (std::size_t k = 0; k < f.terms[i].size(); ++k) {
            if (k)
                out += "*";
            out += "x" + std::to_string(f.terms[i][k]);
        }
    }
    if (f.constant)
        out += out.empty() ? "1" : " + 1";
    if (out.empty())
        out = "0";
    return out;
}

} // namespace suc
