#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "suc/anf.hpp"
#include "suc/bits.hpp"
#include "suc/errors.hpp"

namespace suc {

// A register is specified by a basic feedback function g over stages
// x_1..x_{N-1} plus one of four derived forms. The full feedback is
// f = x_0 XOR g'(x_1..x_{N-1}) with g' the form-transformed function,
// which keeps the state graph a union of pure cycles.
enum class FeedbackForm : std::uint8_t {
    basic = 0,
    reverse = 1,
    complement = 2,
    reverse_complement = 3,
};

inline const char* to_string(FeedbackForm f)
{
    switch (f) {
    case FeedbackForm::basic: return "basic";
    case FeedbackForm::reverse: return "reverse";
    case FeedbackForm::complement: return "complement";
    case FeedbackForm::reverse_complement: return "reverse_complement";
    }
    return "?";
}

inline FeedbackForm form_from_string(std::string_view s)
{
    if (s == "basic") return FeedbackForm::basic;
    if (s == "reverse") return FeedbackForm::reverse;
    if (s == "complement") return FeedbackForm::complement;
    if (s == "reverse_complement") return FeedbackForm::reverse_complement;
    throw ParseError("unknown feedback form: " + std::string(s));
}

constexpr int kMaxRegisterLength = 26; // exhaustive walks use a 2^N bitmap

struct FeedbackSpec {
    int length_n = 0;
    FeedbackForm form = FeedbackForm::basic;
    AnfFunction rff; // effective function, form transforms already applied

    // Derivations, relative to the basic function g:
    //   reverse            g_r(x_1..x_{N-1}) = g(x_{N-1}..x_1)
    //   complement         g_c(x_1..x_{N-1}) = g(1^x_1..1^x_{N-1})
    //   reverse_complement both
    // The reverse form generates the time-reversed cyclic sequence and the
    // complement form the bitwise-complemented one. Input complementation
    // (rather than a bare constant flip) is what makes the second identity
    // hold for nonlinear g; for every shipped g it lands constant = 1.
    static FeedbackSpec derive(const AnfFunction& basic_rff, int n, FeedbackForm form)
    {
        if (n < 2 || n > kMaxRegisterLength + 6)
            throw ValidationError("register length out of supported range");
        if (basic_rff.num_vars != n - 1)
            throw ValidationError("feedback function must range over x_1..x_{N-1}");
        if (basic_rff.constant)
            throw ValidationError("basic feedback function must have no constant term");
        basic_rff.validate();

        FeedbackSpec spec;
        spec.length_n = n;
        spec.form = form;
        AnfFunction g = basic_rff;
        if (form == FeedbackForm::reverse || form == FeedbackForm::reverse_complement)
            g = g.remap([](int i, int n_) { return n_ - i; }, n);
        if (form == FeedbackForm::complement || form == FeedbackForm::reverse_complement)
            g = g.with_complemented_inputs();
        spec.rff = std::move(g);
        return spec;
    }

    AnfFunction basic_rff() const
    {
        AnfFunction g = rff;
        if (form == FeedbackForm::complement || form == FeedbackForm::reverse_complement)
            g = g.with_complemented_inputs(); // involution
        if (form == FeedbackForm::reverse || form == FeedbackForm::reverse_complement)
            g = g.remap([](int i, int n_) { return n_ - i; }, length_n);
        return g;
    }

    // The single fixed point excluded from a max-period cycle.
    std::uint32_t degenerate_state() const
    {
        if (form == FeedbackForm::basic || form == FeedbackForm::reverse)
            return 0;
        return (std::uint32_t{1} << length_n) - 1;
    }

    std::string serialize() const
    {
        return std::to_string(length_n) + ":" + to_string(form) + ":" + format_anf(basic_rff());
    }

    static FeedbackSpec parse(std::string_view text)
    {
        const auto c1 = text.find(':');
        const auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
        if (c2 == std::string_view::npos)
            throw ParseError("feedback spec must be N:form:function");
        int n = 0;
        for (char ch : text.substr(0, c1)) {
            if (ch < '0' || ch > '9')
                throw ParseError("bad register length");
            n = n * 10 + (ch - '0');
            if (n > 1000)
                throw ParseError("bad register length");
        }
        const FeedbackForm form = form_from_string(text.substr(c1 + 1, c2 - c1 - 1));
        const AnfFunction g = parse_anf(text.substr(c2 + 1), n - 1);
        return derive(g, n, form);
    }

    bool operator==(const FeedbackSpec&) const = default;
};

class Nlfsr {
public:
    Nlfsr(FeedbackSpec spec, std::uint32_t state)
        : spec_(std::move(spec)),
          rff_(CompiledAnf::compile(spec_.rff, 1)),
          state_(state)
    {
        if (spec_.length_n < 2 || spec_.length_n > 32)
            throw ValidationError("register length out of range");
        if (spec_.length_n < 32 && state >= (std::uint32_t{1} << spec_.length_n))
            throw ValidationError("state wider than register");
        if (state == spec_.degenerate_state())
            throw ValidationError("degenerate start state");
    }

    // Emits stage 0, shifts toward stage 0, feeds back into stage N-1.
    int step()
    {
        const int out = static_cast<int>(state_ & 1);
        const std::uint32_t fb = static_cast<std::uint32_t>(rff_.eval(state_)) ^ (state_ & 1);
        state_ = (state_ >> 1) | (fb << (spec_.length_n - 1));
        return out;
    }

    BitVec generate(std::size_t k)
    {
        BitVec out(k);
        for (std::size_t i = 0; i < k; ++i)
            if (step())
                out.set(i, 1);
        return out;
    }

    std::uint32_t state() const { return state_; }
    int output() const { return static_cast<int>(state_ & 1); }
    const FeedbackSpec& spec() const { return spec_; }

private:
    FeedbackSpec spec_;
    CompiledAnf rff_;
    std::uint32_t state_;
};

struct PeriodReport {
    int length_n = 0;
    FeedbackForm form = FeedbackForm::basic;
    std::uint64_t period = 0;
    bool is_max_period = false;
    std::optional<std::uint32_t> off_cycle_state;
};

// Exhaustive cycle walk from a canonical non-degenerate state. Proves the
// period and, for a max-period register, that the one remaining state is
// the degenerate fixed point.
inline PeriodReport verify_max_period(const FeedbackSpec& spec)
{
    if (spec.length_n < 2 || spec.length_n > kMaxRegisterLength)
        throw ValidationError("exhaustive verification supports N <= 26");

    const int n = spec.length_n;
    const std::uint64_t space = std::uint64_t{1} << n;
    const std::uint32_t degenerate = spec.degenerate_state();
    const std::uint32_t start = degenerate == 0 ? 1u : 0u;

    const CompiledAnf g = CompiledAnf::compile(spec.rff, 1);
    std::vector<std::uint64_t> visited(static_cast<std::size_t>((space + 63) / 64), 0);

    std::uint32_t s = start;
    std::uint64_t period = 0;
    do {
        visited[s >> 6] |= std::uint64_t{1} << (s & 63);
        const std::uint32_t fb = static_cast<std::uint32_t>(g.eval(s)) ^ (s & 1);
        s = (s >> 1) | (fb << (n - 1));
        ++period;
    } while (s != start);

    PeriodReport rep;
    rep.length_n = n;
    rep.form = spec.form;
    rep.period = period;
    rep.is_max_period = period == space - 1;
    if (rep.is_max_period) {
        const bool degenerate_untouched =
            ((visited[degenerate >> 6] >> (degenerate & 63)) & 1) == 0;
        if (!degenerate_untouched)
            throw ValidationError("cycle walk touched the degenerate state");
        // and it really must be a fixed point, or the count would be off
        const std::uint32_t fb = static_cast<std::uint32_t>(g.eval(degenerate)) ^ (degenerate & 1);
        const std::uint32_t next = (degenerate >> 1) | (fb << (n - 1));
        if (next != degenerate)
            throw ValidationError("excluded state is not a fixed point");
        rep.off_cycle_state = degenerate;
    }
    return rep;
}

// True when seq has length 2^n - 1 and every nonzero n-bit window appears
// exactly once cyclically.
inline bool is_modified_de_bruijn(const BitVec& seq, int n)
{
    if (n < 1 || n > kMaxRegisterLength)
        throw ValidationError("window width out of range");
    const std::uint64_t expect = (std::uint64_t{1} << n) - 1;
    if (seq.size() != expect)
        throw ValidationError("sequence length must be 2^n - 1");

    std::vector<std::uint64_t> seen(static_cast<std::size_t>((expect + 64) / 64), 0);
    std::uint32_t w = 0;
    for (int i = 0; i < n; ++i)
        w |= static_cast<std::uint32_t>(seq.get(i)) << i;
    for (std::uint64_t t = 0; t < expect; ++t) {
        if (w == 0)
            return false;
        if ((seen[w >> 6] >> (w & 63)) & 1)
            return false;
        seen[w >> 6] |= std::uint64_t{1} << (w & 63);
        const std::uint64_t next = (t + n) % expect;
        w = (w >> 1) | (static_cast<std::uint32_t>(seq.get(next)) << (n - 1));
    }
    return true;
}

} // namespace suc
