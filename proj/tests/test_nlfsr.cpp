#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "suc/anf.hpp"
#include "suc/bits.hpp"
#include "suc/errors.hpp"
#include "suc/nlfsr.hpp"

using suc::AnfFunction;
using suc::FeedbackForm;
using suc::FeedbackSpec;
using suc::Nlfsr;
using suc::parse_anf;

namespace {

// Plodding reference simulator over explicit stage arrays. Kept deliberately
// structure-free so it cannot share a bug with the packed implementation.
struct StageSim {
    AnfFunction g;
    std::vector<int> stages; // stages[i] = x_i

    explicit StageSim(const FeedbackSpec& spec, std::uint32_t state)
        : g(spec.rff), stages(spec.length_n)
    {
        for (int i = 0; i < spec.length_n; ++i)
            stages[i] = (state >> i) & 1;
    }

    int step()
    {
        const int out = stages[0];
        std::uint64_t packed = 0;
        for (std::size_t i = 1; i < stages.size(); ++i)
            if (stages[i])
                packed |= std::uint64_t{1} << (i - 1);
        const int fb = out ^ g.eval(packed);
        for (std::size_t i = 0; i + 1 < stages.size(); ++i)
            stages[i] = stages[i + 1];
        stages.back() = fb;
        return out;
    }

    std::uint32_t state() const
    {
        std::uint32_t s = 0;
        for (std::size_t i = 0; i < stages.size(); ++i)
            s |= static_cast<std::uint32_t>(stages[i]) << i;
        return s;
    }
};

std::string cycle_from(const FeedbackSpec& spec, std::uint32_t start, std::size_t len)
{
    Nlfsr reg(spec, start);
    return reg.generate(len).to_string();
}

bool is_cyclic_rotation(const std::string& a, const std::string& b)
{
    return a.size() == b.size() && (a + a).find(b) != std::string::npos;
}

} // namespace

TEST_CASE("worked single step")
{
    // N = 4, f = x0 ^ x1, stages shown high to low: "0001" -> out 1 -> "1000"
    FeedbackSpec spec = FeedbackSpec::derive(parse_anf("1", 3), 4, FeedbackForm::basic);
    Nlfsr reg(spec, 0b0001);
    REQUIRE(reg.output() == 1);
    REQUIRE(reg.step() == 1);
    REQUIRE(reg.state() == 0b1000);
    REQUIRE(reg.step() == 0);
    REQUIRE(reg.state() == 0b0100);
}

TEST_CASE("stepping matches the stage array simulator")
{
    std::mt19937 rng(31);
    const std::vector<std::pair<int, std::string>> cases = {
        {4, "1"}, {5, "1,2,(2,4)"}, {6, "2,(3,5)"}, {7, "1,4,(2,3),(5,6)"}};
    for (const auto& [n, text] : cases) {
        for (auto form : {FeedbackForm::basic, FeedbackForm::reverse,
                          FeedbackForm::complement, FeedbackForm::reverse_complement}) {
            FeedbackSpec spec = FeedbackSpec::derive(parse_anf(text, n - 1), n, form);
            std::uint32_t state;
            do {
                state = rng() & ((1u << n) - 1);
            } while (state == spec.degenerate_state());

            Nlfsr reg(spec, state);
            StageSim sim(spec, state);
            for (int t = 0; t < 200; ++t) {
                REQUIRE(reg.step() == sim.step());
                REQUIRE(reg.state() == sim.state());
            }
        }
    }
}

TEST_CASE("exhaustive period agrees with a permutation walk oracle")
{
    std::vector<std::tuple<int, std::string, FeedbackForm>> cases = {
        {4, "1", FeedbackForm::basic},           // max period LFSR
        {4, "1", FeedbackForm::complement},      //
        {4, "2", FeedbackForm::basic},           // short cycles
        {5, "1,2,(2,4)", FeedbackForm::basic},   //
        {5, "1,2,(2,4)", FeedbackForm::reverse}, //
        {6, "2,(3,5)", FeedbackForm::reverse_complement},
    };
    for (const auto& [n, text, form] : cases) {
        FeedbackSpec spec = FeedbackSpec::derive(parse_anf(text, n - 1), n, form);
        const std::uint32_t start = spec.degenerate_state() == 0 ? 1 : 0;

        StageSim probe(spec, start);
        std::uint64_t oracle_period = 0;
        do {
            probe.step();
            ++oracle_period;
        } while (probe.state() != start);

        auto rep = suc::verify_max_period(spec);
        REQUIRE(rep.period == oracle_period);
        REQUIRE(rep.is_max_period == (oracle_period == (std::uint64_t{1} << n) - 1));
        if (rep.is_max_period) {
            REQUIRE(rep.off_cycle_state.has_value());
            REQUIRE(*rep.off_cycle_state == spec.degenerate_state());
        }
    }
}

TEST_CASE("complement form emits the bitwise complement")
{
    for (const auto& [n, text] : std::vector<std::pair<int, std::string>>{
             {4, "1"}, {5, "1,2,(2,4)"}, {6, "2,(3,5)"}}) {
        FeedbackSpec basic = FeedbackSpec::derive(parse_anf(text, n - 1), n, FeedbackForm::basic);
        FeedbackSpec comp = FeedbackSpec::derive(parse_anf(text, n - 1), n, FeedbackForm::complement);
        const std::uint32_t mask = (1u << n) - 1;
        std::mt19937 rng(41);
        for (int trial = 0; trial < 8; ++trial) {
            std::uint32_t s;
            do {
                s = rng() & mask;
            } while (s == 0);
            std::string a = cycle_from(basic, s, 120);
            std::string b = cycle_from(comp, ~s & mask, 120);
            for (std::size_t i = 0; i < a.size(); ++i)
                REQUIRE(a[i] != b[i]);
        }
    }
}

TEST_CASE("reverse form runs the cycle backwards")
{
    // only meaningful over a full cycle, so use max period specs
    for (const auto& [n, text] : std::vector<std::pair<int, std::string>>{
             {4, "1"}, {5, "2"}}) { // x^5 + x^3 + 1 is primitive
        FeedbackSpec fwd = FeedbackSpec::derive(parse_anf(text, n - 1), n, FeedbackForm::basic);
        FeedbackSpec rev = FeedbackSpec::derive(parse_anf(text, n - 1), n, FeedbackForm::reverse);
        REQUIRE(suc::verify_max_period(fwd).is_max_period);
        REQUIRE(suc::verify_max_period(rev).is_max_period);

        const std::size_t period = (1u << n) - 1;
        std::string f = cycle_from(fwd, 1, period);
        std::string r = cycle_from(rev, 1, period);
        std::string f_rev(f.rbegin(), f.rend());
        REQUIRE(is_cyclic_rotation(f_rev, r));
        REQUIRE_FALSE(is_cyclic_rotation(f, r)); // direction actually differs
    }
}

TEST_CASE("reverse complement composes both symmetries")
{
    const int n = 5;
    FeedbackSpec fwd = FeedbackSpec::derive(parse_anf("2", n - 1), n, FeedbackForm::basic);
    FeedbackSpec rc = FeedbackSpec::derive(parse_anf("2", n - 1), n, FeedbackForm::reverse_complement);
    REQUIRE(suc::verify_max_period(rc).is_max_period);

    const std::size_t period = (1u << n) - 1;
    std::string f = cycle_from(fwd, 1, period);
    std::string r = cycle_from(rc, 1, period);
    std::string want(f.rbegin(), f.rend());
    for (auto& c : want)
        c = c == '0' ? '1' : '0';
    REQUIRE(is_cyclic_rotation(want, r));
}

TEST_CASE("modified de bruijn windows")
{
    REQUIRE(suc::is_modified_de_bruijn(suc::BitVec::from_string("1110010"), 3));
    REQUIRE_FALSE(suc::is_modified_de_bruijn(suc::BitVec::from_string("1110110"), 3));
    REQUIRE_FALSE(suc::is_modified_de_bruijn(suc::BitVec::from_string("0000000"), 3));
    REQUIRE_THROWS_AS(suc::is_modified_de_bruijn(suc::BitVec::from_string("111001"), 3),
                      suc::ValidationError);

    FeedbackSpec spec = FeedbackSpec::derive(parse_anf("1", 3), 4, FeedbackForm::basic);
    Nlfsr reg(spec, 1);
    REQUIRE(suc::is_modified_de_bruijn(reg.generate(15), 4));

    FeedbackSpec comp = FeedbackSpec::derive(parse_anf("1", 3), 4, FeedbackForm::complement);
    Nlfsr regc(comp, 1);
    const suc::BitVec seq = regc.generate(15);
    suc::BitVec flipped(15);
    for (std::size_t i = 0; i < 15; ++i)
        flipped.set(i, !seq.get(i));
    REQUIRE(suc::is_modified_de_bruijn(flipped, 4));
}

TEST_CASE("spec serialization round trips")
{
    FeedbackSpec spec = FeedbackSpec::derive(parse_anf("1,2,(2,4)", 5), 6, FeedbackForm::reverse);
    const std::string text = spec.serialize();
    REQUIRE(text == "6:reverse:1,2,(2,4)");
    REQUIRE(FeedbackSpec::parse(text) == spec);
    REQUIRE(spec.basic_rff() == parse_anf("1,2,(2,4)", 5));

    for (auto form : {FeedbackForm::basic, FeedbackForm::complement,
                      FeedbackForm::reverse_complement}) {
        FeedbackSpec s = FeedbackSpec::derive(parse_anf("1,2,(2,4)", 5), 6, form);
        REQUIRE(FeedbackSpec::parse(s.serialize()) == s);
    }

    REQUIRE_THROWS_AS(FeedbackSpec::parse("6:reverse"), suc::ParseError);
    REQUIRE_THROWS_AS(FeedbackSpec::parse("x:basic:1"), suc::ParseError);
    REQUIRE_THROWS_AS(FeedbackSpec::parse("6:sideways:1"), suc::ParseError);
}

TEST_CASE("constructor rejects degenerate and oversized states")
{
    FeedbackSpec spec = FeedbackSpec::derive(parse_anf("1", 3), 4, FeedbackForm::basic);
    REQUIRE_THROWS_AS(Nlfsr(spec, 0), suc::ValidationError);
    REQUIRE_THROWS_AS(Nlfsr(spec, 1u << 4), suc::ValidationError);

    FeedbackSpec comp = FeedbackSpec::derive(parse_anf("1", 3), 4, FeedbackForm::complement);
    REQUIRE_THROWS_AS(Nlfsr(comp, 0xf), suc::ValidationError);
    REQUIRE_NOTHROW(Nlfsr(comp, 0));

    FeedbackSpec big;
    big.length_n = 30;
    big.form = FeedbackForm::basic;
    big.rff = parse_anf("1", 29);
    REQUIRE_THROWS_AS(suc::verify_max_period(big), suc::ValidationError);
}
