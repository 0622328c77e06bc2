#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "suc/boolean_analysis.hpp"
#include "suc/cryptanalysis.hpp"
#include "support/lfsr_oracle.hpp"

using namespace suc;

namespace {

BitVec from_text(const std::string& s) { return BitVec::from_string(s); }

FeedbackSpec basic_spec(const std::string& rff_text, int n)
{
    return FeedbackSpec::derive(parse_anf(rff_text, n - 1), n, FeedbackForm::basic);
}

BitVec random_bits(std::mt19937_64& rng, std::size_t len)
{
    BitVec v(len);
    for (std::size_t i = 0; i < len; ++i)
        v.set(i, static_cast<int>(rng() & 1));
    return v;
}

} // namespace

TEST_CASE("synthesis on simple patterns")
{
    const BmResult alt = berlekamp_massey(from_text("0101010101010101"));
    CHECK(alt.linear_complexity == 2);
    CHECK(lfsr_regenerates(alt, from_text("0101010101010101")));

    const BmResult zero = berlekamp_massey(from_text("00000000"));
    CHECK(zero.linear_complexity == 0);
    CHECK(zero.connection_polynomial.size() == 1);

    // nothing shorter than the whole prefix predicts a lone trailing one
    const BmResult late = berlekamp_massey(from_text("00000001"));
    CHECK(late.linear_complexity == 8);

    CHECK_THROWS_AS(berlekamp_massey(BitVec()), ValidationError);
}

TEST_CASE("synthesis matches the enumeration oracle")
{
    // every sequence up to length 10
    for (std::size_t len = 1; len <= 10; ++len) {
        for (std::uint32_t v = 0; v < (std::uint32_t{1} << len); ++v) {
            BitVec seq(len);
            for (std::size_t i = 0; i < len; ++i)
                seq.set(i, static_cast<int>((v >> i) & 1));
            const BmResult r = berlekamp_massey(seq);
            REQUIRE(r.linear_complexity == slow_min_lfsr(seq));
            REQUIRE(lfsr_regenerates(r, seq));
        }
    }
    // random sample at the lengths the oracle still reaches
    std::mt19937_64 rng(411);
    for (int trial = 0; trial < 1500; ++trial) {
        const std::size_t len = 11 + static_cast<std::size_t>(rng() % 14);
        const BitVec seq = random_bits(rng, len);
        const BmResult r = berlekamp_massey(seq);
        REQUIRE(r.linear_complexity == slow_min_lfsr(seq));
        REQUIRE(lfsr_regenerates(r, seq));
    }
}

TEST_CASE("primitive register streams have the expected complexity")
{
    Nlfsr lin4(basic_spec("1", 4), 1);
    CHECK(berlekamp_massey(lin4.generate(15)).linear_complexity == 4);
    Nlfsr lin4b(basic_spec("1", 4), 1);
    CHECK(berlekamp_massey(lin4b.generate(30)).linear_complexity == 4);

    Nlfsr lin5(basic_spec("2", 5), 7);
    CHECK(berlekamp_massey(lin5.generate(62)).linear_complexity == 5);
}

TEST_CASE("nonlinear register streams land inside the complexity window")
{
    struct Entry {
        const char* rff;
        int n;
    };
    const Entry entries[] = {{"1,2,(1,2)", 6}, {"1,2,(2,6)", 7}, {"3,8,(3,9)", 12}};
    for (const auto& e : entries) {
        for (const FeedbackForm form : {FeedbackForm::basic, FeedbackForm::reverse,
                                        FeedbackForm::complement, FeedbackForm::reverse_complement}) {
            const FeedbackSpec spec = FeedbackSpec::derive(parse_anf(e.rff, e.n - 1), e.n, form);
            REQUIRE(verify_max_period(spec).is_max_period);
            const std::uint32_t start = spec.degenerate_state() == 0 ? 1 : 0;
            Nlfsr reg(spec, start);
            const std::size_t period = (std::size_t{1} << e.n) - 1;
            const auto lc = berlekamp_massey(reg.generate(2 * period)).linear_complexity;
            CHECK(lc >= (std::size_t{1} << (e.n - 1)) + e.n);
            CHECK(lc <= period);
        }
    }
}

TEST_CASE("toy generator measurement reproduces the product floor")
{
    KsgConfig cfg;
    cfg.registers = {basic_spec("1,2,(1,2)", 6), basic_spec("1,2,(2,6)", 7)};
    cfg.combiner = parse_anf("1,2,(1,2)", 2);
    const LcExperiment rep = lc_bound_experiment(cfg, {1, 1});
    REQUIRE(rep.bound_available);
    CHECK(rep.bound == 2698);
    CHECK(rep.combined_lc >= 2698);
    CHECK(rep.combined_lc <= 63 * 127);
    CHECK(rep.period == 63 * 127);
    CHECK(rep.register_lc[0] >= 38);
    CHECK(rep.register_lc[0] <= 63);
    CHECK(rep.register_lc[1] >= 71);
    CHECK(rep.register_lc[1] <= 127);
    CHECK(rep.consistent());
}

TEST_CASE("toy generator measurement without a floor still reports the measurement")
{
    KsgConfig cfg;
    cfg.registers = {basic_spec("1,2,(1,2)", 6), basic_spec("3,8,(3,9)", 12)};
    cfg.combiner = parse_anf("(1,2)", 2);
    const LcExperiment rep = lc_bound_experiment(cfg, {1, 1});
    CHECK_FALSE(rep.bound_available);
    CHECK(rep.period == 4095);
    CHECK(rep.combined_lc > 0);
    CHECK(BigInt(rep.combined_lc) <= rep.period);
    CHECK(rep.consistent());
}

TEST_CASE("single register experiment measures the register itself")
{
    KsgConfig cfg;
    cfg.registers = {basic_spec("1,2,(1,2)", 6)};
    cfg.combiner = parse_anf("1", 1);
    const LcExperiment rep = lc_bound_experiment(cfg, {9});
    CHECK(rep.combined_lc == rep.register_lc[0]);
    CHECK(rep.bound_available);
    CHECK(rep.bound == 38);
}

TEST_CASE("correlation scan arithmetic on the xor toy")
{
    KsgConfig cfg;
    cfg.registers = {basic_spec("1", 3), basic_spec("1", 4)};
    cfg.combiner = parse_anf("1,2", 2);
    const std::size_t n = 105;
    Nlfsr a(cfg.registers[0], 5);
    Nlfsr b(cfg.registers[1], 9);
    const std::vector<BitVec> streams = {a.generate(n), b.generate(n)};
    Ksg gen(cfg, {5, 9});
    const BitVec z = gen.next_bits(n);

    const CorrelationTable table = correlation_scan(z, streams, 2);
    REQUIRE(table.entries.size() == 3);
    // single registers stay quiet over a full joint period
    CHECK(std::abs(table.find(0b01)->z) < 4.0);
    CHECK(std::abs(table.find(0b10)->z) < 4.0);
    // the pair is the keystream itself
    const CorrelationEntry* pair = table.find(0b11);
    CHECK(pair->agreements == n);
    CHECK(pair->z == Catch::Approx(std::sqrt(static_cast<double>(n))));
    CHECK(table.max_abs_z() == Catch::Approx(pair->z));
    CHECK(table.to_text(1).find("mask 3") != std::string::npos);

    CHECK_THROWS_AS(correlation_scan(z, streams, 0), ValidationError);
    CHECK_THROWS_AS(correlation_scan(z, streams, 3), ValidationError);
    CHECK_THROWS_AS(correlation_scan(BitVec(), streams, 1), ValidationError);
    std::vector<BitVec> bad = streams;
    bad[1] = BitVec(10);
    CHECK_THROWS_AS(correlation_scan(z, bad, 1), ValidationError);
    CHECK_THROWS_AS(correlation_for_mask(z, streams, 0), ValidationError);
    CHECK_THROWS_AS(correlation_for_mask(z, streams, 0b100), ValidationError);
}

TEST_CASE("combiner immunity shows up in a synthetic scan")
{
    // independent uniform inputs isolate the combiner's own correlations
    const AnfFunction& f = full_combiner();
    std::mt19937_64 rng(2024);
    const std::size_t n = 100000;
    std::vector<BitVec> streams;
    for (int i = 0; i < 16; ++i)
        streams.push_back(random_bits(rng, n));
    BitVec z(n);
    for (std::size_t t = 0; t < n; ++t) {
        std::uint64_t x = 0;
        for (int i = 0; i < 16; ++i)
            x |= static_cast<std::uint64_t>(streams[i].get(t)) << i;
        z.set(t, f.eval(x) ? 1 : 0);
    }

    const CorrelationTable low = correlation_scan(z, streams, 3);
    CHECK(low.entries.size() == 16 + 120 + 560);
    CHECK(low.max_abs_z() < 4.0);

    const WalshSpectrum ws = WalshSpectrum::compute(TruthTable::from_anf(f));
    const std::uint64_t mask9 = ws.find_mask_of_weight(9);
    REQUIRE(mask9 != 0);
    const CorrelationEntry hit = correlation_for_mask(z, streams, static_cast<std::uint32_t>(mask9));
    CHECK(std::abs(hit.z) > 4.0);
    CHECK(hit.order == 9);
}

TEST_CASE("parity cascade structure")
{
    const ParityCascade c = build_parity_cascade({7, 15, 31});
    CHECK(c.taps.size() == 8);
    CHECK(c.span() == 53);
    std::vector<std::uint64_t> sorted = c.taps;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::uint64_t>{0, 7, 15, 22, 31, 38, 46, 53});

    std::vector<std::uint64_t> eight;
    for (int n = 6; n <= 13; ++n)
        eight.push_back((std::uint64_t{1} << n) - 1);
    const ParityCascade big = build_parity_cascade(eight);
    CHECK(big.taps.size() == 256);
    CHECK(big.span() == 16312);

    CHECK_THROWS_AS(build_parity_cascade({7, 0}), ValidationError);
    CHECK_THROWS_AS(build_parity_cascade(std::vector<std::uint64_t>(21, 3)), ValidationError);
}

TEST_CASE("period-shift cascade annihilates the linear part")
{
    KsgConfig lin;
    lin.registers = {basic_spec("1", 3), basic_spec("1", 4), basic_spec("2", 5)};
    lin.combiner = parse_anf("1,2,3", 3);
    const std::size_t len = 53 + 1200;
    Ksg gen(lin, {1, 1, 1});
    const BitVec stream = gen.next_bits(len);

    const ParityCascade c = build_parity_cascade({7, 15, 31});
    const BitVec residual = apply_cascade(c, stream);
    CHECK(residual.size() == 1200);
    CHECK(residual.weight() == 0);

    // nonlinear part survives
    KsgConfig nonlin = lin;
    nonlin.combiner = parse_anf("1,2,3,(2,3)", 3);
    Ksg gen2(nonlin, {1, 1, 1});
    CHECK(apply_cascade(c, gen2.next_bits(len)).weight() > 0);

    // negative control: random input
    std::mt19937_64 rng(99);
    CHECK(apply_cascade(c, random_bits(rng, len)).weight() > 0);

    CHECK_THROWS_AS(apply_cascade(c, BitVec(53)), ValidationError);
}

TEST_CASE("cascade stages commute")
{
    KsgConfig lin;
    lin.registers = {basic_spec("1", 3), basic_spec("1", 4)};
    lin.combiner = parse_anf("1,2", 2);
    Ksg gen(lin, {2, 3});
    const BitVec stream = gen.next_bits(400);

    auto staged = [&](const std::vector<std::uint64_t>& order) {
        BitVec cur = stream;
        for (std::uint64_t p : order)
            cur = apply_cascade(build_parity_cascade({p}), cur);
        return cur;
    };
    const BitVec ab = staged({7, 15});
    const BitVec ba = staged({15, 7});
    const BitVec direct = apply_cascade(build_parity_cascade({7, 15}), stream);
    CHECK(ab == ba);
    CHECK(ab == direct);
    CHECK(ab.weight() == 0);
}

TEST_CASE("degeneration expectation arithmetic")
{
    CHECK(degeneration_probability({14}, 256) == Catch::Approx(-242.0));
    CHECK(degeneration_probability({14}, 0) == Catch::Approx(14.0));
    CHECK(degeneration_probability({6}, 10) == Catch::Approx(-4.0));
    CHECK(degeneration_probability({6, 8}, 10) == Catch::Approx(4.0));
    CHECK_THROWS_AS(degeneration_probability({}, 10), ValidationError);
    CHECK_THROWS_AS(degeneration_probability({6}, -1), ValidationError);
    CHECK_THROWS_AS(degeneration_probability({0}, 1), ValidationError);
}

TEST_CASE("exhaustive recovery finds exactly the planted state")
{
    KsgConfig cfg;
    cfg.registers = {basic_spec("1", 3), basic_spec("1", 4)};
    cfg.combiner = parse_anf("1,2", 2);
    Ksg gen(cfg, {5, 9});
    const BitVec z = gen.next_bits(40);

    const auto found = exhaustive_recovery(cfg, z);
    REQUIRE(found.size() == 1);
    CHECK(found[0] == std::vector<std::uint32_t>{5, 9});

    // same answer when partitioned across workers
    CHECK(exhaustive_recovery(cfg, z, 3) == found);

    // a flipped bit rules the true state out
    BitVec tampered = z;
    tampered.set(7, 1 - tampered.get(7));
    const auto after = exhaustive_recovery(cfg, tampered);
    for (const auto& s : after)
        CHECK(s != std::vector<std::uint32_t>{5, 9});

    // no constraint keeps every non-degenerate state
    CHECK(exhaustive_recovery(cfg, BitVec()).size() == 7 * 15);
}

TEST_CASE("exhaustive recovery always contains the generating state")
{
    KsgConfig cfg;
    cfg.registers = {basic_spec("1", 4), basic_spec("2", 5)};
    cfg.combiner = parse_anf("2,(1,2)", 2);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const std::uint32_t a = 1 + static_cast<std::uint32_t>(rng() % 15);
        const std::uint32_t b = 1 + static_cast<std::uint32_t>(rng() % 31);
        Ksg gen(cfg, {a, b});
        const BitVec z = gen.next_bits(12);
        const auto found = exhaustive_recovery(cfg, z);
        CHECK(std::find(found.begin(), found.end(), std::vector<std::uint32_t>{a, b}) != found.end());
    }
}

TEST_CASE("exhaustive recovery refuses large state spaces")
{
    KsgConfig cfg;
    cfg.registers = {basic_spec("3,8,(3,9)", 12), basic_spec("3,8,(3,9)", 12)};
    cfg.combiner = parse_anf("1,2", 2);
    CHECK_THROWS_AS(exhaustive_recovery(cfg, BitVec(8)), ValidationError);
}

TEST_CASE("recovery works across feedback forms")
{
    KsgConfig cfg;
    cfg.registers = {FeedbackSpec::derive(parse_anf("1,2,(1,2)", 5), 6, FeedbackForm::complement),
                     basic_spec("1", 4)};
    cfg.combiner = parse_anf("1,2", 2);
    Ksg gen(cfg, {0, 1});
    const BitVec z = gen.next_bits(30);
    const auto found = exhaustive_recovery(cfg, z);
    REQUIRE(found.size() == 1);
    CHECK(found[0] == std::vector<std::uint32_t>{0, 1});
}
