#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <zlib.h>

#include "suc/errors.hpp"
#include "suc/genie.hpp"
#include "suc/ksg.hpp"

using suc::AnfFunction;
using suc::BitVec;
using suc::Catalog;
using suc::CreationReport;
using suc::EntropySource;
using suc::FeedbackForm;
using suc::ParseError;
using suc::RegisterPick;
using suc::SucInstance;
using suc::ValidationError;

namespace {

// four max-period basics per length, enough for real selection entropy
const char* kToyCatalogText =
    "6\t1,2,(1,2)\tunit\n"
    "6\t1,2,(2,4)\tunit\n"
    "6\t1,3,(1,5)\tunit\n"
    "6\t1,4,(1,4)\tunit\n"
    "7\t1,2,(2,6)\tunit\n"
    "7\t1,4,(1,3)\tunit\n"
    "7\t1,5,(1,5)\tunit\n"
    "7\t1,5,(3,5)\tunit\n";

Catalog verified_toy_catalog()
{
    std::istringstream in(kToyCatalogText);
    Catalog c = Catalog::load(in);
    const auto rep = c.verify(1);
    REQUIRE(rep.all_ok);
    return c;
}

std::array<std::uint8_t, 32> seed_bytes(std::uint32_t tag)
{
    std::array<std::uint8_t, 32> s{};
    for (std::size_t i = 0; i < 4; ++i)
        s[i] = static_cast<std::uint8_t>((tag >> (8 * i)) & 0xff);
    s[31] = 0x5a;
    return s;
}

void patch_crc(std::vector<std::uint8_t>& blob)
{
    const std::size_t body = blob.size() - 4;
    const auto c = static_cast<std::uint32_t>(
        ::crc32(::crc32(0L, nullptr, 0), blob.data(), static_cast<uInt>(body)));
    for (int i = 0; i < 4; ++i)
        blob[body + i] = static_cast<std::uint8_t>((c >> (8 * i)) & 0xff);
}

std::vector<std::pair<const void*, std::size_t>>& scrub_log()
{
    static std::vector<std::pair<const void*, std::size_t>> log;
    return log;
}

} // namespace

TEST_CASE("entropy source is reproducible from a seed and counts draws")
{
    auto a = EntropySource::from_seed(seed_bytes(7));
    auto b = EntropySource::from_seed(seed_bytes(7));
    for (int i = 0; i < 64; ++i)
        REQUIRE(a.next_u64() == b.next_u64());
    REQUIRE(a.draws() == 64);
    REQUIRE(a.deterministic());

    auto c = EntropySource::from_seed(seed_bytes(8));
    bool all_equal = true;
    for (int i = 0; i < 8; ++i)
        if (b.next_u64() != c.next_u64())
            all_equal = false;
    REQUIRE_FALSE(all_equal);

    auto os = EntropySource::from_os();
    REQUIRE_FALSE(os.deterministic());
    (void)os.next_u64();
    REQUIRE(os.draws() == 1);
}

TEST_CASE("uniform_below stays in range and is unbiased over a power of two")
{
    auto e = EntropySource::from_seed(seed_bytes(11));
    REQUIRE(e.uniform_below(1) == 0);
    REQUIRE(e.draws() == 0); // bound 1 spends nothing

    std::array<std::size_t, 16> hist{};
    const std::size_t samples = 16000;
    for (std::size_t i = 0; i < samples; ++i)
        ++hist[e.uniform_below(16)];
    // binomial(16000, 1/16): mean 1000, sigma ~ 30.6
    for (std::size_t k = 0; k < 16; ++k) {
        REQUIRE(hist[k] > 1000 - 4 * 31);
        REQUIRE(hist[k] < 1000 + 4 * 31);
    }
    REQUIRE(e.draws() == samples); // power-of-two bound never rejects

    for (std::size_t i = 0; i < 2000; ++i)
        REQUIRE(e.uniform_below(7) < 7);
    REQUIRE_THROWS_AS(e.uniform_below(0), ValidationError);
}

TEST_CASE("creation is deterministic per seed and distinct across seeds")
{
    const Catalog cat = verified_toy_catalog();

    auto e1 = EntropySource::from_seed(seed_bytes(42));
    auto e2 = EntropySource::from_seed(seed_bytes(42));
    SucInstance a = suc::genie_create(cat, e1);
    SucInstance b = suc::genie_create(cat, e2);
    REQUIRE(a.picks().size() == 2);
    REQUIRE(a.picks()[0].length_n == 6);
    REQUIRE(a.picks()[1].length_n == 7);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(a.picks()[i].entry_index == b.picks()[i].entry_index);
        REQUIRE(a.picks()[i].form == b.picks()[i].form);
        REQUIRE(a.creation_states()[i] == b.creation_states()[i]);
    }
    REQUIRE(suc::export_blob(a) == suc::export_blob(b));

    std::set<std::vector<std::uint8_t>> blobs;
    for (std::uint32_t tag = 0; tag < 100; ++tag) {
        auto e = EntropySource::from_seed(seed_bytes(0xbeef0000 + tag));
        blobs.insert(suc::export_blob(suc::genie_create(cat, e)));
    }
    REQUIRE(blobs.size() == 100);
}

TEST_CASE("function selection is uniform over every family member")
{
    const Catalog cat = verified_toy_catalog();
    std::map<int, std::map<std::size_t, std::size_t>> hist;
    const std::size_t runs = 4000;
    auto e = EntropySource::from_seed(seed_bytes(2718));
    for (std::size_t i = 0; i < runs; ++i) {
        SucInstance inst = suc::genie_create(cat, e);
        for (const auto& p : inst.picks())
            ++hist[p.length_n][std::size_t{p.entry_index} * 4 +
                               static_cast<std::size_t>(p.form)];
    }
    // 16 cells per length, binomial(4000, 1/16): mean 250, sigma ~ 15.3
    for (int n : {6, 7}) {
        REQUIRE(hist[n].size() == 16);
        for (const auto& [cell, count] : hist[n]) {
            (void)cell;
            REQUIRE(count > 250 - 3 * 15.4);
            REQUIRE(count < 250 + 3 * 15.4);
        }
    }
}

TEST_CASE("selection draws all happen before state draws, replayably")
{
    const Catalog cat = verified_toy_catalog();
    auto e = EntropySource::from_seed(seed_bytes(99));
    CreationReport rep;
    SucInstance inst = suc::genie_create(cat, e, {}, &rep);
    REQUIRE(rep.selection_draws + rep.state_draws == rep.total_draws);
    REQUIRE(rep.total_draws == e.draws());
    REQUIRE(rep.selection_draws == 2); // both family sizes are powers of two

    // replay the draw schedule by hand from the same seed
    auto replay = EntropySource::from_seed(seed_bytes(99));
    for (std::size_t i = 0; i < 2; ++i) {
        const int n = inst.picks()[i].length_n;
        const std::uint64_t idx = replay.uniform_below(cat.specs_for(n).size());
        REQUIRE(idx / 4 == inst.picks()[i].entry_index);
        REQUIRE(static_cast<FeedbackForm>(idx % 4) == inst.picks()[i].form);
    }
    REQUIRE(replay.draws() == rep.selection_draws);
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& p = inst.picks()[i];
        const auto& spec = cat.specs_for(p.length_n)[std::size_t{p.entry_index} * 4 +
                                                     static_cast<std::size_t>(p.form)];
        std::uint32_t state;
        do {
            state = static_cast<std::uint32_t>(
                replay.uniform_below(std::uint64_t{1} << p.length_n));
        } while (state == spec.degenerate_state());
        REQUIRE(state == inst.creation_states()[i]);
    }
    REQUIRE(replay.draws() == rep.total_draws);
}

TEST_CASE("responses are keystream segments and the cursor counts them")
{
    const Catalog cat = verified_toy_catalog();
    auto e = EntropySource::from_seed(seed_bytes(5));
    SucInstance inst = suc::genie_create(cat, e);
    REQUIRE(inst.cursor() == 0);

    suc::Ksg reference(inst.config(), inst.creation_states());
    const BitVec want = reference.next_bits(256);

    BitVec got = inst.respond(128);
    const BitVec tail = inst.respond(128);
    got.append(tail);
    REQUIRE(got == want);
    REQUIRE(inst.cursor() == 2);
    REQUIRE(inst.current_states() == reference.states());
    REQUIRE_THROWS_AS(inst.respond(0), ValidationError);
}

TEST_CASE("default combiner is xor unless the layout matches the full design")
{
    const Catalog cat = verified_toy_catalog();
    auto e = EntropySource::from_seed(seed_bytes(1));
    SucInstance inst = suc::genie_create(cat, e);
    const AnfFunction& f = inst.config().combiner;
    REQUIRE(f.num_vars == 2);
    REQUIRE(f.terms == std::vector<std::vector<int>>{{1}, {2}});

    const std::vector<int> full(suc::design_lengths().begin(), suc::design_lengths().end());
    REQUIRE(suc::detail::default_combiner_for(full) == suc::full_combiner());
    REQUIRE(suc::detail::default_combiner_for({6, 7, 8}) ==
            suc::detail::xor_all_combiner(3));

    auto e2 = EntropySource::from_seed(seed_bytes(1));
    AnfFunction custom = suc::parse_anf("1,2,(1,2)", 2);
    SucInstance with_custom = suc::genie_create(cat, e2, custom);
    REQUIRE(with_custom.config().combiner == custom);
}

TEST_CASE("export and import round-trip an instance exactly")
{
    const Catalog cat = verified_toy_catalog();
    auto e = EntropySource::from_seed(seed_bytes(77));
    SucInstance orig = suc::genie_create(cat, e);
    (void)orig.respond(64);
    (void)orig.respond(64);

    const auto blob = suc::export_blob(orig);
    REQUIRE(blob.size() == 51 + 8 * 2);

    SucInstance copy = suc::import_blob(blob, cat);
    REQUIRE(copy.cursor() == 2);
    REQUIRE(copy.current_states() == orig.current_states());
    REQUIRE(copy.creation_states() == copy.current_states()); // blob holds no originals
    REQUIRE(copy.picks().size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        REQUIRE(copy.picks()[i].length_n == orig.picks()[i].length_n);
        REQUIRE(copy.picks()[i].entry_index == orig.picks()[i].entry_index);
        REQUIRE(copy.picks()[i].form == orig.picks()[i].form);
    }
    REQUIRE(copy.catalog_fingerprint() == cat.fingerprint());

    // both continue with the same keystream
    BitVec a = orig.respond(200);
    BitVec b = copy.respond(200);
    REQUIRE(a == b);
}

TEST_CASE("blob indices survive a differently ordered catalog build")
{
    // same content, reversed insertion order: fingerprints agree, so an
    // exported blob must resolve to the same registers on both
    std::istringstream fwd(kToyCatalogText);
    Catalog a = Catalog::load(fwd);
    std::vector<std::string> lines;
    {
        std::istringstream in(kToyCatalogText);
        std::string line;
        while (std::getline(in, line))
            lines.push_back(line);
    }
    std::string reversed;
    for (auto it = lines.rbegin(); it != lines.rend(); ++it)
        reversed += *it + "\n";
    std::istringstream rev(reversed);
    Catalog b = Catalog::load(rev);
    REQUIRE(a.fingerprint() == b.fingerprint());
    REQUIRE(a.verify(1).all_ok);
    REQUIRE(b.verify(1).all_ok);

    auto e = EntropySource::from_seed(seed_bytes(1234));
    SucInstance on_a = suc::genie_create(a, e);
    SucInstance on_b = suc::import_blob(suc::export_blob(on_a), b);
    BitVec sa = on_a.respond(160);
    BitVec sb = on_b.respond(160);
    REQUIRE(sa == sb);
}

TEST_CASE("import rejects structural damage as parse errors")
{
    const Catalog cat = verified_toy_catalog();
    auto e = EntropySource::from_seed(seed_bytes(3));
    SucInstance inst = suc::genie_create(cat, e);
    const auto good = suc::export_blob(inst);
    REQUIRE_NOTHROW(suc::import_blob(good, cat));

    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20},
                            good.size() - 5, good.size() - 1}) {
        std::vector<std::uint8_t> trunc(good.begin(), good.begin() + cut);
        REQUIRE_THROWS_AS(suc::import_blob(trunc, cat), ParseError);
    }

    auto bad_magic = good;
    bad_magic[0] = 'X';
    REQUIRE_THROWS_AS(suc::import_blob(bad_magic, cat), ParseError);

    auto bad_version = good;
    bad_version[4] = 9;
    patch_crc(bad_version);
    REQUIRE_THROWS_AS(suc::import_blob(bad_version, cat), ParseError);

    auto flipped = good;
    flipped[45] ^= 0x40; // inside a register record, checksum must catch it
    REQUIRE_THROWS_AS(suc::import_blob(flipped, cat), ParseError);

    auto trailing = good;
    trailing.push_back(0);
    REQUIRE_THROWS_AS(suc::import_blob(trailing, cat), ParseError);
}

TEST_CASE("import rejects well-formed blobs that do not fit the catalog")
{
    const Catalog cat = verified_toy_catalog();
    std::vector<RegisterPick> picks = {{6, 0, FeedbackForm::basic},
                                       {7, 0, FeedbackForm::basic}};
    SucInstance inst(cat, picks, {1, 1}, 0);
    const auto good = suc::export_blob(inst);

    // registers are 8 bytes each starting at offset 39: N, entry lo, entry
    // hi, form, state
    auto huge_entry = good;
    huge_entry[40] = 0xff;
    huge_entry[41] = 0xff;
    patch_crc(huge_entry);
    REQUIRE_THROWS_AS(suc::import_blob(huge_entry, cat), ValidationError);

    auto bad_form = good;
    bad_form[42] = 7;
    patch_crc(bad_form);
    REQUIRE_THROWS_AS(suc::import_blob(bad_form, cat), ParseError);

    auto degenerate = good;
    for (int i = 0; i < 4; ++i)
        degenerate[43 + i] = 0; // state 0 is the basic form's fixed point
    patch_crc(degenerate);
    REQUIRE_THROWS_AS(suc::import_blob(degenerate, cat), ValidationError);

    auto wide_state = good;
    wide_state[44] = 0x40; // bit 14 of a length-6 register
    patch_crc(wide_state);
    REQUIRE_THROWS_AS(suc::import_blob(wide_state, cat), ValidationError);

    // a catalog with one more entry has a different fingerprint
    std::istringstream bigger_text(std::string(kToyCatalogText) + "6\t2,3,(1,3)\tunit\n");
    Catalog bigger = Catalog::load(bigger_text);
    REQUIRE(bigger.verify(1).all_ok);
    REQUIRE_THROWS_AS(suc::import_blob(good, bigger), ValidationError);
}

TEST_CASE("instance construction validates its inputs")
{
    const Catalog cat = verified_toy_catalog();
    std::vector<RegisterPick> picks = {{6, 0, FeedbackForm::basic},
                                       {7, 0, FeedbackForm::basic}};
    REQUIRE_NOTHROW(SucInstance(cat, picks, {1, 1}, 0));
    REQUIRE_THROWS_AS(SucInstance(cat, {}, {}, 0), ValidationError);
    REQUIRE_THROWS_AS(SucInstance(cat, picks, {1}, 0), ValidationError);
    REQUIRE_THROWS_AS(SucInstance(cat, picks, {0, 1}, 0), ValidationError); // degenerate
    REQUIRE_THROWS_AS(SucInstance(cat, picks, {1, 1u << 9}, 0), ValidationError);

    std::vector<RegisterPick> outside = {{6, 9, FeedbackForm::basic},
                                         {7, 0, FeedbackForm::basic}};
    REQUIRE_THROWS_AS(SucInstance(cat, outside, {1, 1}, 0), ValidationError);

    std::vector<RegisterPick> absent = {{8, 0, FeedbackForm::basic}};
    REQUIRE_THROWS_AS(SucInstance(cat, absent, {1}, 0), ValidationError);

    AnfFunction wrong_arity = suc::parse_anf("1,2,3", 3);
    REQUIRE_THROWS_AS(SucInstance(cat, picks, {1, 1}, 0, wrong_arity), ValidationError);
}

TEST_CASE("creation requires a verified, non-empty catalog")
{
    std::istringstream in(kToyCatalogText);
    Catalog cat = Catalog::load(in);
    auto e = EntropySource::from_seed(seed_bytes(6));
    REQUIRE_FALSE(cat.is_verified());
    REQUIRE_THROWS_AS(suc::genie_create(cat, e), ValidationError);
    REQUIRE(cat.verify(1).all_ok);
    REQUIRE_NOTHROW(suc::genie_create(cat, e));

    Catalog empty;
    REQUIRE_THROWS_AS(suc::entropy_account(empty), ValidationError);
}

TEST_CASE("entropy account sums selection and state space")
{
    const Catalog cat = verified_toy_catalog();
    const auto acc = suc::entropy_account(cat);
    REQUIRE(acc.selection_bits == Catch::Approx(8.0)); // log2(16) per register
    REQUIRE(acc.state_bits == Catch::Approx(13.0));
    REQUIRE(acc.total_bits() == Catch::Approx(21.0));
}

TEST_CASE("destruction scrubs the stored register states")
{
    const Catalog cat = verified_toy_catalog();
    scrub_log().clear();
    suc::detail::scrub_observer().store(
        [](const void* p, std::size_t n) { scrub_log().emplace_back(p, n); });
    {
        auto e = EntropySource::from_seed(seed_bytes(31));
        SucInstance inst = suc::genie_create(cat, e);
        (void)inst.respond(16);
        scrub_log().clear(); // only the teardown matters here
    }
    suc::detail::scrub_observer().store(nullptr);

    std::size_t state_wipes = 0;
    for (const auto& [p, n] : scrub_log()) {
        (void)p;
        if (n == 2 * sizeof(std::uint32_t))
            ++state_wipes;
    }
    // current states and creation states, two registers each
    REQUIRE(state_wipes >= 2);
}

TEST_CASE("moved-from instances do not scrub twice")
{
    const Catalog cat = verified_toy_catalog();
    auto e = EntropySource::from_seed(seed_bytes(32));
    SucInstance a = suc::genie_create(cat, e);
    const auto states = a.current_states();

    SucInstance b = std::move(a);
    REQUIRE(b.current_states() == states);

    scrub_log().clear();
    suc::detail::scrub_observer().store(
        [](const void* p, std::size_t n) { scrub_log().emplace_back(p, n); });
    { SucInstance sink = std::move(b); }
    const std::size_t wipes_from_sink = scrub_log().size();
    suc::detail::scrub_observer().store(nullptr);
    REQUIRE(wipes_from_sink >= 2);

    // b gave its buffers away; nothing left there to wipe
    REQUIRE(b.current_states().empty());
}
