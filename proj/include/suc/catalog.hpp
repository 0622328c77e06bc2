#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include "suc/anf.hpp"
#include "suc/errors.hpp"
#include "suc/nlfsr.hpp"

namespace suc {

namespace detail {

inline std::array<std::uint8_t, 32> sha256(const void* data, std::size_t len)
{
    std::array<std::uint8_t, 32> out{};
    unsigned out_len = out.size();
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1)
        throw IoError("digest computation failed");
    return out;
}

} // namespace detail

// The sixteen register positions, ascending.
inline const std::array<int, 16>& design_lengths()
{
    static const std::array<int, 16> k = {6,  7,  8,  9,  10, 11, 12, 13,
                                          14, 15, 16, 17, 19, 21, 22, 23};
    return k;
}

// Per-position |A_i| of the published selection that the design-space
// arithmetic targets (all four forms included).
inline const std::array<std::size_t, 16>& reference_counts()
{
    static const std::array<std::size_t, 16> k = {84,  160, 168, 160, 188, 200,
                                                  144, 144, 100, 96,  60,  60,
                                                  36,  16,  20,  12};
    return k;
}

struct CatalogEntry {
    int length_n = 0;
    AnfFunction basic_rff;
    std::string provenance;
    bool verified = false;

    bool operator==(const CatalogEntry&) const = default;
};

inline std::array<FeedbackSpec, 4> expand_forms(const CatalogEntry& e)
{
    return {FeedbackSpec::derive(e.basic_rff, e.length_n, FeedbackForm::basic),
            FeedbackSpec::derive(e.basic_rff, e.length_n, FeedbackForm::reverse),
            FeedbackSpec::derive(e.basic_rff, e.length_n, FeedbackForm::complement),
            FeedbackSpec::derive(e.basic_rff, e.length_n, FeedbackForm::reverse_complement)};
}

struct VerifyFailure {
    int length_n = 0;
    FeedbackForm form = FeedbackForm::basic;
    std::string rff_text;
    std::uint64_t period = 0;
};

struct VerifyReport {
    bool all_ok = false;
    std::size_t specs_checked = 0;
    std::vector<VerifyFailure> failures;
    std::map<int, std::size_t> counts; // |A_i| per length, four forms included
    double seconds = 0.0;

    std::string to_text() const
    {
        std::ostringstream os;
        os << "length  specs  reference\n";
        const auto& lens = design_lengths();
        const auto& ref = reference_counts();
        for (std::size_t i = 0; i < lens.size(); ++i) {
            const auto it = counts.find(lens[i]);
            const std::size_t have = it == counts.end() ? 0 : it->second;
            os << "  " << lens[i] << "\t" << have << "\t" << ref[i] << "\n";
        }
        os << "checked " << specs_checked << " specs, " << failures.size()
           << " failures, " << seconds << " s\n";
        for (const auto& f : failures)
            os << "  FAIL N=" << f.length_n << " form=" << to_string(f.form) << " "
               << f.rff_text << " period=" << f.period << "\n";
        return os.str();
    }
};

class Catalog {
public:
    Catalog() = default;

    static const std::set<int>& allowed_lengths()
    {
        static const std::set<int> k(design_lengths().begin(), design_lengths().end());
        return k;
    }

    static Catalog load(std::istream& in)
    {
        Catalog c;
        std::string line;
        std::size_t lineno = 0;
        std::set<std::pair<int, std::string>> seen;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#')
                continue;
            const auto t1 = line.find('\t');
            const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
            if (t2 == std::string::npos)
                throw ParseError("catalog line " + std::to_string(lineno) +
                                 ": expected N<TAB>rff<TAB>provenance");
            int n = 0;
            if (t1 == 0 || t1 > 2)
                throw ParseError("catalog line " + std::to_string(lineno) + ": bad length");
            for (std::size_t i = 0; i < t1; ++i) {
                const char ch = line[i];
                if (ch < '0' || ch > '9')
                    throw ParseError("catalog line " + std::to_string(lineno) + ": bad length");
                n = n * 10 + (ch - '0');
            }
            if (!allowed_lengths().count(n))
                throw ValidationError("catalog line " + std::to_string(lineno) +
                                      ": length " + std::to_string(n) +
                                      " outside the design set");
            CatalogEntry e;
            e.length_n = n;
            e.basic_rff = parse_anf(line.substr(t1 + 1, t2 - t1 - 1), n - 1);
            e.provenance = line.substr(t2 + 1);
            const std::string key = format_anf(e.basic_rff);
            if (!seen.insert({n, key}).second)
                throw ValidationError("catalog line " + std::to_string(lineno) +
                                      ": duplicate entry " + key);
            c.add(std::move(e));
        }
        return c;
    }

    static Catalog load_file(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open catalog file: " + path);
        return load(in);
    }

    void add(CatalogEntry e)
    {
        const auto forms = expand_forms(e); // validates length and rff arity
        // palindromic or self-dual feedbacks would make two forms collide and
        // the four-way partition dishonest, so reject them at the door
        for (std::size_t i = 0; i < forms.size(); ++i)
            for (std::size_t j = i + 1; j < forms.size(); ++j)
                if (forms[i].rff == forms[j].rff)
                    throw ValidationError("entry " + format_anf(e.basic_rff) +
                                          " has coinciding derived forms");
        basics_.push_back(std::move(e));
        for (const auto& s : forms)
            specs_[basics_.back().length_n].push_back(s);
        verified_ = false;
    }

    void save(std::ostream& out) const
    {
        std::vector<const CatalogEntry*> order;
        for (const auto& e : basics_)
            order.push_back(&e);
        std::sort(order.begin(), order.end(), [](const CatalogEntry* a, const CatalogEntry* b) {
            const std::string ta = format_anf(a->basic_rff), tb = format_anf(b->basic_rff);
            return std::tie(a->length_n, ta) < std::tie(b->length_n, tb);
        });
        for (const auto* e : order)
            out << e->length_n << '\t' << format_anf(e->basic_rff) << '\t' << e->provenance
                << '\n';
    }

    void save_file(const std::string& path) const
    {
        std::ofstream out(path);
        if (!out)
            throw IoError("cannot write catalog file: " + path);
        save(out);
    }

    const std::vector<CatalogEntry>& basics() const { return basics_; }
    const std::map<int, std::vector<FeedbackSpec>>& specs() const { return specs_; }
    bool empty() const { return basics_.empty(); }

    const std::vector<FeedbackSpec>& specs_for(int length) const
    {
        const auto it = specs_.find(length);
        if (it == specs_.end())
            throw ValidationError("catalog has no entries of length " + std::to_string(length));
        return it->second;
    }

    std::map<int, std::size_t> counts() const
    {
        std::map<int, std::size_t> c;
        for (const auto& [n, v] : specs_)
            c[n] = v.size();
        return c;
    }

    // every register position populated, so an instance can be drawn
    bool complete() const
    {
        for (int n : design_lengths())
            if (!specs_.count(n) || specs_.at(n).empty())
                return false;
        return true;
    }

    double cardinality_log2() const
    {
        double sum = 0.0;
        for (const auto& [n, v] : specs_) {
            (void)n;
            sum += std::log2(static_cast<double>(v.size()));
        }
        return sum;
    }

    bool is_verified() const { return verified_; }

    // Caller vouches that this exact content already passed verify(), e.g.
    // against a cached result keyed by fingerprint(). Prefer verify().
    void assume_verified()
    {
        for (auto& e : basics_)
            e.verified = true;
        verified_ = !basics_.empty();
    }

    VerifyReport verify(unsigned threads = std::thread::hardware_concurrency())
    {
        struct Job {
            const FeedbackSpec* spec;
            const CatalogEntry* entry;
        };
        std::vector<Job> jobs;
        for (auto& e : basics_)
            e.verified = false;
        // expand per entry so failures can be tied back to their basic form
        std::vector<std::array<FeedbackSpec, 4>> expansions;
        expansions.reserve(basics_.size());
        for (const auto& e : basics_)
            expansions.push_back(expand_forms(e));
        for (std::size_t i = 0; i < basics_.size(); ++i)
            for (const auto& s : expansions[i])
                jobs.push_back({&s, &basics_[i]});

        const auto t0 = std::chrono::steady_clock::now();
        std::atomic<std::size_t> next{0};
        std::mutex mu;
        std::vector<VerifyFailure> failures;
        std::vector<const CatalogEntry*> bad_entries;

        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size())
                    return;
                const PeriodReport rep = verify_max_period(*jobs[i].spec);
                if (!rep.is_max_period) {
                    std::lock_guard<std::mutex> lk(mu);
                    failures.push_back({rep.length_n, rep.form,
                                        format_anf(jobs[i].entry->basic_rff), rep.period});
                    bad_entries.push_back(jobs[i].entry);
                }
            }
        };

        const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, 16));
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < nthreads; ++t)
            pool.emplace_back(worker);
        worker();
        for (auto& th : pool)
            th.join();

        for (auto& e : basics_)
            e.verified =
                std::find(bad_entries.begin(), bad_entries.end(), &e) == bad_entries.end();
        verified_ = failures.empty() && !basics_.empty();

        VerifyReport rep;
        rep.all_ok = failures.empty();
        rep.specs_checked = jobs.size();
        rep.failures = std::move(failures);
        rep.counts = counts();
        rep.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::sort(rep.failures.begin(), rep.failures.end(),
                  [](const VerifyFailure& a, const VerifyFailure& b) {
                      return std::tie(a.length_n, a.rff_text) < std::tie(b.length_n, b.rff_text);
                  });
        return rep;
    }

    // digest of the canonical serialization; pins catalog identity in blobs
    std::array<std::uint8_t, 32> fingerprint() const
    {
        std::ostringstream os;
        save(os);
        const std::string text = os.str();
        return detail::sha256(text.data(), text.size());
    }

private:
    std::vector<CatalogEntry> basics_;
    std::map<int, std::vector<FeedbackSpec>> specs_;
    bool verified_ = false;
};

inline double reference_cardinality_log2()
{
    double sum = 0.0;
    for (std::size_t c : reference_counts())
        sum += std::log2(static_cast<double>(c));
    return sum;
}

// Upper-bound exponent for the number of candidate feedback functions over
// the given lengths: each length contributes 2^{N-1} - N + 1.
inline std::uint64_t debruijn_count_exponent(const std::vector<int>& lengths)
{
    std::uint64_t sum = 0;
    for (int n : lengths) {
        if (n < 3 || n > 62)
            throw ValidationError("length out of range for count exponent");
        sum += (std::uint64_t{1} << (n - 1)) - static_cast<std::uint64_t>(n) + 1;
    }
    return sum;
}

inline double debruijn_count_log2(const std::vector<int>& lengths)
{
    return static_cast<double>(debruijn_count_exponent(lengths));
}

} // namespace suc
