// Operator front end. Every command is seedable and scriptable; --json
// switches the output to one JSON object per line.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "suc/boolean_analysis.hpp"
#include "suc/catalog.hpp"
#include "suc/cryptanalysis.hpp"
#include "suc/errors.hpp"
#include "suc/genie.hpp"
#include "suc/ksg.hpp"
#include "suc/nlfsr.hpp"
#include "suc/protocol.hpp"
#include "suc/transport.hpp"
#include "suc/uir.hpp"

namespace {

struct CliCtx {
    std::string catalog_path = "data/catalog.txt";
    std::string seed_hex;
    bool json = false;
};

// one record of output: aligned key/value text or a single JSON line
class Emitter {
public:
    explicit Emitter(bool json) : json_(json) {}

    void kv(const std::string& key, const std::string& v)
    {
        if (json_)
            obj_[key] = v;
        else
            rows_.emplace_back(key, v);
    }
    void kv(const std::string& key, const char* v) { kv(key, std::string(v)); }
    void kv(const std::string& key, bool v)
    {
        if (json_)
            obj_[key] = v;
        else
            rows_.emplace_back(key, v ? "true" : "false");
    }
    void kv(const std::string& key, double v)
    {
        if (json_) {
            obj_[key] = v;
        } else {
            std::ostringstream os;
            os.precision(12);
            os << v;
            rows_.emplace_back(key, os.str());
        }
    }
    template <typename T>
        requires std::integral<T>
    void kv(const std::string& key, T v)
    {
        if (json_)
            obj_[key] = v;
        else
            rows_.emplace_back(key, std::to_string(v));
    }
    void kv(const std::string& key, const nlohmann::ordered_json& v)
    {
        if (json_)
            obj_[key] = v;
        else
            rows_.emplace_back(key, v.dump());
    }

    void flush(std::ostream& out = std::cout)
    {
        if (json_) {
            out << obj_.dump() << std::endl;
            obj_.clear();
            return;
        }
        std::size_t width = 0;
        for (const auto& [k, v] : rows_)
            width = std::max(width, k.size());
        for (const auto& [k, v] : rows_)
            out << k << std::string(width - k.size(), ' ') << " = " << v << "\n";
        out.flush();
        rows_.clear();
    }

private:
    bool json_;
    nlohmann::ordered_json obj_;
    std::vector<std::pair<std::string, std::string>> rows_;
};

std::array<std::uint8_t, 32> parse_seed(const std::string& hex)
{
    const auto bytes = suc::detail::hex_decode(hex);
    if (bytes.size() != 32)
        throw suc::ValidationError("seed must be 64 hex characters");
    std::array<std::uint8_t, 32> out{};
    std::copy(bytes.begin(), bytes.end(), out.begin());
    return out;
}

suc::EntropySource make_entropy(const CliCtx& ctx)
{
    if (ctx.seed_hex.empty())
        return suc::EntropySource::from_os();
    return suc::EntropySource::from_seed(parse_seed(ctx.seed_hex));
}

std::string fingerprint_hex(const suc::Catalog& cat)
{
    const auto fp = cat.fingerprint();
    return suc::detail::hex_encode(std::vector<std::uint8_t>(fp.begin(), fp.end()));
}

std::string sidecar_path(const std::string& catalog_path)
{
    return catalog_path + ".verified";
}

suc::Catalog load_catalog(const CliCtx& ctx)
{
    std::ifstream in(ctx.catalog_path);
    if (!in)
        throw suc::IoError("cannot open catalog: " + ctx.catalog_path);
    return suc::Catalog::load(in);
}

// a successful `catalog verify` caches its verdict keyed by fingerprint so
// later commands skip the exhaustive walk
suc::Catalog load_verified_catalog(const CliCtx& ctx)
{
    suc::Catalog cat = load_catalog(ctx);
    std::ifstream side(sidecar_path(ctx.catalog_path));
    std::string cached;
    if (side && std::getline(side, cached) && cached == fingerprint_hex(cat))
        cat.assume_verified();
    if (!cat.is_verified())
        throw suc::ValidationError("catalog has no cached verification; run `suc catalog verify` first");
    return cat;
}

std::vector<std::uint8_t> read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw suc::IoError("cannot open file: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw suc::IoError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw suc::IoError("short write: " + path);
}

// ---- persisted device lifecycle -------------------------------------------

struct DeviceStateFile {
    suc::DeviceSn sn{};
    std::uint32_t t = 0;
    std::uint32_t k = 0;
    std::uint32_t cursor = 0;
    std::uint32_t epoch = 0;
    std::vector<std::uint8_t> blob;
    std::vector<std::uint8_t> prev_blob;
};

DeviceStateFile load_device_state(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw suc::IoError("cannot open device state: " + path);
    nlohmann::json j;
    try {
        in >> j;
        DeviceStateFile s;
        s.sn = suc::sn_from_hex(j.at("sn").get<std::string>());
        s.t = j.at("t").get<std::uint32_t>();
        s.k = j.at("k").get<std::uint32_t>();
        s.cursor = j.at("cursor").get<std::uint32_t>();
        s.epoch = j.at("epoch").get<std::uint32_t>();
        s.blob = suc::detail::hex_decode(j.at("blob").get<std::string>());
        s.prev_blob = suc::detail::hex_decode(j.at("prev_blob").get<std::string>());
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw suc::ParseError("device state " + path + ": " + e.what());
    }
}

void save_device_state(const std::string& path, const suc::DeviceAgent& agent)
{
    nlohmann::ordered_json j;
    j["sn"] = suc::sn_to_hex(agent.sn());
    j["t"] = agent.t();
    j["k"] = agent.k();
    j["cursor"] = agent.cursor();
    j["epoch"] = agent.epoch();
    j["blob"] = suc::detail::hex_encode(suc::export_blob(agent.instance()));
    j["prev_blob"] = suc::detail::hex_encode(agent.prev_blob());
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out)
            throw suc::IoError("cannot write device state: " + path);
        out << j.dump() << "\n";
    }
    std::filesystem::rename(tmp, path);
}

std::unique_ptr<suc::DeviceAgent> resume_agent(const DeviceStateFile& s,
                                               const suc::Catalog& catalog,
                                               suc::EntropySource entropy)
{
    suc::SucInstance inst = suc::import_blob(s.blob, catalog);
    return std::make_unique<suc::DeviceAgent>(s.sn, std::move(inst), catalog,
                                              std::move(entropy), s.t, s.k, s.cursor,
                                              s.epoch, s.prev_blob);
}

void emit_device_result(Emitter& e, const suc::DeviceAgent& agent,
                        const suc::DeviceResult& result)
{
    e.kv("accepted", result.accepted);
    e.kv("index", result.index);
    if (!result.error.empty())
        e.kv("error", result.error);
    e.kv("cursor", agent.cursor());
    e.kv("epoch", agent.epoch());
    e.flush();
    if (!result.accepted)
        throw suc::ProtocolError(result.error.empty() ? "session failed" : result.error);
}

// ---- commands --------------------------------------------------------------

void cmd_catalog_verify(const CliCtx& ctx, unsigned threads, bool no_cache)
{
    suc::Catalog cat = load_catalog(ctx);
    const suc::VerifyReport rep = cat.verify(threads);
    Emitter e(ctx.json);
    if (ctx.json) {
        nlohmann::ordered_json counts;
        for (const auto& [n, c] : rep.counts)
            counts[std::to_string(n)] = c;
        e.kv("counts", counts);
    } else {
        for (const auto& [n, c] : rep.counts)
            e.kv("specs_n" + std::to_string(n), c);
    }
    e.kv("specs_checked", rep.specs_checked);
    e.kv("cardinality_log2", cat.cardinality_log2());
    e.kv("fingerprint", fingerprint_hex(cat));
    e.kv("seconds", rep.seconds);
    e.kv("ok", rep.all_ok);
    e.flush();
    for (const auto& f : rep.failures) {
        Emitter fe(ctx.json);
        fe.kv("failed_length", f.length_n);
        fe.kv("failed_form", suc::to_string(f.form));
        fe.kv("failed_rff", f.rff_text);
        fe.kv("period", static_cast<std::uint64_t>(f.period));
        fe.flush(std::cerr);
    }
    if (!rep.all_ok)
        throw suc::ValidationError("catalog verification failed");
    if (!no_cache)
        write_file(sidecar_path(ctx.catalog_path), [&] {
            const std::string line = fingerprint_hex(cat) + "\n";
            return std::vector<std::uint8_t>(line.begin(), line.end());
        }());
}

void cmd_bf_profile(const CliCtx& ctx, const std::string& builtin, const std::string& anf,
                    int vars)
{
    suc::AnfFunction f;
    if (!builtin.empty()) {
        if (builtin != "F16")
            throw suc::ValidationError("unknown builtin: " + builtin);
        f = suc::full_combiner();
    } else if (!anf.empty()) {
        if (vars <= 0)
            throw suc::ValidationError("--anf needs --vars");
        f = suc::parse_anf(anf, vars);
    } else {
        throw suc::ValidationError("give --builtin or --anf");
    }
    const suc::BfProfile p = suc::profile(f);
    Emitter e(ctx.json);
    e.kv("num_vars", p.num_vars);
    e.kv("balanced", p.balanced);
    e.kv("degree", p.degree);
    e.kv("correlation_immunity", p.correlation_immunity);
    e.kv("nonlinearity", p.nonlinearity);
    e.kv("algebraic_immunity", p.algebraic_immunity);
    e.flush();
}

void cmd_suc_create(const CliCtx& ctx, const std::string& out_path)
{
    const suc::Catalog cat = load_verified_catalog(ctx);
    suc::EntropySource entropy = make_entropy(ctx);
    suc::CreationReport report;
    const suc::SucInstance inst = suc::genie_create(cat, entropy, {}, &report);
    const auto blob = suc::export_blob(inst);
    write_file(out_path, blob);
    const suc::EntropyAccount acc = suc::entropy_account(cat);
    Emitter e(ctx.json);
    e.kv("out", out_path);
    e.kv("bytes", blob.size());
    e.kv("registers", inst.picks().size());
    e.kv("selection_draws", report.selection_draws);
    e.kv("state_draws", report.state_draws);
    e.kv("selection_bits", acc.selection_bits);
    e.kv("state_bits", acc.state_bits);
    e.kv("catalog_fingerprint", fingerprint_hex(cat));
    e.flush();
}

void cmd_suc_respond(const CliCtx& ctx, const std::string& blob_path, std::uint32_t k,
                     std::uint32_t count)
{
    const suc::Catalog cat = load_catalog(ctx);
    suc::SucInstance inst = suc::import_blob(read_file(blob_path), cat);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint64_t index = inst.cursor();
        const suc::BitVec y = inst.respond(k);
        Emitter e(ctx.json);
        e.kv("index", index);
        e.kv("bits", y.size());
        e.kv("response", y.to_hex());
        e.flush();
    }
    write_file(blob_path, suc::export_blob(inst));
}

void cmd_suc_info(const CliCtx& ctx, const std::string& blob_path)
{
    const suc::Catalog cat = load_catalog(ctx);
    const suc::SucInstance inst = suc::import_blob(read_file(blob_path), cat);
    Emitter e(ctx.json);
    e.kv("registers", inst.picks().size());
    nlohmann::ordered_json regs = nlohmann::ordered_json::array();
    std::string text;
    for (const auto& p : inst.picks()) {
        if (ctx.json) {
            regs.push_back({{"length", p.length_n},
                            {"entry", p.entry_index},
                            {"form", suc::to_string(p.form)}});
        } else {
            if (!text.empty())
                text += ", ";
            text += std::to_string(p.length_n) + ":" + std::to_string(p.entry_index) +
                    ":" + suc::to_string(p.form);
        }
    }
    if (ctx.json)
        e.kv("picks", regs);
    else
        e.kv("picks", text);
    e.kv("total_state_bits", inst.config().total_length());
    e.kv("cursor", inst.cursor());
    e.kv("catalog_fingerprint",
         suc::detail::hex_encode(std::vector<std::uint8_t>(
             inst.catalog_fingerprint().begin(), inst.catalog_fingerprint().end())));
    e.flush();
}

void cmd_keystream(const CliCtx& ctx, const std::string& blob_path, std::size_t bits,
                   bool advance)
{
    const suc::Catalog cat = load_catalog(ctx);
    suc::SucInstance inst = suc::import_blob(read_file(blob_path), cat);
    suc::BitVec z;
    if (advance) {
        z = inst.respond(bits); // counts as one consumed response
        write_file(blob_path, suc::export_blob(inst));
    } else {
        suc::Ksg working(inst.config(), inst.current_states());
        z = working.next_bits(bits);
    }
    Emitter e(ctx.json);
    e.kv("bits", z.size());
    e.kv("keystream", z.to_hex());
    if (advance)
        e.kv("cursor", inst.cursor());
    e.flush();
}

void cmd_analyze_bm(const CliCtx& ctx, const std::string& hex, std::size_t bits,
                    const std::string& in_path)
{
    suc::BitVec seq;
    if (!in_path.empty()) {
        const auto bytes = read_file(in_path);
        seq = suc::BitVec::from_bytes(bytes, bytes.size() * 8);
    } else if (!hex.empty()) {
        seq = suc::BitVec::from_hex(hex, bits == 0 ? hex.size() * 4 : bits);
    } else {
        throw suc::ValidationError("give --hex or --in");
    }
    const suc::BmResult r = suc::berlekamp_massey(seq);
    Emitter e(ctx.json);
    e.kv("length", seq.size());
    e.kv("linear_complexity", r.linear_complexity);
    e.kv("regenerates", suc::lfsr_regenerates(r, seq));
    e.flush();
}

void cmd_analyze_correlation(const CliCtx& ctx, const std::string& blob_path,
                             std::size_t bits, int max_order, double threshold)
{
    const suc::Catalog cat = load_catalog(ctx);
    const suc::SucInstance inst = suc::import_blob(read_file(blob_path), cat);
    const auto& cfg = inst.config();
    std::vector<suc::BitVec> streams;
    for (std::size_t i = 0; i < cfg.registers.size(); ++i) {
        suc::Nlfsr reg(cfg.registers[i], inst.current_states()[i]);
        streams.push_back(reg.generate(bits));
    }
    suc::Ksg gen(cfg, inst.current_states());
    const suc::BitVec z = gen.next_bits(bits);
    const suc::CorrelationTable table = suc::correlation_scan(z, streams, max_order);
    Emitter e(ctx.json);
    e.kv("samples", table.sample_size);
    e.kv("masks_scanned", table.entries.size());
    e.kv("max_abs_z", table.max_abs_z());
    nlohmann::ordered_json flagged = nlohmann::ordered_json::array();
    std::string text;
    for (const auto& entry : table.entries) {
        if (std::abs(entry.z) < threshold)
            continue;
        if (ctx.json) {
            flagged.push_back({{"mask", entry.mask},
                               {"order", entry.order},
                               {"bias", entry.bias},
                               {"z", entry.z}});
        } else {
            text += "\n  mask=" + std::to_string(entry.mask) +
                    " order=" + std::to_string(entry.order) + " z=" + std::to_string(entry.z);
        }
    }
    if (ctx.json)
        e.kv("flagged", flagged);
    else
        e.kv("flagged", text.empty() ? "(none)" : text);
    e.flush();
}

void cmd_analyze_parity(const CliCtx& ctx, const std::string& blob_path,
                        std::size_t positions)
{
    const suc::Catalog cat = load_catalog(ctx);
    const suc::SucInstance inst = suc::import_blob(read_file(blob_path), cat);
    std::vector<std::uint64_t> periods;
    for (const auto& spec : inst.config().registers)
        periods.push_back((std::uint64_t{1} << spec.length_n) - 1);
    const suc::ParityCascade cascade = suc::build_parity_cascade(periods);
    suc::Ksg gen(inst.config(), inst.current_states());
    const suc::BitVec z = gen.next_bits(cascade.span() + positions);
    const suc::BitVec residual = suc::apply_cascade(cascade, z);
    Emitter e(ctx.json);
    e.kv("span", cascade.span());
    e.kv("positions", residual.size());
    e.kv("residual_weight", residual.weight());
    e.kv("all_zero", residual.weight() == 0);
    e.flush();
}

void cmd_analyze_recover(const CliCtx& ctx, const std::string& blob_path, std::size_t bits,
                         int threads)
{
    const suc::Catalog cat = load_catalog(ctx);
    const suc::SucInstance inst = suc::import_blob(read_file(blob_path), cat);
    suc::Ksg gen(inst.config(), inst.current_states());
    const suc::BitVec prefix = gen.next_bits(bits);
    const auto candidates = suc::exhaustive_recovery(inst.config(), prefix, threads);
    bool matched = false;
    for (const auto& c : candidates)
        matched = matched || c == inst.current_states();
    Emitter e(ctx.json);
    e.kv("prefix_bits", prefix.size());
    e.kv("state_bits", inst.config().total_length());
    e.kv("candidates", candidates.size());
    e.kv("true_state_found", matched);
    e.flush();
}

void cmd_bounds(const CliCtx& ctx)
{
    const suc::Catalog cat = load_catalog(ctx);
    if (cat.empty())
        throw suc::ValidationError("catalog is empty");
    std::vector<int> lengths;
    for (const auto& [n, c] : cat.counts())
        lengths.push_back(n);
    const suc::AnfFunction combiner = suc::detail::default_combiner_for(lengths);
    const suc::BoundReport rep = suc::bound_report(lengths, combiner, cat.counts());
    const auto walsh =
        suc::WalshSpectrum::compute(suc::TruthTable::from_anf(combiner));
    const int ci = walsh.correlation_immunity();
    const int floor = suc::correlation_floor(lengths, ci);
    const suc::AlgebraicAttackReport alg = suc::algebraic_attack_estimate(lengths, combiner);

    Emitter e(ctx.json);
    std::string joined;
    for (int n : lengths)
        joined += (joined.empty() ? "" : ",") + std::to_string(n);
    e.kv("lengths", joined);
    e.kv("period_lcm", rep.period_lcm.str());
    e.kv("period_lcm_log2", suc::log2_value(rep.period_lcm));
    e.kv("lc_conditions_met", rep.lc_conditions_met);
    if (rep.lc_conditions_met) {
        e.kv("lc_lower_bound", rep.lc_lower_bound.str());
        e.kv("lc_lower_bound_log2", suc::log2_value(rep.lc_lower_bound));
    }
    e.kv("cardinality_log2", cat.cardinality_log2());
    e.kv("brute_force_log2", rep.brute_force_log2);
    e.kv("combiner_ci", ci);
    e.kv("correlation_floor", floor);
    e.kv("algebraic_equation_degree", alg.equation_degree);
    e.kv("algebraic_cost_log2", alg.cost_log2);
    e.flush();
}

void cmd_ta_serve(const CliCtx& ctx, const std::string& store_path, std::uint16_t port,
                  std::uint32_t sessions)
{
    suc::UirStore store(store_path);
    suc::TrustedAuthority ta(store, make_entropy(ctx));
    suc::TcpListener listener(port);
    {
        Emitter e(ctx.json);
        e.kv("event", "listening");
        e.kv("port", listener.port());
        e.flush();
    }
    std::mutex out_m;
    std::vector<std::thread> workers;
    for (std::uint32_t served = 0; sessions == 0 || served < sessions; ++served) {
        auto conn = listener.accept();
        workers.emplace_back(
            [&ta, &out_m, &ctx, conn = std::shared_ptr<suc::Stream>(std::move(conn))] {
                const suc::SessionOutcome out = ta.serve_session(*conn);
                std::lock_guard<std::mutex> lock(out_m);
                Emitter e(ctx.json);
                e.kv("event", "session");
                e.kv("kind", out.kind == suc::SessionOutcome::Kind::identify ? "identify"
                             : out.kind == suc::SessionOutcome::Kind::update  ? "update"
                                                                              : "malformed");
                e.kv("sn", suc::sn_to_hex(out.sn));
                e.kv("completed", out.completed);
                e.kv("index", out.index);
                if (!out.error.empty())
                    e.kv("error", out.error);
                e.flush();
            });
    }
    for (auto& w : workers)
        w.join();
    Emitter e(ctx.json);
    e.kv("event", "done");
    e.kv("sessions", sessions);
    e.kv("single_use_violations", ta.single_use_violations().size());
    e.flush();
}

void cmd_ta_enroll(const CliCtx& ctx, const std::string& store_path,
                   const std::string& blob_path, const std::string& sn_hex, std::uint32_t t,
                   std::uint32_t k, const std::string& device_state_path)
{
    const suc::Catalog cat = load_catalog(ctx);
    const suc::DeviceSn sn = suc::sn_from_hex(sn_hex);
    suc::SucInstance inst = suc::import_blob(read_file(blob_path), cat);
    suc::DeviceAgent agent(sn, std::move(inst), cat, make_entropy(ctx));

    suc::UirStore store(store_path);
    suc::TrustedAuthority ta(store, make_entropy(ctx));
    auto [dev_stream, ta_stream] = suc::stream_pair();
    std::exception_ptr dev_err;
    std::thread dev_thread([&] {
        try {
            agent.serve_enroll(*dev_stream);
        } catch (...) {
            dev_err = std::current_exception();
        }
    });
    suc::UirRecord rec;
    try {
        rec = ta.enroll(*ta_stream, sn, t, k);
    } catch (...) {
        dev_thread.join();
        throw;
    }
    dev_thread.join();
    if (dev_err)
        std::rethrow_exception(dev_err);
    save_device_state(device_state_path, agent);

    Emitter e(ctx.json);
    e.kv("sn", suc::sn_to_hex(rec.sn));
    e.kv("t", rec.t());
    e.kv("k", rec.k);
    e.kv("store", store_path);
    e.kv("device_state", device_state_path);
    e.flush();
}

// one in-process session: both ends simulated locally against the real store
void cmd_ta_session(const CliCtx& ctx, const std::string& store_path,
                    const std::string& device_state_path, bool update)
{
    const suc::Catalog cat = load_catalog(ctx);
    const DeviceStateFile state = load_device_state(device_state_path);
    auto agent = resume_agent(state, cat, make_entropy(ctx));
    suc::UirStore store(store_path);
    suc::TrustedAuthority ta(store, make_entropy(ctx));

    auto [dev_stream, ta_stream] = suc::stream_pair();
    suc::SessionOutcome outcome;
    std::thread ta_thread([&] { outcome = ta.serve_session(*ta_stream); });
    const suc::DeviceResult result =
        update ? agent->run_update(*dev_stream) : agent->run_identify(*dev_stream);
    dev_stream->close();
    ta_thread.join();
    save_device_state(device_state_path, *agent);

    Emitter e(ctx.json);
    e.kv("kind", update ? "update" : "identify");
    e.kv("completed", outcome.completed);
    emit_device_result(e, *agent, result);
}

void cmd_device_run(const CliCtx& ctx, const std::string& device_state_path,
                    const std::string& host, std::uint16_t port, const std::string& mode)
{
    if (mode != "identify" && mode != "update")
        throw suc::ValidationError("mode must be identify or update");
    const suc::Catalog cat = load_catalog(ctx);
    const DeviceStateFile state = load_device_state(device_state_path);
    auto agent = resume_agent(state, cat, make_entropy(ctx));
    auto stream = suc::tcp_connect(host, port);
    const suc::DeviceResult result =
        mode == "update" ? agent->run_update(*stream) : agent->run_identify(*stream);
    stream->close();
    save_device_state(device_state_path, *agent);

    Emitter e(ctx.json);
    e.kv("kind", mode);
    emit_device_result(e, *agent, result);
}

void emit_error(const CliCtx& ctx, const std::string& kind, const std::string& message)
{
    if (ctx.json) {
        nlohmann::ordered_json j;
        j["error"] = message;
        j["kind"] = kind;
        std::cerr << j.dump() << std::endl;
    } else {
        std::cerr << "error (" << kind << "): " << message << std::endl;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CliCtx ctx;
    CLI::App app{"construction and verification kit for register-family stream ciphers"};
    app.require_subcommand(1);
    app.add_option("--catalog", ctx.catalog_path, "feedback catalog path")
        ->envname("SUC_CATALOG");
    app.add_option("--seed", ctx.seed_hex, "32-byte hex seed; makes every command deterministic");
    app.add_flag("--json", ctx.json, "one JSON object per output record");

    // catalog verify
    auto* cat_cmd = app.add_subcommand("catalog", "catalog operations")->fallthrough();
    cat_cmd->require_subcommand(1);
    unsigned verify_threads = 0;
    bool verify_no_cache = false;
    auto* cat_verify = cat_cmd->add_subcommand("verify", "walk every register cycle")
                           ->fallthrough();
    cat_verify->add_option("--threads", verify_threads, "worker threads (0 = all cores)");
    cat_verify->add_flag("--no-cache", verify_no_cache, "skip writing the verification cache");
    cat_verify->callback([&] { cmd_catalog_verify(ctx, verify_threads, verify_no_cache); });

    // bf profile
    auto* bf_cmd = app.add_subcommand("bf", "Boolean function reports")->fallthrough();
    bf_cmd->require_subcommand(1);
    std::string bf_builtin, bf_anf;
    int bf_vars = 0;
    auto* bf_profile = bf_cmd->add_subcommand("profile", "balance, degree, immunity profile")
                           ->fallthrough();
    bf_profile->add_option("--builtin", bf_builtin, "named builtin (F16)");
    bf_profile->add_option("--anf", bf_anf, "function in catalog ANF syntax");
    bf_profile->add_option("--vars", bf_vars, "variable count for --anf");
    bf_profile->callback([&] { cmd_bf_profile(ctx, bf_builtin, bf_anf, bf_vars); });

    // suc create | respond | info
    auto* suc_cmd = app.add_subcommand("suc", "cipher instance lifecycle")->fallthrough();
    suc_cmd->require_subcommand(1);
    std::string create_out = "instance.blob";
    auto* suc_create = suc_cmd->add_subcommand("create", "draw a fresh instance")
                           ->fallthrough();
    suc_create->add_option("--out", create_out, "blob output path");
    suc_create->callback([&] { cmd_suc_create(ctx, create_out); });

    std::string respond_blob;
    std::uint32_t respond_k = 128, respond_count = 1;
    auto* suc_respond = suc_cmd->add_subcommand("respond", "answer challenges, advancing the blob")
                            ->fallthrough();
    suc_respond->add_option("--blob", respond_blob, "instance blob path")->required();
    suc_respond->add_option("--k", respond_k, "bits per response");
    suc_respond->add_option("--count", respond_count, "responses to produce");
    suc_respond->callback([&] { cmd_suc_respond(ctx, respond_blob, respond_k, respond_count); });

    std::string info_blob;
    auto* suc_info = suc_cmd->add_subcommand("info", "describe a blob without its secrets")
                         ->fallthrough();
    suc_info->add_option("--blob", info_blob, "instance blob path")->required();
    suc_info->callback([&] { cmd_suc_info(ctx, info_blob); });

    // keystream
    std::string ks_blob;
    std::size_t ks_bits = 256;
    bool ks_advance = false;
    auto* ks_cmd = app.add_subcommand("keystream", "generate keystream from a blob")
                       ->fallthrough();
    ks_cmd->add_option("--blob", ks_blob, "instance blob path")->required();
    ks_cmd->add_option("--bits", ks_bits, "bits to generate");
    ks_cmd->add_flag("--advance", ks_advance, "persist the advanced state back to the blob");
    ks_cmd->callback([&] { cmd_keystream(ctx, ks_blob, ks_bits, ks_advance); });

    // analyze bm | correlation | parity | recover
    auto* an_cmd = app.add_subcommand("analyze", "measurement-side attacks")->fallthrough();
    an_cmd->require_subcommand(1);
    std::string bm_hex, bm_in;
    std::size_t bm_bits = 0;
    auto* an_bm = an_cmd->add_subcommand("bm", "linear complexity by LFSR synthesis")
                      ->fallthrough();
    an_bm->add_option("--hex", bm_hex, "sequence as hex, most significant bit first");
    an_bm->add_option("--bits", bm_bits, "bit count when hex padding overshoots");
    an_bm->add_option("--in", bm_in, "read the sequence from a binary file");
    an_bm->callback([&] { cmd_analyze_bm(ctx, bm_hex, bm_bits, bm_in); });

    std::string corr_blob;
    std::size_t corr_bits = 100000;
    int corr_order = 2;
    double corr_threshold = 4.0;
    auto* an_corr = an_cmd->add_subcommand("correlation", "subset bias scan")->fallthrough();
    an_corr->add_option("--blob", corr_blob, "instance blob path")->required();
    an_corr->add_option("--bits", corr_bits, "keystream sample size");
    an_corr->add_option("--max-order", corr_order, "largest subset size scanned");
    an_corr->add_option("--threshold", corr_threshold, "sigma level that flags a mask");
    an_corr->callback(
        [&] { cmd_analyze_correlation(ctx, corr_blob, corr_bits, corr_order, corr_threshold); });

    std::string par_blob;
    std::size_t par_positions = 256;
    auto* an_par = an_cmd->add_subcommand("parity", "period-shift cascade residual")
                       ->fallthrough();
    an_par->add_option("--blob", par_blob, "instance blob path")->required();
    an_par->add_option("--positions", par_positions, "residual positions to evaluate");
    an_par->callback([&] { cmd_analyze_parity(ctx, par_blob, par_positions); });

    std::string rec_blob;
    std::size_t rec_bits = 40;
    int rec_threads = 1;
    auto* an_rec = an_cmd->add_subcommand("recover", "exhaustive state recovery (toy sizes)")
                       ->fallthrough();
    an_rec->add_option("--blob", rec_blob, "instance blob path")->required();
    an_rec->add_option("--bits", rec_bits, "keystream prefix length");
    an_rec->add_option("--threads", rec_threads, "worker threads");
    an_rec->callback([&] { cmd_analyze_recover(ctx, rec_blob, rec_bits, rec_threads); });

    // bounds
    auto* bounds_cmd = app.add_subcommand("bounds", "computed security figures for the catalog")
                           ->fallthrough();
    bounds_cmd->callback([&] { cmd_bounds(ctx); });

    // ta serve | enroll | identify | update
    auto* ta_cmd = app.add_subcommand("ta", "trusted authority")->fallthrough();
    ta_cmd->require_subcommand(1);
    std::string serve_store;
    std::uint16_t serve_port = 0;
    std::uint32_t serve_sessions = 0;
    auto* ta_serve = ta_cmd->add_subcommand("serve", "accept device sessions over tcp")
                         ->fallthrough();
    ta_serve->add_option("--store", serve_store, "record store path (empty = in-memory)");
    ta_serve->add_option("--port", serve_port, "listen port (0 = pick one)");
    ta_serve->add_option("--sessions", serve_sessions, "serve this many sessions, then exit");
    ta_serve->callback([&] { cmd_ta_serve(ctx, serve_store, serve_port, serve_sessions); });

    std::string enr_store, enr_blob, enr_sn, enr_state = "device.json";
    std::uint32_t enr_t = 16, enr_k = 128;
    auto* ta_enroll = ta_cmd->add_subcommand("enroll", "pull a response pool over the trusted channel")
                          ->fallthrough();
    ta_enroll->add_option("--store", enr_store, "record store path")->required();
    ta_enroll->add_option("--blob", enr_blob, "device instance blob")->required();
    ta_enroll->add_option("--sn", enr_sn, "device serial, 32 hex chars")->required();
    ta_enroll->add_option("--t", enr_t, "pool size");
    ta_enroll->add_option("--k", enr_k, "bits per response");
    ta_enroll->add_option("--device-state", enr_state, "device lifecycle output path");
    ta_enroll->callback(
        [&] { cmd_ta_enroll(ctx, enr_store, enr_blob, enr_sn, enr_t, enr_k, enr_state); });

    std::string sess_store, sess_state;
    auto* ta_identify = ta_cmd->add_subcommand("identify", "one in-process identification")
                            ->fallthrough();
    ta_identify->add_option("--store", sess_store, "record store path")->required();
    ta_identify->add_option("--device-state", sess_state, "device lifecycle path")->required();
    ta_identify->callback([&] { cmd_ta_session(ctx, sess_store, sess_state, false); });
    auto* ta_update = ta_cmd->add_subcommand("update", "one in-process pool update")
                          ->fallthrough();
    ta_update->add_option("--store", sess_store, "record store path")->required();
    ta_update->add_option("--device-state", sess_state, "device lifecycle path")->required();
    ta_update->callback([&] { cmd_ta_session(ctx, sess_store, sess_state, true); });

    // device run
    std::string dev_state, dev_host = "127.0.0.1", dev_mode = "identify";
    std::uint16_t dev_port = 0;
    auto* dev_cmd = app.add_subcommand("device", "device agent")->fallthrough();
    dev_cmd->require_subcommand(1);
    auto* dev_run = dev_cmd->add_subcommand("run", "run one session against a tcp authority")
                        ->fallthrough();
    dev_run->add_option("--state", dev_state, "device lifecycle path")->required();
    dev_run->add_option("--host", dev_host, "authority host");
    dev_run->add_option("--port", dev_port, "authority port")->required();
    dev_run->add_option("--mode", dev_mode, "identify or update");
    dev_run->callback([&] { cmd_device_run(ctx, dev_state, dev_host, dev_port, dev_mode); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // help text
        emit_error(ctx, "usage", e.what());
        return 1;
    } catch (const suc::ProtocolError& e) {
        emit_error(ctx, "protocol", e.what());
        return 3;
    } catch (const suc::ParseError& e) {
        emit_error(ctx, "data", e.what());
        return 2;
    } catch (const suc::ValidationError& e) {
        emit_error(ctx, "data", e.what());
        return 2;
    } catch (const suc::IoError& e) {
        emit_error(ctx, "data", e.what());
        return 2;
    } catch (const std::exception& e) {
        emit_error(ctx, "internal", e.what());
        return 2;
    }
    return 0;
}
