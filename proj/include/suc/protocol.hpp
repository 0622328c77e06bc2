#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <zlib.h>

#include "suc/catalog.hpp"
#include "suc/eref.hpp"
#include "suc/errors.hpp"
#include "suc/genie.hpp"
#include "suc/ksg.hpp"
#include "suc/transport.hpp"
#include "suc/uir.hpp"
#include "suc/wire.hpp"

namespace suc {

enum class ErrorCode : std::uint8_t {
    unknown_serial = 1,
    replay = 2,
    exhausted = 3,
    auth_failed = 4,
    epoch_mismatch = 5,
    bad_request = 6,
    not_enrolled = 7,
};

namespace detail {

inline bool ct_equal(const std::uint8_t* a, const std::uint8_t* b, std::size_t n)
{
    volatile std::uint8_t acc = 0;
    for (std::size_t i = 0; i < n; ++i)
        acc = acc | static_cast<std::uint8_t>(a[i] ^ b[i]);
    return acc == 0;
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((v >> (24 - 8 * i)) & 0xff));
}

inline std::uint32_t get_be32(const std::uint8_t* p)
{
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

inline std::array<std::uint8_t, 8> nonce_bytes(std::uint64_t v)
{
    std::array<std::uint8_t, 8> out;
    for (int i = 0; i < 8; ++i)
        out[i] = static_cast<std::uint8_t>((v >> (56 - 8 * i)) & 0xff);
    return out;
}

inline std::uint32_t batch_crc(const std::vector<std::uint8_t>& data)
{
    return static_cast<std::uint32_t>(
        ::crc32(::crc32(0L, nullptr, 0), data.data(), static_cast<uInt>(data.size())));
}

} // namespace detail

// Hello: device -> authority. Opens an identification or update session.
struct HelloMsg {
    DeviceSn sn{};
    std::uint32_t cursor_echo = 0; // device's next unconsumed index
    std::uint8_t mode = 0;         // 0 identify, 1 update
    std::uint32_t epoch = 0;

    Frame to_frame() const
    {
        Frame f{FrameType::hello, {}};
        f.payload.assign(sn.begin(), sn.end());
        detail::put_be32(f.payload, cursor_echo);
        f.payload.push_back(mode);
        detail::put_be32(f.payload, epoch);
        return f;
    }

    static HelloMsg parse(const Frame& f)
    {
        if (f.type != FrameType::hello || f.payload.size() != 25)
            throw ProtocolError("malformed hello");
        HelloMsg m;
        std::copy(f.payload.begin(), f.payload.begin() + 16, m.sn.begin());
        m.cursor_echo = detail::get_be32(f.payload.data() + 16);
        m.mode = f.payload[20];
        if (m.mode > 1)
            throw ProtocolError("unknown hello mode");
        m.epoch = detail::get_be32(f.payload.data() + 21);
        return m;
    }
};

// Challenge: authority -> device. Names the response index and proves key
// knowledge by sending the encrypted nonce next to its plaintext. The
// plaintext-beside-ciphertext framing is a deliberate known-plaintext
// exposure inherited from the scheme; it is documented, not repaired.
struct ChallengeMsg {
    std::uint32_t index = 0;
    std::array<std::uint8_t, 8> enc_nonce{};
    std::array<std::uint8_t, 8> nonce{};

    Frame to_frame() const
    {
        Frame f{FrameType::challenge, {}};
        detail::put_be32(f.payload, index);
        f.payload.insert(f.payload.end(), enc_nonce.begin(), enc_nonce.end());
        f.payload.insert(f.payload.end(), nonce.begin(), nonce.end());
        return f;
    }

    static ChallengeMsg parse(const Frame& f)
    {
        if (f.type != FrameType::challenge || f.payload.size() != 20)
            throw ProtocolError("malformed challenge");
        ChallengeMsg m;
        m.index = detail::get_be32(f.payload.data());
        std::copy(f.payload.begin() + 4, f.payload.begin() + 12, m.enc_nonce.begin());
        std::copy(f.payload.begin() + 12, f.payload.begin() + 20, m.nonce.begin());
        return m;
    }
};

// Response: device -> authority. Mirrors the challenge construction with the
// device's own nonce under the same response key.
struct ResponseMsg {
    std::array<std::uint8_t, 8> enc_nonce{};
    std::array<std::uint8_t, 8> nonce{};

    Frame to_frame() const
    {
        Frame f{FrameType::response, {}};
        f.payload.assign(enc_nonce.begin(), enc_nonce.end());
        f.payload.insert(f.payload.end(), nonce.begin(), nonce.end());
        return f;
    }

    static ResponseMsg parse(const Frame& f)
    {
        if (f.type != FrameType::response || f.payload.size() != 16)
            throw ProtocolError("malformed response");
        ResponseMsg m;
        std::copy(f.payload.begin(), f.payload.begin() + 8, m.enc_nonce.begin());
        std::copy(f.payload.begin() + 8, f.payload.end(), m.nonce.begin());
        return m;
    }
};

struct ErrorMsg {
    ErrorCode code = ErrorCode::bad_request;
    std::string message;

    Frame to_frame() const
    {
        Frame f{FrameType::error, {}};
        f.payload.push_back(static_cast<std::uint8_t>(code));
        f.payload.insert(f.payload.end(), message.begin(), message.end());
        return f;
    }

    static ErrorMsg parse(const Frame& f)
    {
        if (f.type != FrameType::error || f.payload.empty())
            throw ProtocolError("malformed error frame");
        ErrorMsg m;
        m.code = static_cast<ErrorCode>(f.payload[0]);
        m.message.assign(f.payload.begin() + 1, f.payload.end());
        return m;
    }
};

struct SessionAuditEntry {
    enum class Purpose { enroll, identify, update } purpose = Purpose::identify;
    DeviceSn sn{};
    std::uint32_t key_epoch = 0; // epoch the session key belongs to
    std::uint32_t key_index = 0; // which Y_i keyed the session
    bool completed = false;
    bool healed_rerun = false; // re-acknowledged interrupted update, same key
    std::string note;
};

struct SessionOutcome {
    enum class Kind { identify, update, malformed } kind = Kind::malformed;
    bool completed = false;
    DeviceSn sn{};
    std::uint32_t index = 0;
    std::string error;
};

// The authority side: owns the record store, serves device-initiated
// sessions, and runs enrollment over a pre-deployment trusted channel.
// Concurrent sessions are fine; each serial's record is exclusively locked
// for its session's duration.
class TrustedAuthority {
public:
    TrustedAuthority(UirStore& store, EntropySource entropy,
                     const CipherE& cipher = default_cipher())
        : store_(store), entropy_(std::move(entropy)), cipher_(cipher)
    {
    }

    static const CipherE& default_cipher()
    {
        static const ErefCipher c;
        return c;
    }

    // crash/fault injection and tracing for tests; called at named points
    void set_trace_hook(std::function<void(const std::string&)> hook)
    {
        trace_hook_ = std::move(hook);
    }

    // Pull t responses of k bits each out of a factory-fresh device.
    UirRecord enroll(Stream& stream, const DeviceSn& sn, std::uint32_t t, std::uint32_t k)
    {
        if (t == 0)
            throw ValidationError("enrollment needs at least one response");
        if (k == 0 || k % 8 != 0)
            throw ValidationError("response size must be a positive multiple of 8 bits");
        const auto lock = lock_serial(sn);
        if (store_.has(sn))
            throw ValidationError("serial already enrolled: " + sn_to_hex(sn));

        FrameChannel ch(stream);
        Frame cmd{FrameType::cmd, {std::uint8_t{0x01}}};
        detail::put_be32(cmd.payload, t);
        detail::put_be32(cmd.payload, k);
        ch.send(cmd);

        const Frame reply = ch.recv_required();
        if (reply.type == FrameType::error) {
            const auto err = ErrorMsg::parse(reply);
            throw ProtocolError("device refused enrollment: " + err.message);
        }
        if (reply.type != FrameType::resp_data)
            throw ProtocolError("expected response data during enrollment");
        const std::size_t bytes_per = k / 8;
        if (reply.payload.size() != std::size_t{t} * bytes_per)
            throw ProtocolError("enrollment data has the wrong length");

        UirRecord rec;
        rec.sn = sn;
        rec.k = k;
        rec.cursor = 0;
        rec.epoch = 0;
        for (std::uint32_t i = 0; i < t; ++i)
            rec.responses.emplace_back(reply.payload.begin() + i * bytes_per,
                                       reply.payload.begin() + (i + 1) * bytes_per);
        trace("enroll.pre_persist");
        store_.put(rec);
        trace("enroll.post_persist");
        audit_push({SessionAuditEntry::Purpose::enroll, sn, 0, 0, true, false, ""});
        return rec;
    }

    // Serve exactly one device-initiated session (identify or update).
    SessionOutcome serve_session(Stream& stream)
    {
        FrameChannel ch(stream);
        SessionOutcome out;
        try {
            const auto hello = HelloMsg::parse(ch.recv_required());
            out.sn = hello.sn;
            if (hello.mode == 0) {
                out.kind = SessionOutcome::Kind::identify;
                serve_identify(ch, hello, out);
            } else {
                out.kind = SessionOutcome::Kind::update;
                serve_update(ch, hello, out);
            }
        } catch (const ProtocolError& e) {
            out.error = e.what();
            try_send_error(ch, ErrorCode::bad_request, e.what());
        } catch (const ParseError& e) {
            out.error = e.what();
        } catch (const IoError& e) {
            out.error = e.what();
        }
        return out;
    }

    std::vector<SessionAuditEntry> audit() const
    {
        std::lock_guard<std::mutex> lock(audit_m_);
        return audit_;
    }

    // Completed sessions that shared a key with an earlier completed session.
    // Healed re-runs of an interrupted update retransmit the same logical
    // session and are exempt.
    std::vector<SessionAuditEntry> single_use_violations() const
    {
        std::lock_guard<std::mutex> lock(audit_m_);
        std::vector<SessionAuditEntry> bad;
        std::map<std::tuple<DeviceSn, std::uint32_t, std::uint32_t>, int> seen;
        for (const auto& e : audit_) {
            if (!e.completed || e.purpose == SessionAuditEntry::Purpose::enroll ||
                e.healed_rerun)
                continue;
            if (++seen[{e.sn, e.key_epoch, e.key_index}] > 1)
                bad.push_back(e);
        }
        return bad;
    }

private:
    void serve_identify(FrameChannel& ch, const HelloMsg& hello, SessionOutcome& out)
    {
        const auto lock = lock_serial(hello.sn);
        trace("identify.lookup");
        if (!store_.has(hello.sn)) {
            out.error = "unknown serial";
            try_send_error(ch, ErrorCode::unknown_serial, out.error);
            return;
        }
        UirRecord rec = store_.get(hello.sn);
        if (hello.epoch != rec.epoch) {
            out.error = "epoch mismatch, run update";
            try_send_error(ch, ErrorCode::epoch_mismatch, out.error);
            return;
        }
        if (hello.cursor_echo < rec.cursor) {
            out.error = "stale cursor echo (replay?)";
            try_send_error(ch, ErrorCode::replay, out.error);
            return;
        }
        if (hello.cursor_echo >= rec.t()) {
            out.error = "responses exhausted, run update";
            try_send_error(ch, ErrorCode::exhausted, out.error);
            return;
        }

        // the echo may sit ahead of our cursor if our ack never landed;
        // adopting it re-synchronizes the pair
        const std::uint32_t index = hello.cursor_echo;
        out.index = index;
        const auto& key = rec.responses[index];

        ChallengeMsg challenge;
        challenge.index = index;
        challenge.nonce = detail::nonce_bytes(draw_nonce());
        challenge.enc_nonce = cipher_.encrypt(key, challenge.nonce);
        ch.send(challenge.to_frame());
        trace("identify.challenge_sent");

        const Frame reply = ch.recv_required();
        if (reply.type == FrameType::error) {
            out.error = "device aborted: " + ErrorMsg::parse(reply).message;
            return;
        }
        const auto response = ResponseMsg::parse(reply);
        const auto expect = cipher_.decrypt(key, response.enc_nonce);
        if (!detail::ct_equal(expect.data(), response.nonce.data(), 8)) {
            out.error = "device response failed verification";
            audit_push({SessionAuditEntry::Purpose::identify, hello.sn, rec.epoch, index,
                        false, false, out.error});
            return;
        }
        trace("identify.verified");

        rec.cursor = index + 1;
        store_.put(rec);
        out.completed = true;
        audit_push({SessionAuditEntry::Purpose::identify, hello.sn, rec.epoch, index,
                    true, false, ""});
    }

    void serve_update(FrameChannel& ch, const HelloMsg& hello, SessionOutcome& out)
    {
        const auto lock = lock_serial(hello.sn);
        trace("update.lookup");
        if (!store_.has(hello.sn)) {
            out.error = "unknown serial";
            try_send_error(ch, ErrorCode::unknown_serial, out.error);
            return;
        }
        UirRecord rec = store_.get(hello.sn);

        const bool healing =
            hello.epoch + 1 == rec.epoch && !rec.update_auth.empty();
        if (!healing && hello.epoch != rec.epoch) {
            out.error = "epoch mismatch";
            try_send_error(ch, ErrorCode::epoch_mismatch, out.error);
            return;
        }
        const std::vector<std::uint8_t>& key =
            healing ? rec.update_auth : rec.responses.back();
        const std::uint32_t key_epoch = healing ? hello.epoch : rec.epoch;
        const std::uint32_t last = rec.t() - 1;
        out.index = last;

        ChallengeMsg challenge;
        challenge.index = last;
        challenge.nonce = detail::nonce_bytes(draw_nonce());
        challenge.enc_nonce = cipher_.encrypt(key, challenge.nonce);
        ch.send(challenge.to_frame());
        trace("update.challenge_sent");

        const Frame reply = ch.recv_required();
        if (reply.type == FrameType::error) {
            out.error = "device aborted: " + ErrorMsg::parse(reply).message;
            return;
        }
        if (reply.type != FrameType::update_payload)
            throw ProtocolError("expected an update payload");
        const std::size_t batch_bytes = std::size_t{rec.t()} * (rec.k / 8);
        if (reply.payload.size() != batch_bytes + 4) {
            out.error = "update payload has the wrong length";
            try_send_error(ch, ErrorCode::bad_request, out.error);
            return;
        }

        const auto plain = ctr_crypt(cipher_, key, reply.payload);
        std::vector<std::uint8_t> batch(plain.begin(), plain.begin() + batch_bytes);
        const std::uint32_t declared = detail::get_be32(plain.data() + batch_bytes);
        trace("update.decrypted");
        if (declared != detail::batch_crc(batch)) {
            out.error = "update payload failed verification";
            audit_push({SessionAuditEntry::Purpose::update, hello.sn, key_epoch, last,
                        false, healing, out.error});
            try_send_error(ch, ErrorCode::auth_failed, out.error);
            return;
        }

        const std::size_t per = rec.k / 8;
        std::vector<std::vector<std::uint8_t>> fresh;
        for (std::uint32_t i = 0; i < rec.t(); ++i)
            fresh.emplace_back(batch.begin() + i * per, batch.begin() + (i + 1) * per);

        if (healing) {
            // the previous run already replaced the record; the device just
            // never heard the ack. The batch is deterministic, so it must
            // match what we persisted; then re-acking is safe.
            if (fresh != rec.responses) {
                out.error = "healing batch does not match the stored pool";
                audit_push({SessionAuditEntry::Purpose::update, hello.sn, key_epoch,
                            last, false, true, out.error});
                try_send_error(ch, ErrorCode::auth_failed, out.error);
                return;
            }
            trace("update.post_persist");
            ch.send(Frame{FrameType::cmd, {}});
            out.completed = true;
            audit_push({SessionAuditEntry::Purpose::update, hello.sn, key_epoch, last,
                        true, true, "re-acknowledged"});
            return;
        }

        UirRecord next;
        next.sn = rec.sn;
        next.k = rec.k;
        next.responses = std::move(fresh);
        next.cursor = 0;
        next.epoch = rec.epoch + 1;
        next.update_auth = rec.responses.back();
        trace("update.pre_persist");
        store_.put(next);
        store_.compact(); // record replacement goes through temp + rename
        trace("update.post_persist");
        ch.send(Frame{FrameType::cmd, {}});
        out.completed = true;
        audit_push({SessionAuditEntry::Purpose::update, hello.sn, key_epoch, last, true,
                    false, ""});
    }

    std::uint64_t draw_nonce()
    {
        std::lock_guard<std::mutex> lock(entropy_m_);
        return entropy_.next_u64();
    }

    void trace(const std::string& point)
    {
        if (trace_hook_)
            trace_hook_(point);
    }

    void try_send_error(FrameChannel& ch, ErrorCode code, const std::string& message)
    {
        try {
            ch.send(ErrorMsg{code, message}.to_frame());
        } catch (const IoError&) {
            // peer is gone; the outcome already records the failure
        }
    }

    class SerialLock {
    public:
        explicit SerialLock(std::mutex& m) : lock_(m) {}

    private:
        std::lock_guard<std::mutex> lock_;
    };

    SerialLock lock_serial(const DeviceSn& sn)
    {
        std::mutex* m;
        {
            std::lock_guard<std::mutex> lock(locks_m_);
            auto& slot = locks_[sn];
            if (!slot)
                slot = std::make_unique<std::mutex>();
            m = slot.get();
        }
        return SerialLock(*m);
    }

    void audit_push(SessionAuditEntry e)
    {
        std::lock_guard<std::mutex> lock(audit_m_);
        audit_.push_back(std::move(e));
    }

    UirStore& store_;
    EntropySource entropy_;
    const CipherE& cipher_;
    std::function<void(const std::string&)> trace_hook_;
    std::mutex entropy_m_;
    std::mutex locks_m_;
    std::map<DeviceSn, std::unique_ptr<std::mutex>> locks_;
    mutable std::mutex audit_m_;
    std::vector<SessionAuditEntry> audit_;
};

struct DeviceResult {
    bool accepted = false;
    std::uint32_t index = 0;
    std::string error;
};

// The device side: owns its cipher instance and answers sessions. The
// instance state advances permanently only after the authority's nonce
// verifies; everything else runs on throwaway working copies.
class DeviceAgent {
public:
    DeviceAgent(DeviceSn sn, SucInstance instance, const Catalog& catalog,
                EntropySource entropy, const CipherE& cipher = TrustedAuthority::default_cipher())
        : sn_(sn),
          instance_(std::move(instance)),
          catalog_(catalog),
          entropy_(std::move(entropy)),
          cipher_(cipher),
          combiner_(instance_.config().combiner)
    {
    }

    // Resume a previously enrolled device from persisted lifecycle fields.
    DeviceAgent(DeviceSn sn, SucInstance instance, const Catalog& catalog,
                EntropySource entropy, std::uint32_t t, std::uint32_t k,
                std::uint32_t cursor, std::uint32_t epoch,
                std::vector<std::uint8_t> prev_blob,
                const CipherE& cipher = TrustedAuthority::default_cipher())
        : DeviceAgent(sn, std::move(instance), catalog, std::move(entropy), cipher)
    {
        if (t == 0 || k == 0 || k % 8 != 0)
            throw ValidationError("bad persisted enrollment parameters");
        if (cursor > t)
            throw ValidationError("persisted cursor runs past the pool");
        if (cursor > 0 && prev_blob.empty())
            throw ValidationError("consumed responses need a saved previous state");
        if (!prev_blob.empty())
            (void)import_blob(prev_blob, catalog, combiner_); // must at least parse
        t_ = t;
        k_ = k;
        cursor_ = cursor;
        epoch_ = epoch;
        prev_blob_ = std::move(prev_blob);
    }

    ~DeviceAgent() { scrub_blob(prev_blob_); }
    DeviceAgent(const DeviceAgent&) = delete;
    DeviceAgent& operator=(const DeviceAgent&) = delete;

    const DeviceSn& sn() const { return sn_; }
    std::uint32_t cursor() const { return cursor_; }
    std::uint32_t epoch() const { return epoch_; }
    bool enrolled() const { return t_ != 0; }
    std::uint32_t t() const { return t_; }
    std::uint32_t k() const { return k_; }
    const SucInstance& instance() const { return instance_; }
    const std::vector<std::uint8_t>& prev_blob() const { return prev_blob_; }

    // Answer one enrollment command from the trusted channel. The batch is
    // produced on a working copy: the device keeps its generator, never the
    // responses.
    void serve_enroll(Stream& stream)
    {
        FrameChannel ch(stream);
        const Frame cmd = ch.recv_required();
        if (cmd.type != FrameType::cmd || cmd.payload.size() != 9 ||
            cmd.payload[0] != 0x01) {
            ch.send(ErrorMsg{ErrorCode::bad_request, "expected an enroll command"}
                        .to_frame());
            throw ProtocolError("expected an enroll command");
        }
        const std::uint32_t t = detail::get_be32(cmd.payload.data() + 1);
        const std::uint32_t k = detail::get_be32(cmd.payload.data() + 5);
        if (t == 0 || k == 0 || k % 8 != 0) {
            ch.send(ErrorMsg{ErrorCode::bad_request, "bad enrollment parameters"}
                        .to_frame());
            throw ProtocolError("bad enrollment parameters");
        }
        if (cursor_ != 0 || epoch_ != 0 || enrolled()) {
            ch.send(ErrorMsg{ErrorCode::bad_request, "device is already enrolled"}
                        .to_frame());
            throw ProtocolError("device is already enrolled");
        }

        Ksg working(instance_.config(), instance_.current_states());
        const BitVec batch = working.next_bits(std::size_t{t} * k);
        Frame data{FrameType::resp_data, batch.to_bytes()};
        ch.send(data);
        t_ = t;
        k_ = k;
    }

    // One identification session. Three flights: hello out, challenge in,
    // response out. The device commits (consumes Y_i) the moment the
    // authority's nonce checks out; failures before that restore S_{i-1}.
    DeviceResult run_identify(Stream& stream)
    {
        require_enrolled();
        if (cursor_ >= t_)
            return {false, cursor_, "responses exhausted, run update"};
        FrameChannel ch(stream);

        std::vector<std::uint8_t> snapshot = export_blob(instance_);
        DeviceResult result{false, cursor_, ""};
        try {
            ch.send(HelloMsg{sn_, cursor_, 0, epoch_}.to_frame());
            const Frame reply = ch.recv_required();
            if (reply.type == FrameType::error) {
                result.error = "authority refused: " + ErrorMsg::parse(reply).message;
                scrub_blob(snapshot);
                return result;
            }
            const auto challenge = ChallengeMsg::parse(reply);
            if (challenge.index != cursor_)
                throw ProtocolError("challenge names a different index");

            const std::vector<std::uint8_t> key = instance_.respond(k_).to_bytes();
            const auto expect = cipher_.decrypt(key, challenge.enc_nonce);
            if (!detail::ct_equal(expect.data(), challenge.nonce.data(), 8)) {
                restore(snapshot);
                result.error = "authority failed verification";
                return result;
            }

            // verified: consume Y_i for good, then answer
            scrub_blob(prev_blob_);
            prev_blob_ = std::move(snapshot);
            ++cursor_;
            result.accepted = true;

            ResponseMsg response;
            response.nonce = detail::nonce_bytes(entropy_.next_u64());
            response.enc_nonce = cipher_.encrypt(key, response.nonce);
            ch.send(response.to_frame());
            return result;
        } catch (const std::exception& e) {
            if (!result.accepted) {
                restore(snapshot);
                result.error = e.what();
                return result;
            }
            // the commit stands even if the final send died
            result.error = e.what();
            return result;
        }
    }

    // One update session: re-key the authority with t fresh responses under
    // the closing key Y_{t-1}. Nothing persists on the device until the
    // authority acknowledges.
    DeviceResult run_update(Stream& stream)
    {
        require_enrolled();
        DeviceResult result{false, t_ - 1, ""};
        try {
            return run_update_inner(stream, result);
        } catch (const std::exception& e) {
            // nothing persisted; the session just did not happen
            result.error = e.what();
            return result;
        }
    }

private:
    DeviceResult run_update_inner(Stream& stream, DeviceResult& result)
    {
        FrameChannel ch(stream);
        ch.send(HelloMsg{sn_, cursor_, 1, epoch_}.to_frame());

        const Frame reply = ch.recv_required();
        if (reply.type == FrameType::error) {
            result.error = "authority refused: " + ErrorMsg::parse(reply).message;
            return result;
        }
        const auto challenge = ChallengeMsg::parse(reply);
        if (challenge.index != t_ - 1)
            throw ProtocolError("update challenge must name the last index");

        // derive the closing key and the follow-on batch on working copies
        std::vector<std::uint32_t> before_last; // S_{t-1}
        std::unique_ptr<Ksg> ksg;
        if (cursor_ == t_) {
            // the last response was consumed; regenerate it from S_{i-1}
            SucInstance prev = import_blob(prev_blob_, catalog_, combiner_);
            before_last = prev.current_states();
            ksg = std::make_unique<Ksg>(instance_.config(), before_last);
        } else {
            ksg = std::make_unique<Ksg>(instance_.config(), instance_.current_states());
            if (t_ - 1 > cursor_)
                (void)ksg->next_bits(std::size_t{t_ - 1 - cursor_} * k_);
            before_last = ksg->states();
        }
        const std::vector<std::uint8_t> auth_key = ksg->next_bits(k_).to_bytes();
        const std::vector<std::uint32_t> after_last = ksg->states(); // S_t

        const auto expect = cipher_.decrypt(auth_key, challenge.enc_nonce);
        if (!detail::ct_equal(expect.data(), challenge.nonce.data(), 8)) {
            result.error = "authority failed verification";
            return result;
        }

        std::vector<std::uint8_t> batch =
            ksg->next_bits(std::size_t{t_} * k_).to_bytes();
        std::vector<std::uint8_t> plain = batch;
        detail::put_be32(plain, detail::batch_crc(batch));
        ch.send(Frame{FrameType::update_payload, ctr_crypt(cipher_, auth_key, plain)});

        const Frame ack = ch.recv_required();
        if (ack.type == FrameType::error) {
            result.error = "authority refused: " + ErrorMsg::parse(ack).message;
            return result;
        }
        if (ack.type != FrameType::cmd || !ack.payload.empty())
            throw ProtocolError("expected an empty acknowledgement");

        // acknowledged: move to the fresh pool. The generator sits at S_t so
        // the next identification regenerates the new Y_0.
        SucInstance committed(catalog_, instance_.picks(), after_last,
                              instance_.cursor(), combiner_);
        instance_ = std::move(committed);
        SucInstance prev_point(catalog_, instance_.picks(), before_last,
                               instance_.cursor(), combiner_);
        scrub_blob(prev_blob_);
        prev_blob_ = export_blob(prev_point);
        cursor_ = 0;
        ++epoch_;
        result.accepted = true;
        return result;
    }

    void require_enrolled() const
    {
        if (!enrolled())
            throw ValidationError("device has not been enrolled");
    }

    void restore(std::vector<std::uint8_t>& snapshot)
    {
        instance_ = import_blob(snapshot, catalog_, combiner_);
        scrub_blob(snapshot);
    }

    static void scrub_blob(std::vector<std::uint8_t>& blob)
    {
        if (!blob.empty())
            detail::scrub_bytes(blob.data(), blob.size());
        blob.clear();
    }

    DeviceSn sn_;
    SucInstance instance_;
    const Catalog& catalog_;
    EntropySource entropy_;
    const CipherE& cipher_;
    AnfFunction combiner_;
    std::vector<std::uint8_t> prev_blob_;
    std::uint32_t cursor_ = 0;
    std::uint32_t epoch_ = 0;
    std::uint32_t t_ = 0;
    std::uint32_t k_ = 0;
};

} // namespace suc
