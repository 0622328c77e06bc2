#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "suc/errors.hpp"

namespace suc {

enum class FrameType : std::uint8_t {
    hello = 0x01,
    challenge = 0x02,
    response = 0x03,
    cmd = 0x04,
    resp_data = 0x05,
    update_payload = 0x06,
    error = 0x7F,
};

inline bool frame_type_known(std::uint8_t t)
{
    switch (static_cast<FrameType>(t)) {
    case FrameType::hello:
    case FrameType::challenge:
    case FrameType::response:
    case FrameType::cmd:
    case FrameType::resp_data:
    case FrameType::update_payload:
    case FrameType::error:
        return true;
    }
    return false;
}

inline const char* to_string(FrameType t)
{
    switch (t) {
    case FrameType::hello: return "hello";
    case FrameType::challenge: return "challenge";
    case FrameType::response: return "response";
    case FrameType::cmd: return "cmd";
    case FrameType::resp_data: return "resp_data";
    case FrameType::update_payload: return "update_payload";
    case FrameType::error: return "error";
    }
    return "?";
}

struct Frame {
    FrameType type = FrameType::error;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;
};

// Frames cap at 1 MiB of payload; every legitimate message is far smaller,
// so larger lengths are treated as stream corruption.
constexpr std::size_t kMaxFramePayload = std::size_t{1} << 20;

// [payload length, 4 bytes big-endian][type, 1 byte][payload]
inline std::vector<std::uint8_t> frame_encode(const Frame& f)
{
    if (f.payload.size() > kMaxFramePayload)
        throw ValidationError("frame payload exceeds the 1 MiB cap");
    std::vector<std::uint8_t> out;
    out.reserve(5 + f.payload.size());
    const auto len = static_cast<std::uint32_t>(f.payload.size());
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>((len >> (24 - 8 * i)) & 0xff));
    out.push_back(static_cast<std::uint8_t>(f.type));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

// Incremental decoder: feed arbitrary byte chunks, poll complete frames.
// Malformed input throws ParseError and poisons the decoder, since nothing
// after a framing error can be trusted.
class FrameDecoder {
public:
    void feed(const std::uint8_t* data, std::size_t n)
    {
        if (poisoned_)
            throw ParseError("frame stream already failed");
        buf_.insert(buf_.end(), data, data + n);
    }

    void feed(const std::vector<std::uint8_t>& data) { feed(data.data(), data.size()); }

    std::optional<Frame> next()
    {
        if (poisoned_)
            throw ParseError("frame stream already failed");
        if (buf_.size() < 5)
            return std::nullopt;
        std::uint32_t len = 0;
        for (int i = 0; i < 4; ++i)
            len = (len << 8) | buf_[static_cast<std::size_t>(i)];
        if (len > kMaxFramePayload) {
            poisoned_ = true;
            throw ParseError("frame length " + std::to_string(len) + " exceeds the cap");
        }
        if (!frame_type_known(buf_[4])) {
            poisoned_ = true;
            throw ParseError("unknown frame type 0x" + hex_byte(buf_[4]));
        }
        if (buf_.size() < std::size_t{5} + len)
            return std::nullopt;
        Frame f;
        f.type = static_cast<FrameType>(buf_[4]);
        f.payload.assign(buf_.begin() + 5, buf_.begin() + 5 + len);
        buf_.erase(buf_.begin(), buf_.begin() + 5 + len);
        return f;
    }

    std::size_t buffered() const { return buf_.size(); }
    bool poisoned() const { return poisoned_; }

private:
    static std::string hex_byte(std::uint8_t b)
    {
        static const char* digits = "0123456789abcdef";
        return {digits[b >> 4], digits[b & 0xf]};
    }

    std::deque<std::uint8_t> buf_;
    bool poisoned_ = false;
};

// One-shot convenience over the incremental decoder: exactly one frame,
// nothing left over.
inline Frame frame_decode(const std::vector<std::uint8_t>& bytes)
{
    FrameDecoder d;
    d.feed(bytes);
    auto f = d.next();
    if (!f)
        throw ParseError("truncated frame");
    if (d.buffered() != 0)
        throw ParseError("trailing bytes after frame");
    return *f;
}

} // namespace suc
