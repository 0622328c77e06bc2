#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "suc/errors.hpp"

namespace suc {

using DeviceSn = std::array<std::uint8_t, 16>;

namespace detail {

inline std::string hex_encode(const std::uint8_t* p, std::size_t n)
{
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[p[i] >> 4]);
        out.push_back(digits[p[i] & 0xf]);
    }
    return out;
}

inline std::string hex_encode(const std::vector<std::uint8_t>& v)
{
    return hex_encode(v.data(), v.size());
}

inline std::vector<std::uint8_t> hex_decode(const std::string& hex)
{
    if (hex.size() % 2 != 0)
        throw ParseError("hex string has odd length");
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        if (c >= 'A' && c <= 'F')
            return c - 'A' + 10;
        throw ParseError("bad hex digit");
    };
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
    return out;
}

} // namespace detail

inline std::string sn_to_hex(const DeviceSn& sn)
{
    return detail::hex_encode(sn.data(), sn.size());
}

inline DeviceSn sn_from_hex(const std::string& hex)
{
    const auto bytes = detail::hex_decode(hex);
    if (bytes.size() != 16)
        throw ParseError("serial number must be 16 bytes");
    DeviceSn sn;
    std::copy(bytes.begin(), bytes.end(), sn.begin());
    return sn;
}

// One device's record: the unconsumed response pool and where we are in it.
// epoch counts pool replacements; update_auth keeps the closing key of the
// previous pool so an interrupted replacement can be re-acknowledged.
struct UirRecord {
    DeviceSn sn{};
    std::uint32_t k = 0; // bits per response
    std::vector<std::vector<std::uint8_t>> responses;
    std::uint32_t cursor = 0; // next unconsumed index
    std::uint32_t epoch = 0;
    std::vector<std::uint8_t> update_auth;

    std::uint32_t t() const { return static_cast<std::uint32_t>(responses.size()); }

    void validate() const
    {
        if (k == 0 || k % 8 != 0)
            throw ValidationError("response size must be a positive multiple of 8 bits");
        if (responses.empty())
            throw ValidationError("record holds no responses");
        for (const auto& y : responses)
            if (y.size() != k / 8)
                throw ValidationError("response length does not match k");
        if (cursor > t())
            throw ValidationError("cursor past the end of the response pool");
    }

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        j["sn"] = sn_to_hex(sn);
        j["k"] = k;
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& y : responses)
            arr.push_back(detail::hex_encode(y));
        j["responses"] = std::move(arr);
        j["cursor"] = cursor;
        j["epoch"] = epoch;
        if (!update_auth.empty())
            j["update_auth"] = detail::hex_encode(update_auth);
        return j;
    }

    static UirRecord from_json(const nlohmann::json& j)
    {
        UirRecord r;
        r.sn = sn_from_hex(j.at("sn").get<std::string>());
        r.k = j.at("k").get<std::uint32_t>();
        for (const auto& y : j.at("responses"))
            r.responses.push_back(detail::hex_decode(y.get<std::string>()));
        r.cursor = j.at("cursor").get<std::uint32_t>();
        r.epoch = j.value("epoch", std::uint32_t{0});
        if (j.contains("update_auth"))
            r.update_auth = detail::hex_decode(j.at("update_auth").get<std::string>());
        r.validate();
        return r;
    }
};

// Durable record set, one JSON object per line. Writes append; compaction
// rewrites through a temp file and an atomic rename. A torn final line (a
// crash mid-append) is ignored on load; the previous line for that record
// still holds. Thread-safe.
class UirStore {
public:
    // empty path = ephemeral in-memory store
    explicit UirStore(std::string path = {}) : path_(std::move(path))
    {
        if (path_.empty())
            return;
        std::ifstream in(path_);
        if (!in)
            return; // fresh store, file appears on first put
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const bool final_line = in.peek() == std::ifstream::traits_type::eof();
            if (line.empty())
                continue;
            try {
                const auto j = nlohmann::json::parse(line);
                UirRecord r = UirRecord::from_json(j);
                records_[r.sn] = std::move(r);
            } catch (const std::exception& e) {
                if (final_line)
                    break; // torn tail from an interrupted append
                throw ParseError("uir store line " + std::to_string(lineno) + ": " +
                                 e.what());
            }
        }
    }

    const std::string& path() const { return path_; }

    bool has(const DeviceSn& sn) const
    {
        std::lock_guard<std::mutex> lock(m_);
        return records_.count(sn) != 0;
    }

    UirRecord get(const DeviceSn& sn) const
    {
        std::lock_guard<std::mutex> lock(m_);
        const auto it = records_.find(sn);
        if (it == records_.end())
            throw ValidationError("no record for serial " + sn_to_hex(sn));
        return it->second;
    }

    std::size_t size() const
    {
        std::lock_guard<std::mutex> lock(m_);
        return records_.size();
    }

    std::vector<DeviceSn> serials() const
    {
        std::lock_guard<std::mutex> lock(m_);
        std::vector<DeviceSn> out;
        for (const auto& [sn, r] : records_) {
            (void)r;
            out.push_back(sn);
        }
        return out;
    }

    // Upsert by appending one line; crash-safe because load ignores a torn
    // tail and takes the last complete line per serial.
    void put(const UirRecord& record)
    {
        record.validate();
        std::lock_guard<std::mutex> lock(m_);
        records_[record.sn] = record;
        if (path_.empty())
            return;
        std::FILE* f = std::fopen(path_.c_str(), "ab");
        if (f == nullptr)
            throw IoError("cannot append to uir store: " + path_);
        const std::string line = record.to_json().dump() + "\n";
        const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() &&
                        std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
        std::fclose(f);
        if (!ok)
            throw IoError("short write to uir store: " + path_);
    }

    // Atomic whole-store rewrite: temp file, fsync, rename over the original.
    void compact()
    {
        std::lock_guard<std::mutex> lock(m_);
        if (path_.empty())
            return;
        const std::string tmp = path_ + ".tmp";
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (f == nullptr)
            throw IoError("cannot write temp store: " + tmp);
        bool ok = true;
        for (const auto& [sn, r] : records_) {
            (void)sn;
            const std::string line = r.to_json().dump() + "\n";
            ok = ok && std::fwrite(line.data(), 1, line.size(), f) == line.size();
        }
        ok = ok && std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
        std::fclose(f);
        if (!ok) {
            std::remove(tmp.c_str());
            throw IoError("short write to temp store: " + tmp);
        }
        if (std::rename(tmp.c_str(), path_.c_str()) != 0) {
            std::remove(tmp.c_str());
            throw IoError("cannot rename temp store over " + path_);
        }
    }

private:
    std::string path_;
    mutable std::mutex m_;
    std::map<DeviceSn, UirRecord> records_;
};

} // namespace suc
