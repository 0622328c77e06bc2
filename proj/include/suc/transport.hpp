#pragma once

#include <cerrno>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "suc/errors.hpp"
#include "suc/wire.hpp"

namespace suc {

// Ordered reliable byte stream, the only transport contract the protocol
// needs. read blocks for at least one byte and returns 0 only at EOF.
class Stream {
public:
    virtual ~Stream() = default;
    virtual void write(const std::uint8_t* data, std::size_t n) = 0;
    virtual std::size_t read(std::uint8_t* data, std::size_t n) = 0;
    virtual void close() = 0;
};

namespace detail {

struct PipeDir {
    std::mutex m;
    std::condition_variable cv;
    std::deque<std::uint8_t> bytes;
    bool closed = false;

    void push(const std::uint8_t* data, std::size_t n)
    {
        {
            std::lock_guard<std::mutex> lock(m);
            if (closed)
                throw IoError("peer endpoint is closed");
            bytes.insert(bytes.end(), data, data + n);
        }
        cv.notify_all();
    }

    std::size_t pull(std::uint8_t* data, std::size_t n)
    {
        std::unique_lock<std::mutex> lock(m);
        cv.wait(lock, [&] { return !bytes.empty() || closed; });
        if (bytes.empty())
            return 0; // closed and drained
        const std::size_t take = n < bytes.size() ? n : bytes.size();
        for (std::size_t i = 0; i < take; ++i) {
            data[i] = bytes.front();
            bytes.pop_front();
        }
        return take;
    }

    void shut()
    {
        {
            std::lock_guard<std::mutex> lock(m);
            closed = true;
        }
        cv.notify_all();
    }
};

struct PipeCore {
    PipeDir a_to_b;
    PipeDir b_to_a;
};

class PipeStream final : public Stream {
public:
    PipeStream(std::shared_ptr<PipeCore> core, bool is_a)
        : core_(std::move(core)), is_a_(is_a)
    {
    }

    ~PipeStream() override { close(); }

    void write(const std::uint8_t* data, std::size_t n) override
    {
        (is_a_ ? core_->a_to_b : core_->b_to_a).push(data, n);
    }

    std::size_t read(std::uint8_t* data, std::size_t n) override
    {
        return (is_a_ ? core_->b_to_a : core_->a_to_b).pull(data, n);
    }

    void close() override
    {
        // wake both directions so neither side blocks forever
        core_->a_to_b.shut();
        core_->b_to_a.shut();
    }

private:
    std::shared_ptr<PipeCore> core_;
    bool is_a_;
};

} // namespace detail

// Connected pair of in-process streams for tests and same-process wiring.
inline std::pair<std::unique_ptr<Stream>, std::unique_ptr<Stream>> stream_pair()
{
    auto core = std::make_shared<detail::PipeCore>();
    return {std::make_unique<detail::PipeStream>(core, true),
            std::make_unique<detail::PipeStream>(core, false)};
}

namespace detail {

class FdStream final : public Stream {
public:
    explicit FdStream(int fd) : fd_(fd) {}
    ~FdStream() override { close(); }

    void write(const std::uint8_t* data, std::size_t n) override
    {
        while (n > 0) {
            const ssize_t sent = ::send(fd_, data, n, MSG_NOSIGNAL);
            if (sent < 0) {
                if (errno == EINTR)
                    continue;
                throw IoError("socket send failed: " + std::string(std::strerror(errno)));
            }
            data += sent;
            n -= static_cast<std::size_t>(sent);
        }
    }

    std::size_t read(std::uint8_t* data, std::size_t n) override
    {
        for (;;) {
            const ssize_t got = ::recv(fd_, data, n, 0);
            if (got >= 0)
                return static_cast<std::size_t>(got);
            if (errno == EINTR)
                continue;
            throw IoError("socket recv failed: " + std::string(std::strerror(errno)));
        }
    }

    void close() override
    {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_;
};

} // namespace detail

// Loopback TCP listener; port 0 picks a free port, readable via port().
class TcpListener {
public:
    explicit TcpListener(std::uint16_t port = 0)
    {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0)
            throw IoError("cannot create listening socket");
        const int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(port);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            ::close(fd_);
            throw IoError("cannot bind 127.0.0.1:" + std::to_string(port));
        }
        if (::listen(fd_, 16) != 0) {
            ::close(fd_);
            throw IoError("cannot listen");
        }
        socklen_t len = sizeof(addr);
        if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
            ::close(fd_);
            throw IoError("cannot read bound port");
        }
        port_ = ntohs(addr.sin_port);
    }

    ~TcpListener() { close(); }
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;

    std::unique_ptr<Stream> accept()
    {
        for (;;) {
            const int fd = ::accept(fd_, nullptr, nullptr);
            if (fd >= 0)
                return std::make_unique<detail::FdStream>(fd);
            if (errno == EINTR)
                continue;
            throw IoError("accept failed: " + std::string(std::strerror(errno)));
        }
    }

    std::uint16_t port() const { return port_; }

    void close()
    {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

inline std::unique_ptr<Stream> tcp_connect(const std::string& host, std::uint16_t port)
{
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0)
        throw IoError("cannot create socket");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw IoError("bad IPv4 address: " + host);
    }
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(fd);
        throw IoError("cannot connect to " + host + ":" + std::to_string(port));
    }
    return std::make_unique<detail::FdStream>(fd);
}

// Frame-granular view of a stream: send whole frames, receive whole frames.
// recv gives nullopt on a clean EOF at a frame boundary and throws if the
// peer vanished mid-frame.
class FrameChannel {
public:
    explicit FrameChannel(Stream& stream) : stream_(stream) {}

    void send(const Frame& f)
    {
        const auto bytes = frame_encode(f);
        stream_.write(bytes.data(), bytes.size());
    }

    std::optional<Frame> recv()
    {
        for (;;) {
            if (auto f = decoder_.next())
                return f;
            std::uint8_t chunk[4096];
            const std::size_t got = stream_.read(chunk, sizeof(chunk));
            if (got == 0) {
                if (decoder_.buffered() != 0)
                    throw IoError("connection closed mid-frame");
                return std::nullopt;
            }
            decoder_.feed(chunk, got);
        }
    }

    Frame recv_required()
    {
        auto f = recv();
        if (!f)
            throw IoError("connection closed while a frame was expected");
        return *f;
    }

private:
    Stream& stream_;
    FrameDecoder decoder_;
};

} // namespace suc
