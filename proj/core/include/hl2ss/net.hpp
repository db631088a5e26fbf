#pragma once

// Minimal blocking TCP over POSIX sockets.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "hl2ss/bytes.hpp"

namespace hl2ss::net {

using Clock = std::chrono::steady_clock;
using Duration = std::chrono::milliseconds;

/// Owns a file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) noexcept : fd_(fd) {}
    ~Socket() { close(); }

    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    void close() noexcept;

private:
    int fd_ = -1;
};

class TcpStream {
public:
    TcpStream() = default;
    explicit TcpStream(Socket s) noexcept : sock_(std::move(s)) {}

    /// Throws TransportError when the peer refuses or the timeout expires.
    static TcpStream connect(const std::string& host, std::uint16_t port, Duration timeout = Duration(5000));

    bool valid() const noexcept { return sock_.valid(); }

    /// Throws TransportError on reset / broken pipe.
    void send_all(ByteView data);

    /// Reads at most out.size() bytes. Returns 0 on orderly peer close.
    /// Returns nullopt if the timeout expired first; a negative timeout
    /// blocks indefinitely.
    std::optional<std::size_t> recv_some(std::span<std::uint8_t> out, Duration timeout = Duration(-1));

    /// Fills `out` completely. Throws TruncatedError if the peer closes
    /// first and TransportError on timeout.
    void recv_exact(std::span<std::uint8_t> out, Duration timeout = Duration(-1));

    /// Reads until orderly close; returns everything received.
    Bytes recv_until_close(std::size_t limit, Duration timeout = Duration(-1));

    /// Wakes any thread blocked in recv on this stream. Safe to call from
    /// another thread while the descriptor stays open.
    void shutdown() noexcept;
    void shutdown_write() noexcept;
    void close() noexcept { sock_.close(); }

    /// Polls for an orderly close or reset without consuming data.
    bool peer_closed() const noexcept;

    std::uint16_t local_port() const;

private:
    Socket sock_;
};

class TcpListener {
public:
    TcpListener() = default;

    /// Throws TransportError naming the address on bind failure.
    static TcpListener bind(const std::string& host, std::uint16_t port, int backlog = 8);

    /// Waits up to `timeout` for a connection.
    std::optional<TcpStream> accept(Duration timeout);

    std::uint16_t port() const noexcept { return port_; }
    bool valid() const noexcept { return sock_.valid(); }
    void close() noexcept { sock_.close(); }

private:
    Socket sock_;
    std::uint16_t port_ = 0;
};

}  // namespace hl2ss::net
