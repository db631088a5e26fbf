#include "hl2ss/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "hl2ss/errors.hpp"

namespace hl2ss::net {

namespace {

std::string errno_text(int err) { return std::strerror(err); }

std::string endpoint(const std::string& host, std::uint16_t port) { return host + ":" + std::to_string(port); }

int poll_one(int fd, short events, Duration timeout) {
    pollfd p{fd, events, 0};
    for (;;) {
        const int n = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) throw TransportError("poll: " + errno_text(errno));
        return n == 0 ? 0 : p.revents;
    }
}

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0") {
        addr.sin_addr.s_addr = htonl(INADDR_ANY);
        return addr;
    }
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res); rc != 0 || !res) {
        throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
    }
    addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    ::freeaddrinfo(res);
    return addr;
}

}  // namespace

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

// ---------------------------------------------------------------------------

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port, Duration timeout) {
    const sockaddr_in addr = resolve(host, port);
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw TransportError("socket: " + errno_text(errno));

    const int flags = ::fcntl(s.fd(), F_GETFL, 0);
    ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        if (errno != EINPROGRESS) throw TransportError("connect " + endpoint(host, port) + ": " + errno_text(errno));
        if (poll_one(s.fd(), POLLOUT, timeout) == 0) {
            throw TransportError("connect " + endpoint(host, port) + ": timed out");
        }
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) throw TransportError("connect " + endpoint(host, port) + ": " + errno_text(err));
    }
    ::fcntl(s.fd(), F_SETFL, flags);
    const int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return TcpStream(std::move(s));
}

void TcpStream::send_all(ByteView data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = ::send(sock_.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError("send: " + errno_text(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::optional<std::size_t> TcpStream::recv_some(std::span<std::uint8_t> out, Duration timeout) {
    if (timeout.count() >= 0 && poll_one(sock_.fd(), POLLIN, timeout) == 0) return std::nullopt;
    for (;;) {
        const ssize_t n = ::recv(sock_.fd(), out.data(), out.size(), 0);
        if (n >= 0) return static_cast<std::size_t>(n);
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) return 0;
        throw TransportError("recv: " + errno_text(errno));
    }
}

void TcpStream::recv_exact(std::span<std::uint8_t> out, Duration timeout) {
    const auto deadline = Clock::now() + timeout;
    std::size_t got = 0;
    while (got < out.size()) {
        Duration left(-1);
        if (timeout.count() >= 0) {
            left = std::chrono::duration_cast<Duration>(deadline - Clock::now());
            if (left.count() < 0) left = Duration(0);
        }
        const auto n = recv_some(out.subspan(got), left);
        if (!n) throw TransportError("recv: timed out after " + std::to_string(got) + " of " +
                                     std::to_string(out.size()) + " bytes");
        if (*n == 0) {
            throw TruncatedError("peer closed after " + std::to_string(got) + " of " + std::to_string(out.size()) +
                                 " bytes");
        }
        got += *n;
    }
}

Bytes TcpStream::recv_until_close(std::size_t limit, Duration timeout) {
    const auto deadline = Clock::now() + timeout;
    Bytes out;
    std::uint8_t buf[65536];
    for (;;) {
        Duration left(-1);
        if (timeout.count() >= 0) {
            left = std::chrono::duration_cast<Duration>(deadline - Clock::now());
            if (left.count() < 0) left = Duration(0);
        }
        const auto n = recv_some(buf, left);
        if (!n) throw TransportError("recv: timed out waiting for peer close");
        if (*n == 0) return out;
        out.insert(out.end(), buf, buf + *n);
        if (out.size() > limit) throw ProtocolError("peer sent more than " + std::to_string(limit) + " bytes");
    }
}

void TcpStream::shutdown() noexcept {
    if (sock_.valid()) ::shutdown(sock_.fd(), SHUT_RDWR);
}

void TcpStream::shutdown_write() noexcept {
    if (sock_.valid()) ::shutdown(sock_.fd(), SHUT_WR);
}

bool TcpStream::peer_closed() const noexcept {
    if (!sock_.valid()) return true;
    pollfd p{sock_.fd(), POLLIN, 0};
    if (::poll(&p, 1, 0) <= 0) return false;
    if (p.revents & (POLLERR | POLLHUP)) return true;
    std::uint8_t b;
    const ssize_t n = ::recv(sock_.fd(), &b, 1, MSG_PEEK | MSG_DONTWAIT);
    return n == 0 || (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK);
}

std::uint16_t TcpStream::local_port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

// ---------------------------------------------------------------------------

TcpListener TcpListener::bind(const std::string& host, std::uint16_t port, int backlog) {
    const sockaddr_in addr = resolve(host, port);
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw TransportError("socket: " + errno_text(errno));
    const int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw TransportError("bind " + endpoint(host, port) + ": " + errno_text(errno));
    }
    if (::listen(s.fd(), backlog) != 0) {
        throw TransportError("listen " + endpoint(host, port) + ": " + errno_text(errno));
    }
    TcpListener l;
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
    l.port_ = ntohs(bound.sin_port);
    l.sock_ = std::move(s);
    return l;
}

std::optional<TcpStream> TcpListener::accept(Duration timeout) {
    if (!sock_.valid()) return std::nullopt;
    if (poll_one(sock_.fd(), POLLIN, timeout) == 0) return std::nullopt;
    const int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) {
        if (errno == EINTR || errno == EAGAIN || errno == ECONNABORTED) return std::nullopt;
        throw TransportError("accept: " + errno_text(errno));
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return TcpStream(Socket(fd));
}

}  // namespace hl2ss::net
