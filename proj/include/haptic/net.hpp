#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "haptic/result.hpp"
#include "haptic/wire_protocol.hpp"

namespace haptic {

// Thin RAII wrapper over a connected TCP socket.
class TcpConn {
public:
    TcpConn() = default;
    explicit TcpConn(int fd) : fd_(fd) {}
    TcpConn(TcpConn&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    TcpConn& operator=(TcpConn&& o) noexcept {
        if (this != &o) {
            close();
            fd_ = o.fd_;
            o.fd_ = -1;
        }
        return *this;
    }
    TcpConn(const TcpConn&) = delete;
    TcpConn& operator=(const TcpConn&) = delete;
    ~TcpConn() { close(); }

    static TcpConn connect(const std::string& host, std::uint16_t port,
                           std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
        TcpConn conn(fd);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
            throw std::runtime_error("bad address: " + host);
        conn.set_timeouts(timeout);
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
            throw std::runtime_error("connect " + host + ":" + std::to_string(port) + ": " +
                                     std::strerror(errno));
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        return conn;
    }

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }

    void set_timeouts(std::chrono::milliseconds timeout) {
        timeval tv{};
        tv.tv_sec = timeout.count() / 1000;
        tv.tv_usec = (timeout.count() % 1000) * 1000;
        ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
    }

    bool send_all(std::span<const std::uint8_t> data) {
        std::size_t sent = 0;
        while (sent < data.size()) {
            ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
            if (n <= 0) return false;
            sent += static_cast<std::size_t>(n);
        }
        return true;
    }

    // Reads exactly n bytes; short result means EOF or timeout.
    bool recv_exact(std::uint8_t* buf, std::size_t n) {
        std::size_t got = 0;
        while (got < n) {
            ssize_t r = ::recv(fd_, buf + got, n - got, 0);
            if (r <= 0) return false;
            got += static_cast<std::size_t>(r);
        }
        return true;
    }

    void close() {
        if (fd_ >= 0) {
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

// Reads one wire frame off the stream and decodes it. The header's length
// field delimits the frame; decode_message then re-validates everything.
inline Result<Message, DecodeError> read_message(TcpConn& conn) {
    std::uint8_t header[4];
    if (!conn.recv_exact(header, 4)) return DecodeError::Truncated;
    if (header[0] != kFrameMagic) return DecodeError::BadMagic;
    const std::uint16_t len = static_cast<std::uint16_t>((header[2] << 8) | header[3]);
    if (len > 64) return DecodeError::LengthMismatch;  // largest real payload is 7 bytes
    std::vector<std::uint8_t> frame(header, header + 4);
    frame.resize(4 + len + 1);
    if (!conn.recv_exact(frame.data() + 4, len + 1)) return DecodeError::Truncated;
    return decode_message(frame);
}

inline bool write_message(TcpConn& conn, const Message& msg) {
    return conn.send_all(encode_message(msg));
}

// Listening socket bound to loopback-or-any with SO_REUSEADDR.
class TcpListener {
public:
    TcpListener(const std::string& host, std::uint16_t port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
        int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(port);
        if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
            throw std::runtime_error("bad address: " + host);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
            std::string err = std::strerror(errno);
            ::close(fd_);
            fd_ = -1;
            throw std::runtime_error("bind port " + std::to_string(port) + ": " + err);
        }
        if (::listen(fd_, 64) != 0) {
            std::string err = std::strerror(errno);
            ::close(fd_);
            fd_ = -1;
            throw std::runtime_error("listen: " + err);
        }
    }
    TcpListener(const TcpListener&) = delete;
    TcpListener& operator=(const TcpListener&) = delete;
    ~TcpListener() { close(); }

    // Bound port (useful when constructed with port 0).
    std::uint16_t port() const {
        sockaddr_in addr{};
        socklen_t len = sizeof(addr);
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        return ntohs(addr.sin_port);
    }

    // Waits up to poll_ms for a connection; nullopt on timeout or closed listener.
    std::optional<TcpConn> accept(int poll_ms = 100) {
        if (fd_ < 0) return std::nullopt;
        pollfd pfd{fd_, POLLIN, 0};
        int r = ::poll(&pfd, 1, poll_ms);
        if (r <= 0) return std::nullopt;
        int cfd = ::accept(fd_, nullptr, nullptr);
        if (cfd < 0) return std::nullopt;
        int one = 1;
        ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        return TcpConn(cfd);
    }

    void close() {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    int fd_ = -1;
};

}  // namespace haptic
