#include "mindcube/server/net.hpp"

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

namespace mindcube::server {
namespace {

std::string errno_text() { return std::strerror(errno); }

}  // namespace

void Fd::reset(int fd) noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = fd;
}

Fd listen_tcp(std::uint16_t port, bool any_address, int backlog) {
    Fd s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw BindFailed("socket: " + errno_text());
    const int one = 1;
    ::setsockopt(s.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(any_address ? INADDR_ANY : INADDR_LOOPBACK);
    if (::bind(s.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        throw BindFailed("bind port " + std::to_string(port) + ": " + errno_text());
    }
    if (::listen(s.get(), backlog) != 0) {
        throw BindFailed("listen port " + std::to_string(port) + ": " + errno_text());
    }
    set_nonblocking(s);
    return s;
}

std::uint16_t local_port(const Fd& socket) {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (::getsockname(socket.get(), reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
        throw NetError("getsockname: " + errno_text());
    }
    return ntohs(addr.sin_port);
}

Fd connect_tcp(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    const std::string service = std::to_string(port);
    if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
        throw NetError("resolve " + host + ": " + ::gai_strerror(rc));
    }
    Fd s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) {
        ::freeaddrinfo(found);
        throw NetError("socket: " + errno_text());
    }
    set_nonblocking(s);
    const int rc = ::connect(s.get(), found->ai_addr, found->ai_addrlen);
    ::freeaddrinfo(found);
    if (rc != 0 && errno != EINPROGRESS) {
        throw NetError("connect " + host + ":" + service + ": " + errno_text());
    }
    if (rc != 0) {
        pollfd p{s.get(), POLLOUT, 0};
        const int ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (ready <= 0) throw NetError("connect " + host + ":" + service + ": timed out");
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(s.get(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) {
            throw NetError("connect " + host + ":" + service + ": " + std::strerror(err));
        }
    }
    const int one = 1;
    ::setsockopt(s.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

void set_nonblocking(const Fd& socket) {
    const int flags = ::fcntl(socket.get(), F_GETFL, 0);
    ::fcntl(socket.get(), F_SETFL, flags | O_NONBLOCK);
}

Waker::Waker() {
    int fds[2];
    if (::pipe2(fds, O_NONBLOCK | O_CLOEXEC) != 0) throw NetError("pipe: " + errno_text());
    read_.reset(fds[0]);
    write_.reset(fds[1]);
}

void Waker::notify() noexcept {
    const char byte = 1;
    [[maybe_unused]] const auto n = ::write(write_.get(), &byte, 1);
}

void Waker::drain() noexcept {
    char buf[64];
    while (::read(read_.get(), buf, sizeof buf) > 0) {
    }
}

}  // namespace mindcube::server
