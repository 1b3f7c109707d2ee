#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mindcube::server {

class NetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BindFailed : public NetError {
public:
    using NetError::NetError;
};

/// Owning file descriptor.
class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) noexcept : fd_(fd) {}
    ~Fd() { reset(); }
    Fd(Fd&& other) noexcept : fd_(other.release()) {}
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) reset(other.release());
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;

    int get() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    int release() noexcept {
        const int fd = fd_;
        fd_ = -1;
        return fd;
    }
    void reset(int fd = -1) noexcept;

private:
    int fd_ = -1;
};

/// Listening TCP socket on 127.0.0.1 (or any address when `any_address`).
/// Port 0 binds an ephemeral port. Throws BindFailed.
Fd listen_tcp(std::uint16_t port, bool any_address = false, int backlog = 16);

/// Port actually bound by a listening socket.
std::uint16_t local_port(const Fd& socket);

/// Blocking connect with a timeout. Throws NetError.
Fd connect_tcp(const std::string& host, std::uint16_t port,
               std::chrono::milliseconds timeout = std::chrono::milliseconds(1000));

void set_nonblocking(const Fd& socket);

/// Self-pipe used to interrupt poll() from another thread.
class Waker {
public:
    Waker();
    void notify() noexcept;
    void drain() noexcept;
    int fd() const noexcept { return read_.get(); }

private:
    Fd read_;
    Fd write_;
};

}  // namespace mindcube::server
