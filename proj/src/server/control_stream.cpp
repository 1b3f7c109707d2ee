#include "mindcube/server/control_stream.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <cerrno>

#include <spdlog/spdlog.h>

namespace mindcube::server {

ControlBroadcaster::ControlBroadcaster(std::uint16_t port, bool any_address, std::size_t max_backlog)
    : listener_(listen_tcp(port, any_address)), port_(local_port(listener_)), max_backlog_(max_backlog) {}

ControlBroadcaster::~ControlBroadcaster() { stop(); }

void ControlBroadcaster::start() {
    if (thread_.joinable()) return;
    thread_ = std::jthread([this](std::stop_token st) { run(st); });
}

void ControlBroadcaster::stop() {
    if (thread_.joinable()) {
        thread_.request_stop();
        waker_.notify();
        thread_.join();
    }
}

std::size_t ControlBroadcaster::clients() const {
    std::lock_guard lock(mutex_);
    return clients_.size();
}

bool ControlBroadcaster::flush(Client& c) {
    while (c.offset < c.pending.size()) {
        const ssize_t n = ::send(c.fd.get(), c.pending.data() + c.offset, c.pending.size() - c.offset,
                                 MSG_NOSIGNAL | MSG_DONTWAIT);
        if (n > 0) {
            c.offset += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) break;
        if (n < 0 && errno == EINTR) continue;
        return false;
    }
    if (c.offset == c.pending.size()) {
        c.pending.clear();
        c.offset = 0;
    } else if (c.offset > (std::size_t{1} << 16) && c.offset * 2 > c.pending.size()) {
        c.pending.erase(0, c.offset);
        c.offset = 0;
    }
    return true;
}

void ControlBroadcaster::publish(std::string_view line) {
    bool backlogged = false;
    {
        std::lock_guard lock(mutex_);
        std::erase_if(clients_, [&](Client& c) {
            c.pending.append(line);
            if (!flush(c)) {
                spdlog::info("control client {} disconnected", c.id);
                return true;
            }
            const std::size_t backlog = c.pending.size() - c.offset;
            if (backlog > max_backlog_) {
                spdlog::warn("control client {} dropped: {} bytes unsent", c.id, backlog);
                ++slow_disconnects_;
                return true;
            }
            backlogged = backlogged || backlog > 0;
            return false;
        });
    }
    ++lines_;
    if (backlogged) waker_.notify();
}

void ControlBroadcaster::accept_clients() {
    while (true) {
        Fd client(::accept4(listener_.get(), nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC));
        if (!client.valid()) return;
        const int one = 1;
        ::setsockopt(client.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(mutex_);
        spdlog::info("control client {} connected", next_id_);
        clients_.push_back(Client{std::move(client), {}, 0, next_id_++});
    }
}

void ControlBroadcaster::run(std::stop_token stop) {
    std::vector<pollfd> fds;
    std::vector<std::uint64_t> ids;
    while (!stop.stop_requested()) {
        fds.clear();
        ids.clear();
        fds.push_back({waker_.fd(), POLLIN, 0});
        fds.push_back({listener_.get(), POLLIN, 0});
        {
            std::lock_guard lock(mutex_);
            for (const auto& c : clients_) {
                const short events = static_cast<short>(POLLIN | (c.offset < c.pending.size() ? POLLOUT : 0));
                fds.push_back({c.fd.get(), events, 0});
                ids.push_back(c.id);
            }
        }
        if (::poll(fds.data(), fds.size(), 200) < 0 && errno != EINTR) break;
        if (fds[0].revents) waker_.drain();
        if (fds[1].revents & POLLIN) accept_clients();

        std::lock_guard lock(mutex_);
        for (std::size_t i = 2; i < fds.size(); ++i) {
            if (!fds[i].revents) continue;
            auto it = std::find_if(clients_.begin(), clients_.end(), [&](const Client& c) { return c.id == ids[i - 2]; });
            if (it == clients_.end()) continue;
            bool keep = true;
            if (fds[i].revents & (POLLERR | POLLHUP | POLLNVAL)) keep = false;
            if (keep && (fds[i].revents & POLLIN)) {
                // Clients have nothing to say; read to notice a close.
                char sink[512];
                const ssize_t n = ::recv(it->fd.get(), sink, sizeof sink, MSG_DONTWAIT);
                if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) keep = false;
            }
            if (keep && (fds[i].revents & POLLOUT)) keep = flush(*it);
            if (!keep) {
                spdlog::info("control client {} disconnected", it->id);
                clients_.erase(it);
            }
        }
    }
}

}  // namespace mindcube::server
