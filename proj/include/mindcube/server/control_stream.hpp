#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mindcube/server/net.hpp"

namespace mindcube::server {

/// Broadcasts CSV lines to every connected TCP client. Each client receives
/// the stream from the moment it joined. publish() never blocks: a client
/// whose unsent backlog passes the limit is disconnected.
class ControlBroadcaster {
public:
    /// Throws BindFailed.
    ControlBroadcaster(std::uint16_t port, bool any_address = false,
                       std::size_t max_backlog = std::size_t{1} << 20);
    ~ControlBroadcaster();

    void start();
    void stop();

    /// Bytes are sent as given; CSV lines carry their own newline.
    void publish(std::string_view line);

    std::uint16_t port() const noexcept { return port_; }
    std::size_t clients() const;
    std::size_t slow_disconnects() const noexcept { return slow_disconnects_.load(); }
    std::size_t lines_published() const noexcept { return lines_.load(); }

private:
    struct Client {
        Fd fd;
        std::string pending;
        std::size_t offset = 0;
        std::uint64_t id = 0;
    };

    void run(std::stop_token stop);
    void accept_clients();
    /// Sends what the socket takes. Returns false if the client should go.
    bool flush(Client& client);

    Fd listener_;
    std::uint16_t port_;
    std::size_t max_backlog_;
    Waker waker_;
    mutable std::mutex mutex_;
    std::vector<Client> clients_;
    std::uint64_t next_id_ = 1;
    std::atomic<std::size_t> slow_disconnects_{0};
    std::atomic<std::size_t> lines_{0};
    std::jthread thread_;
};

}  // namespace mindcube::server
