#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mindcube/server/net.hpp"

namespace mindcube::server {

// Minimal RFC 6455 server: text messages, ping/pong, close. No extensions.

class WsProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class WsOpcode : std::uint8_t {
    Continuation = 0x0,
    Text = 0x1,
    Binary = 0x2,
    Close = 0x8,
    Ping = 0x9,
    Pong = 0xA,
};

struct WsFrame {
    bool fin = true;
    WsOpcode opcode = WsOpcode::Text;
    std::string payload;
};

inline constexpr std::size_t kMaxWsPayload = 1 << 16;

/// base64(SHA-1(key + RFC 6455 GUID)).
std::string websocket_accept_key(std::string_view client_key);

/// Server frames are unmasked; pass a mask to build a client frame.
std::string encode_ws_frame(WsOpcode opcode, std::string_view payload,
                            std::optional<std::uint32_t> mask = std::nullopt);

/// Decodes one frame from the front of `bytes`. Returns nullopt when more
/// bytes are needed; sets `consumed` otherwise. Throws WsProtocolError.
std::optional<WsFrame> decode_ws_frame(std::string_view bytes, std::size_t& consumed,
                                       bool require_mask);

class WebSocketServer {
public:
    /// Returns a reply to send back on the same connection, if any.
    using MessageHandler = std::function<std::optional<std::string>(std::string_view text)>;
    /// Produces the periodic broadcast (telemetry).
    using TickHandler = std::function<std::string()>;

    /// Throws BindFailed.
    WebSocketServer(std::uint16_t port, MessageHandler on_message, TickHandler on_tick,
                    double tick_hz = 10.0, bool any_address = false,
                    std::size_t max_backlog = std::size_t{1} << 20);
    ~WebSocketServer();

    void start();
    void stop();

    std::uint16_t port() const noexcept { return port_; }
    std::size_t clients() const;
    std::size_t ticks() const noexcept { return ticks_.load(); }

private:
    struct Connection {
        Fd fd;
        bool open = false;  // handshake done
        bool closing = false;
        std::string in;
        std::string out;
        std::string message;  // fragmented text being assembled
        std::uint64_t id = 0;
    };

    void run(std::stop_token stop);
    bool on_readable(Connection& c);
    bool handshake(Connection& c);
    bool handle_frames(Connection& c);
    bool flush(Connection& c);
    void queue(Connection& c, std::string bytes);

    Fd listener_;
    std::uint16_t port_;
    MessageHandler on_message_;
    TickHandler on_tick_;
    std::chrono::nanoseconds tick_period_;
    std::size_t max_backlog_;
    Waker waker_;
    mutable std::mutex mutex_;
    std::vector<Connection> connections_;
    std::uint64_t next_id_ = 1;
    std::atomic<std::size_t> ticks_{0};
    std::jthread thread_;
};

/// Blocking client, enough for tools and tests.
class WebSocketClient {
public:
    /// Connects and completes the handshake. Throws NetError / WsProtocolError.
    WebSocketClient(const std::string& host, std::uint16_t port,
                    std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

    void send_text(std::string_view text);
    /// Next text message, answering pings on the way. nullopt on timeout or close.
    std::optional<std::string> receive(std::chrono::milliseconds timeout);
    void close();

private:
    Fd socket_;
    std::string in_;
    std::uint32_t mask_state_ = 0x9E3779B9u;
};

}  // namespace mindcube::server
