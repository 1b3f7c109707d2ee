#include "mindcube/server/websocket.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <openssl/evp.h>
#include <openssl/sha.h>
#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <cctype>
#include <cerrno>

#include <spdlog/spdlog.h>

namespace mindcube::server {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
constexpr std::size_t kMaxRequestHeader = 8192;

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::optional<std::string> header_value(std::string_view request, std::string_view name) {
    const std::string lowered = lower(request);
    const std::string needle = "\r\n" + lower(name) + ":";
    const auto pos = lowered.find(needle);
    if (pos == std::string::npos) return std::nullopt;
    const auto start = pos + needle.size();
    const auto end = request.find("\r\n", start);
    std::string_view v = request.substr(start, end - start);
    while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
    while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
    return std::string(v);
}

bool is_control(WsOpcode op) { return static_cast<std::uint8_t>(op) >= 0x8; }

std::string close_payload(std::uint16_t code) {
    return {static_cast<char>(code >> 8), static_cast<char>(code & 0xFF)};
}

}  // namespace

std::string websocket_accept_key(std::string_view client_key) {
    const std::string joined = std::string(client_key) + std::string(kGuid);
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
    unsigned char encoded[4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1];
    const int n = EVP_EncodeBlock(encoded, digest, SHA_DIGEST_LENGTH);
    return std::string(reinterpret_cast<char*>(encoded), static_cast<std::size_t>(n));
}

std::string encode_ws_frame(WsOpcode opcode, std::string_view payload, std::optional<std::uint32_t> mask) {
    std::string out;
    out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(opcode)));
    const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
    const std::size_t n = payload.size();
    if (n < 126) {
        out.push_back(static_cast<char>(mask_bit | n));
    } else if (n <= 0xFFFF) {
        out.push_back(static_cast<char>(mask_bit | 126));
        out.push_back(static_cast<char>(n >> 8));
        out.push_back(static_cast<char>(n & 0xFF));
    } else {
        out.push_back(static_cast<char>(mask_bit | 127));
        for (int i = 7; i >= 0; --i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(n) >> (8 * i)) & 0xFF));
    }
    if (!mask) {
        out.append(payload);
        return out;
    }
    const char key[4] = {static_cast<char>(*mask >> 24), static_cast<char>(*mask >> 16),
                         static_cast<char>(*mask >> 8), static_cast<char>(*mask)};
    out.append(key, 4);
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
    return out;
}

std::optional<WsFrame> decode_ws_frame(std::string_view bytes, std::size_t& consumed, bool require_mask) {
    if (bytes.size() < 2) return std::nullopt;
    const auto b0 = static_cast<std::uint8_t>(bytes[0]);
    const auto b1 = static_cast<std::uint8_t>(bytes[1]);
    if (b0 & 0x70) throw WsProtocolError("reserved bits set");
    const auto op = static_cast<WsOpcode>(b0 & 0x0F);
    switch (op) {
        case WsOpcode::Continuation: case WsOpcode::Text: case WsOpcode::Binary:
        case WsOpcode::Close: case WsOpcode::Ping: case WsOpcode::Pong:
            break;
        default:
            throw WsProtocolError("unknown opcode " + std::to_string(b0 & 0x0F));
    }
    const bool fin = (b0 & 0x80) != 0;
    const bool masked = (b1 & 0x80) != 0;
    if (require_mask && !masked) throw WsProtocolError("client frames must be masked");

    std::size_t pos = 2;
    std::uint64_t len = b1 & 0x7F;
    if (len == 126) {
        if (bytes.size() < 4) return std::nullopt;
        len = (static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[2])) << 8) | static_cast<std::uint8_t>(bytes[3]);
        pos = 4;
    } else if (len == 127) {
        if (bytes.size() < 10) return std::nullopt;
        len = 0;
        for (int i = 0; i < 8; ++i) len = (len << 8) | static_cast<std::uint8_t>(bytes[2 + i]);
        pos = 10;
    }
    if (is_control(op) && (len > 125 || !fin)) throw WsProtocolError("bad control frame");
    if (len > kMaxWsPayload) throw WsProtocolError("frame payload too large");

    char key[4] = {0, 0, 0, 0};
    if (masked) {
        if (bytes.size() < pos + 4) return std::nullopt;
        std::copy_n(bytes.data() + pos, 4, key);
        pos += 4;
    }
    if (bytes.size() < pos + len) return std::nullopt;
    WsFrame frame;
    frame.fin = fin;
    frame.opcode = op;
    frame.payload.assign(bytes.data() + pos, static_cast<std::size_t>(len));
    if (masked) {
        for (std::size_t i = 0; i < frame.payload.size(); ++i) frame.payload[i] ^= key[i % 4];
    }
    consumed = pos + static_cast<std::size_t>(len);
    return frame;
}

WebSocketServer::WebSocketServer(std::uint16_t port, MessageHandler on_message, TickHandler on_tick,
                                 double tick_hz, bool any_address, std::size_t max_backlog)
    : listener_(listen_tcp(port, any_address)),
      port_(local_port(listener_)),
      on_message_(std::move(on_message)),
      on_tick_(std::move(on_tick)),
      tick_period_(std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::duration<double>(1.0 / tick_hz))),
      max_backlog_(max_backlog) {}

WebSocketServer::~WebSocketServer() { stop(); }

void WebSocketServer::start() {
    if (thread_.joinable()) return;
    thread_ = std::jthread([this](std::stop_token st) { run(st); });
}

void WebSocketServer::stop() {
    if (thread_.joinable()) {
        thread_.request_stop();
        waker_.notify();
        thread_.join();
    }
}

std::size_t WebSocketServer::clients() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(connections_.begin(), connections_.end(),
                                                  [](const Connection& c) { return c.open; }));
}

bool WebSocketServer::flush(Connection& c) {
    std::size_t sent = 0;
    while (sent < c.out.size()) {
        const ssize_t n = ::send(c.fd.get(), c.out.data() + sent, c.out.size() - sent, MSG_NOSIGNAL | MSG_DONTWAIT);
        if (n > 0) {
            sent += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) break;
        if (n < 0 && errno == EINTR) continue;
        return false;
    }
    c.out.erase(0, sent);
    if (c.out.size() > max_backlog_) {
        spdlog::warn("panel client {} dropped: {} bytes unsent", c.id, c.out.size());
        return false;
    }
    return !(c.closing && c.out.empty());
}

void WebSocketServer::queue(Connection& c, std::string bytes) { c.out.append(bytes); }

bool WebSocketServer::handshake(Connection& c) {
    const auto end = c.in.find("\r\n\r\n");
    if (end == std::string::npos) {
        if (c.in.size() > kMaxRequestHeader) return false;
        return true;
    }
    const std::string request = c.in.substr(0, end + 2);
    c.in.erase(0, end + 4);
    const auto key = header_value(request, "Sec-WebSocket-Key");
    const auto upgrade = header_value(request, "Upgrade");
    if (!key || !upgrade || lower(*upgrade) != "websocket") {
        queue(c, "HTTP/1.1 426 Upgrade Required\r\nUpgrade: websocket\r\nContent-Length: 0\r\n"
                 "Connection: close\r\n\r\n");
        c.closing = true;
        return true;
    }
    queue(c, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
             "Sec-WebSocket-Accept: " + websocket_accept_key(*key) + "\r\n\r\n");
    c.open = true;
    spdlog::info("panel client {} connected", c.id);
    return handle_frames(c);
}

bool WebSocketServer::handle_frames(Connection& c) {
    while (!c.closing) {
        std::size_t consumed = 0;
        std::optional<WsFrame> frame;
        try {
            frame = decode_ws_frame(c.in, consumed, true);
        } catch (const WsProtocolError& e) {
            spdlog::info("panel client {}: protocol error: {}", c.id, e.what());
            queue(c, encode_ws_frame(WsOpcode::Close, close_payload(1002)));
            c.closing = true;
            return true;
        }
        if (!frame) return true;
        c.in.erase(0, consumed);

        switch (frame->opcode) {
            case WsOpcode::Ping:
                queue(c, encode_ws_frame(WsOpcode::Pong, frame->payload));
                break;
            case WsOpcode::Pong:
                break;
            case WsOpcode::Close:
                queue(c, encode_ws_frame(WsOpcode::Close, frame->payload.substr(0, 2)));
                c.closing = true;
                break;
            case WsOpcode::Binary:
                queue(c, encode_ws_frame(WsOpcode::Text,
                                         R"({"type":"error","message":"binary messages are not supported"})"));
                break;
            case WsOpcode::Text:
            case WsOpcode::Continuation: {
                if (frame->opcode == WsOpcode::Text) c.message.clear();
                c.message += frame->payload;
                if (c.message.size() > kMaxWsPayload) {
                    queue(c, encode_ws_frame(WsOpcode::Close, close_payload(1009)));
                    c.closing = true;
                    break;
                }
                if (!frame->fin) break;
                if (auto reply = on_message_(c.message)) queue(c, encode_ws_frame(WsOpcode::Text, *reply));
                c.message.clear();
                break;
            }
        }
    }
    return true;
}

bool WebSocketServer::on_readable(Connection& c) {
    char buf[4096];
    while (true) {
        const ssize_t n = ::recv(c.fd.get(), buf, sizeof buf, MSG_DONTWAIT);
        if (n > 0) {
            c.in.append(buf, static_cast<std::size_t>(n));
            if (c.in.size() > kMaxWsPayload * 2) return false;
            continue;
        }
        if (n == 0) return false;
        if (errno == EAGAIN || errno == EWOULDBLOCK) break;
        if (errno == EINTR) continue;
        return false;
    }
    return c.open ? handle_frames(c) : handshake(c);
}

void WebSocketServer::run(std::stop_token stop) {
    auto next_tick = Clock::now() + tick_period_;
    std::vector<pollfd> fds;
    std::vector<std::uint64_t> ids;
    while (!stop.stop_requested()) {
        fds.clear();
        ids.clear();
        fds.push_back({waker_.fd(), POLLIN, 0});
        fds.push_back({listener_.get(), POLLIN, 0});
        {
            std::lock_guard lock(mutex_);
            for (const auto& c : connections_) {
                fds.push_back({c.fd.get(), static_cast<short>(POLLIN | (c.out.empty() ? 0 : POLLOUT)), 0});
                ids.push_back(c.id);
            }
        }
        const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - Clock::now()).count();
        if (::poll(fds.data(), fds.size(), static_cast<int>(std::max<long long>(wait, 0))) < 0 && errno != EINTR) break;
        if (fds[0].revents) waker_.drain();

        std::lock_guard lock(mutex_);
        if (fds[1].revents & POLLIN) {
            while (true) {
                Fd client(::accept4(listener_.get(), nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC));
                if (!client.valid()) break;
                const int one = 1;
                ::setsockopt(client.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
                Connection c;
                c.fd = std::move(client);
                c.id = next_id_++;
                connections_.push_back(std::move(c));
            }
        }
        for (std::size_t i = 2; i < fds.size(); ++i) {
            if (!fds[i].revents) continue;
            auto it = std::find_if(connections_.begin(), connections_.end(),
                                   [&](const Connection& c) { return c.id == ids[i - 2]; });
            if (it == connections_.end()) continue;
            bool keep = !(fds[i].revents & (POLLERR | POLLNVAL));
            if (keep && (fds[i].revents & (POLLIN | POLLHUP))) keep = on_readable(*it);
            if (keep) keep = flush(*it);
            if (!keep) {
                if (it->open) spdlog::info("panel client {} disconnected", it->id);
                connections_.erase(it);
            }
        }

        if (Clock::now() >= next_tick) {
            next_tick += tick_period_;
            if (next_tick < Clock::now()) next_tick = Clock::now() + tick_period_;
            ++ticks_;
            const bool anyone = std::any_of(connections_.begin(), connections_.end(),
                                            [](const Connection& c) { return c.open && !c.closing; });
            if (anyone) {
                const std::string frame = encode_ws_frame(WsOpcode::Text, on_tick_());
                std::erase_if(connections_, [&](Connection& c) {
                    if (!c.open || c.closing) return false;
                    queue(c, frame);
                    return !flush(c);
                });
            }
        }
    }
}

WebSocketClient::WebSocketClient(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout)
    : socket_(connect_tcp(host, port, timeout)) {
    const std::string key = "bWluZGN1YmUtY2xpZW50IQ==";
    const std::string request = "GET / HTTP/1.1\r\nHost: " + host + ":" + std::to_string(port) +
                                "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: " + key +
                                "\r\nSec-WebSocket-Version: 13\r\n\r\n";
    if (::send(socket_.get(), request.data(), request.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(request.size())) {
        throw NetError("handshake send failed");
    }
    const auto deadline = Clock::now() + timeout;
    while (in_.find("\r\n\r\n") == std::string::npos) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        pollfd p{socket_.get(), POLLIN, 0};
        if (left <= 0 || ::poll(&p, 1, static_cast<int>(left)) <= 0) throw NetError("handshake timed out");
        char buf[1024];
        const ssize_t n = ::recv(socket_.get(), buf, sizeof buf, 0);
        if (n <= 0) throw NetError("connection closed during handshake");
        in_.append(buf, static_cast<std::size_t>(n));
    }
    const auto end = in_.find("\r\n\r\n");
    const std::string response = in_.substr(0, end + 2);
    in_.erase(0, end + 4);
    if (response.rfind("HTTP/1.1 101", 0) != 0) throw WsProtocolError("upgrade refused");
    if (header_value(response, "Sec-WebSocket-Accept") != websocket_accept_key(key)) {
        throw WsProtocolError("bad Sec-WebSocket-Accept");
    }
}

void WebSocketClient::send_text(std::string_view text) {
    mask_state_ = mask_state_ * 1664525u + 1013904223u;
    const std::string frame = encode_ws_frame(WsOpcode::Text, text, mask_state_);
    if (::send(socket_.get(), frame.data(), frame.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(frame.size())) {
        throw NetError("send failed");
    }
}

std::optional<std::string> WebSocketClient::receive(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    while (socket_.valid()) {
        std::size_t consumed = 0;
        if (auto frame = decode_ws_frame(in_, consumed, false)) {
            in_.erase(0, consumed);
            if (frame->opcode == WsOpcode::Text) return frame->payload;
            if (frame->opcode == WsOpcode::Close) {
                socket_.reset();
                return std::nullopt;
            }
            if (frame->opcode == WsOpcode::Ping) {
                mask_state_ = mask_state_ * 1664525u + 1013904223u;
                const std::string pong = encode_ws_frame(WsOpcode::Pong, frame->payload, mask_state_);
                ::send(socket_.get(), pong.data(), pong.size(), MSG_NOSIGNAL);
            }
            continue;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        pollfd p{socket_.get(), POLLIN, 0};
        if (left <= 0 || ::poll(&p, 1, static_cast<int>(left)) <= 0) return std::nullopt;
        char buf[4096];
        const ssize_t n = ::recv(socket_.get(), buf, sizeof buf, 0);
        if (n <= 0) {
            socket_.reset();
            return std::nullopt;
        }
        in_.append(buf, static_cast<std::size_t>(n));
    }
    return std::nullopt;
}

void WebSocketClient::close() {
    if (!socket_.valid()) return;
    const std::string frame = encode_ws_frame(WsOpcode::Close, close_payload(1000), 0x01020304u);
    ::send(socket_.get(), frame.data(), frame.size(), MSG_NOSIGNAL);
    socket_.reset();
}

}  // namespace mindcube::server
