#include "mindcube/server/sources.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>

#include <spdlog/spdlog.h>

namespace mindcube::server {

using Clock = std::chrono::steady_clock;

bool sleep_until(std::stop_token stop, Clock::time_point deadline) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_until(lock, stop, deadline, [] { return false; });
    return !stop.stop_requested();
}

void FrameSource::post(const simdevice::PanelEvent&) {
    throw UnsupportedInput("panel input needs a local virtual device; this source is " + describe());
}

SimulatedSource::SimulatedSource(simdevice::Scenario scenario, double rate_hz, bool paced)
    : device_(scenario, rate_hz), paced_(paced) {}

std::optional<FramedPacket> SimulatedSource::next(std::stop_token stop) {
    if (device_.exhausted() || stop.stop_requested()) return std::nullopt;
    if (paced_) {
        if (!start_) start_ = Clock::now();
        const auto due = *start_ + std::chrono::duration_cast<Clock::duration>(
                                       std::chrono::duration<double>(device_.frames_emitted() * device_.period_s()));
        if (!sleep_until(stop, due)) return std::nullopt;
    }
    auto framed = wire::encode_frame(device_.next_frame());
    framed.pop_back();
    return framed;
}

std::string SimulatedSource::describe() const {
    return "simulated " + std::string(simdevice::to_string(device_.scenario().kind)) + " (seed " +
           std::to_string(device_.scenario().seed) + ")";
}

TcpFeedSource::TcpFeedSource(std::string host, std::uint16_t port, Backoff backoff)
    : host_(std::move(host)), port_(port), backoff_(backoff), next_delay_s_(backoff.initial_s) {}

std::string TcpFeedSource::describe() const { return "tcp feed " + host_ + ":" + std::to_string(port_); }

std::optional<FramedPacket> TcpFeedSource::next(std::stop_token stop) {
    while (!stop.stop_requested()) {
        if (auto frame = splitter_.next()) return frame;

        if (!socket_.valid()) {
            try {
                socket_ = connect_tcp(host_, port_);
                connected_ = true;
                ++connections_;
                next_delay_s_ = backoff_.initial_s;
                spdlog::info("connected to {}", describe());
            } catch (const NetError& e) {
                spdlog::warn("{}: {}; retrying in {:.1f} s", describe(), e.what(), next_delay_s_);
                const auto wait = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(next_delay_s_));
                next_delay_s_ = std::min(next_delay_s_ * 2.0, backoff_.max_s);
                if (!sleep_until(stop, Clock::now() + wait)) break;
            }
            continue;
        }

        pollfd p{socket_.get(), POLLIN, 0};
        const int ready = ::poll(&p, 1, 100);
        if (ready < 0 && errno != EINTR) break;
        if (ready <= 0) continue;

        std::uint8_t buf[4096];
        const ssize_t n = ::recv(socket_.get(), buf, sizeof buf, 0);
        if (n > 0) {
            splitter_.feed({buf, static_cast<std::size_t>(n)});
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EINTR)) continue;
        spdlog::warn("frame source lost: {}", describe());
        ++losses_;
        connected_ = false;
        socket_.reset();
        splitter_ = wire::FrameSplitter{};
        next_delay_s_ = backoff_.initial_s;
    }
    return std::nullopt;
}

DeviceFeedServer::DeviceFeedServer(simdevice::Scenario scenario, std::uint16_t port, double rate_hz,
                                   bool any_address)
    : device_(scenario, rate_hz), port_(port), any_address_(any_address) {
    listener_ = listen_tcp(port_, any_address_);
    port_ = local_port(listener_);
}

DeviceFeedServer::~DeviceFeedServer() { stop(); }

void DeviceFeedServer::start() {
    if (thread_.joinable()) return;
    thread_ = std::jthread([this](std::stop_token st) { run(st); });
}

void DeviceFeedServer::stop() {
    if (thread_.joinable()) {
        thread_.request_stop();
        thread_.join();
    }
}

void DeviceFeedServer::suspend() {
    std::lock_guard lock(mutex_);
    listener_.reset();
    clients_.clear();
    spdlog::info("device feed on port {} suspended", port_);
}

void DeviceFeedServer::resume() {
    std::lock_guard lock(mutex_);
    if (!listener_.valid()) listener_ = listen_tcp(port_, any_address_);
    spdlog::info("device feed on port {} resumed", port_);
}

std::size_t DeviceFeedServer::clients() const {
    std::lock_guard lock(mutex_);
    return clients_.size();
}

void DeviceFeedServer::run(std::stop_token stop) {
    const auto start = Clock::now();
    while (!stop.stop_requested()) {
        const auto due = start + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(device_.frames_emitted() * device_.period_s()));
        if (!sleep_until(stop, due)) break;

        const auto framed = wire::encode_frame(device_.next_frame());
        ++frames_;

        std::lock_guard lock(mutex_);
        if (listener_.valid()) {
            while (true) {
                Fd client(::accept4(listener_.get(), nullptr, nullptr, SOCK_NONBLOCK | SOCK_CLOEXEC));
                if (!client.valid()) break;
                clients_.push_back(std::move(client));
            }
        }
        std::erase_if(clients_, [&](const Fd& c) {
            const ssize_t n = ::send(c.get(), framed.data(), framed.size(), MSG_NOSIGNAL);
            // A client that cannot take a whole 35-byte packet is too slow to keep.
            return n != static_cast<ssize_t>(framed.size());
        });
    }
}

}  // namespace mindcube::server
