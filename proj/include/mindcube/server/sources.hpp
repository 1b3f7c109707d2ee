#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "mindcube/server/net.hpp"
#include "mindcube/simdevice/device.hpp"
#include "mindcube/wire/packet.hpp"

namespace mindcube::server {

class UnsupportedInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sleeps until `deadline`; returns false if `stop` fired first.
bool sleep_until(std::stop_token stop, std::chrono::steady_clock::time_point deadline);

using FramedPacket = std::vector<std::uint8_t>;  // COBS frame, delimiter stripped

/// Producer of framed device packets.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    /// Blocks for the next packet. nullopt once exhausted or when `stop` fires.
    virtual std::optional<FramedPacket> next(std::stop_token stop) = 0;
    /// Panel input. Throws UnsupportedInput when the source has no local device.
    virtual void post(const simdevice::PanelEvent& event);
    virtual bool accepts_panel_input() const { return false; }
    virtual bool connected() const { return true; }
    virtual std::string describe() const = 0;
};

/// In-process virtual device. Paced at its stream rate unless `paced` is false.
class SimulatedSource final : public FrameSource {
public:
    explicit SimulatedSource(simdevice::Scenario scenario, double rate_hz = simdevice::kDefaultRateHz,
                             bool paced = true);
    std::optional<FramedPacket> next(std::stop_token stop) override;
    void post(const simdevice::PanelEvent& event) override { device_.post(event); }
    bool accepts_panel_input() const override { return true; }
    std::string describe() const override;
    simdevice::VirtualDevice& device() noexcept { return device_; }

private:
    simdevice::VirtualDevice device_;
    bool paced_;
    std::optional<std::chrono::steady_clock::time_point> start_;
};

struct Backoff {
    double initial_s = 0.5;
    double max_s = 8.0;
};

/// Device feed over TCP. Reconnects with doubling backoff when the link drops.
class TcpFeedSource final : public FrameSource {
public:
    TcpFeedSource(std::string host, std::uint16_t port, Backoff backoff = {});
    std::optional<FramedPacket> next(std::stop_token stop) override;
    bool connected() const override { return connected_.load(); }
    std::string describe() const override;

    std::size_t connections() const noexcept { return connections_.load(); }
    std::size_t losses() const noexcept { return losses_.load(); }
    std::size_t dropped_bytes() const noexcept { return splitter_.dropped_bytes(); }

private:
    std::string host_;
    std::uint16_t port_;
    Backoff backoff_;
    double next_delay_s_;
    Fd socket_;
    wire::FrameSplitter splitter_;
    std::atomic<bool> connected_{false};
    std::atomic<std::size_t> connections_{0};
    std::atomic<std::size_t> losses_{0};
};

/// Serves a virtual device as a framed packet stream to any TCP client. The
/// device keeps running while suspended, so clients see a seq gap on return.
class DeviceFeedServer {
public:
    DeviceFeedServer(simdevice::Scenario scenario, std::uint16_t port, double rate_hz = simdevice::kDefaultRateHz,
                     bool any_address = false);
    ~DeviceFeedServer();

    void start();
    void stop();
    /// Closes the listener and every client.
    void suspend();
    /// Re-binds the original port. Throws BindFailed.
    void resume();

    std::uint16_t port() const noexcept { return port_; }
    std::size_t clients() const;
    std::int64_t frames_emitted() const noexcept { return frames_.load(); }
    void post(const simdevice::PanelEvent& event) { device_.post(event); }

private:
    void run(std::stop_token stop);

    simdevice::VirtualDevice device_;
    std::uint16_t port_;
    bool any_address_;
    mutable std::mutex mutex_;
    Fd listener_;
    std::vector<Fd> clients_;
    std::atomic<std::int64_t> frames_{0};
    std::jthread thread_;
};

}  // namespace mindcube::server
