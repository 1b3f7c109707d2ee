#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>

#include "mindcube/simdevice/scenario.hpp"

namespace mindcube::simdevice {

class InvalidEvent : public SimDeviceError {
public:
    using SimDeviceError::SimDeviceError;
};

enum class PanelEventKind { ButtonDown, ButtonUp, JoySet, EncoderStep, OrientSet };

/// A control input from the browser panel (or any other live controller).
struct PanelEvent {
    PanelEventKind kind = PanelEventKind::ButtonDown;
    int button = 0;          // 1..4 for button events
    double joy_x = 0.0;      // [-1, 1]
    double joy_y = 0.0;
    int encoder_steps = 0;   // +1 / -1 per detent
    double pitch_deg = 0.0;  // orient_set
    double roll_deg = 0.0;
    double yaw_deg = 0.0;

    static PanelEvent button_down(int index);
    static PanelEvent button_up(int index);
    static PanelEvent joy_set(double x, double y);
    static PanelEvent encoder_step(int steps);
    static PanelEvent orient_set(double pitch_deg, double roll_deg, double yaw_deg = 0.0);
};

/// Throws InvalidEvent.
void validate(const PanelEvent& event);

std::string_view to_string(PanelEventKind kind);
/// Throws InvalidEvent for an unknown kind name.
PanelEventKind parse_panel_event_kind(std::string_view name);

/// Virtual MindCube. A single producer calls next_frame() at the stream rate;
/// any thread may post() panel events, which take effect on the next frame.
class VirtualDevice {
public:
    /// Throws SimDeviceError if rate_hz is outside [1, 200].
    explicit VirtualDevice(Scenario scenario, double rate_hz = kDefaultRateHz);

    VirtualDevice(const VirtualDevice&) = delete;
    VirtualDevice& operator=(const VirtualDevice&) = delete;

    /// Validates and queues an event. Thread-safe. Throws InvalidEvent.
    void post(const PanelEvent& event);

    /// Applies an event immediately. Producer thread only. Throws InvalidEvent.
    void apply_panel_event(const PanelEvent& event);

    /// Drains queued events and produces the next frame.
    SensorFrame next_frame();

    /// True once a bounded scenario has produced all its frames.
    bool exhausted() const;

    double rate_hz() const noexcept { return rate_hz_; }
    double period_s() const noexcept { return 1.0 / rate_hz_; }
    std::int64_t frames_emitted() const noexcept { return index_; }
    const Scenario& scenario() const noexcept { return scenario_; }

    // Haptic motor: stored only.
    void set_motor_pwm(std::uint8_t duty) noexcept { motor_pwm_ = duty; }
    std::uint8_t motor_pwm() const noexcept { return motor_pwm_; }

private:
    void drain_queue();

    Scenario scenario_;
    double rate_hz_;
    std::int64_t index_ = 0;

    std::uint8_t held_buttons_ = 0;
    std::optional<std::array<double, 2>> joy_override_;
    int pending_encoder_ = 0;
    std::optional<Pose> orient_override_;
    std::optional<Pose> previous_pose_;
    std::uint8_t motor_pwm_ = 0;

    std::mutex queue_mutex_;
    std::deque<PanelEvent> queue_;
};

}  // namespace mindcube::simdevice
