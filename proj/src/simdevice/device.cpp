#include "mindcube/simdevice/device.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace mindcube::simdevice {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

PanelEvent PanelEvent::button_down(int index) {
    PanelEvent e;
    e.kind = PanelEventKind::ButtonDown;
    e.button = index;
    return e;
}

PanelEvent PanelEvent::button_up(int index) {
    PanelEvent e;
    e.kind = PanelEventKind::ButtonUp;
    e.button = index;
    return e;
}

PanelEvent PanelEvent::joy_set(double x, double y) {
    PanelEvent e;
    e.kind = PanelEventKind::JoySet;
    e.joy_x = x;
    e.joy_y = y;
    return e;
}

PanelEvent PanelEvent::encoder_step(int steps) {
    PanelEvent e;
    e.kind = PanelEventKind::EncoderStep;
    e.encoder_steps = steps;
    return e;
}

PanelEvent PanelEvent::orient_set(double pitch_deg, double roll_deg, double yaw_deg) {
    PanelEvent e;
    e.kind = PanelEventKind::OrientSet;
    e.pitch_deg = pitch_deg;
    e.roll_deg = roll_deg;
    e.yaw_deg = yaw_deg;
    return e;
}

std::string_view to_string(PanelEventKind kind) {
    switch (kind) {
        case PanelEventKind::ButtonDown: return "button_down";
        case PanelEventKind::ButtonUp: return "button_up";
        case PanelEventKind::JoySet: return "joy_set";
        case PanelEventKind::EncoderStep: return "encoder_step";
        case PanelEventKind::OrientSet: return "orient_set";
    }
    return "unknown";
}

PanelEventKind parse_panel_event_kind(std::string_view name) {
    for (auto kind : {PanelEventKind::ButtonDown, PanelEventKind::ButtonUp,
                      PanelEventKind::JoySet, PanelEventKind::EncoderStep,
                      PanelEventKind::OrientSet}) {
        if (to_string(kind) == name) return kind;
    }
    throw InvalidEvent("unknown event kind '" + std::string(name) + "'");
}

void validate(const PanelEvent& event) {
    switch (event.kind) {
        case PanelEventKind::ButtonDown:
        case PanelEventKind::ButtonUp:
            if (event.button < 1 || event.button > 4) {
                throw InvalidEvent("button index must be 1..4, got " +
                                   std::to_string(event.button));
            }
            break;
        case PanelEventKind::JoySet:
            if (!finite(event.joy_x) || !finite(event.joy_y) || std::abs(event.joy_x) > 1.0 ||
                std::abs(event.joy_y) > 1.0) {
                throw InvalidEvent("joystick values must lie in [-1, 1]");
            }
            break;
        case PanelEventKind::EncoderStep:
            if (event.encoder_steps != 1 && event.encoder_steps != -1) {
                throw InvalidEvent("encoder steps must be +1 or -1");
            }
            break;
        case PanelEventKind::OrientSet:
            if (!finite(event.pitch_deg) || !finite(event.roll_deg) || !finite(event.yaw_deg) ||
                std::abs(event.pitch_deg) > 90.0 || std::abs(event.roll_deg) > 180.0 ||
                std::abs(event.yaw_deg) > 180.0) {
                throw InvalidEvent("orientation out of range (|pitch|<=90, |roll|,|yaw|<=180)");
            }
            break;
    }
}

VirtualDevice::VirtualDevice(Scenario scenario, double rate_hz)
    : scenario_(scenario), rate_hz_(rate_hz) {
    if (!(rate_hz >= 1.0 && rate_hz <= 200.0)) {
        throw SimDeviceError("stream rate must lie in [1, 200] Hz");
    }
}

void VirtualDevice::post(const PanelEvent& event) {
    validate(event);
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(event);
}

void VirtualDevice::apply_panel_event(const PanelEvent& event) {
    validate(event);
    switch (event.kind) {
        case PanelEventKind::ButtonDown:
            held_buttons_ |= static_cast<std::uint8_t>(1u << (event.button - 1));
            break;
        case PanelEventKind::ButtonUp:
            held_buttons_ &= static_cast<std::uint8_t>(~(1u << (event.button - 1)));
            break;
        case PanelEventKind::JoySet:
            joy_override_ = std::array<double, 2>{event.joy_x, event.joy_y};
            break;
        case PanelEventKind::EncoderStep:
            pending_encoder_ += event.encoder_steps;
            break;
        case PanelEventKind::OrientSet:
            orient_override_ = Pose{event.pitch_deg * kDeg, event.roll_deg * kDeg,
                                    event.yaw_deg * kDeg};
            break;
    }
}

void VirtualDevice::drain_queue() {
    std::deque<PanelEvent> pending;
    {
        std::lock_guard lock(queue_mutex_);
        pending.swap(queue_);
    }
    for (const auto& event : pending) apply_panel_event(event);
}

bool VirtualDevice::exhausted() const {
    if (!scenario_.duration_s) return false;
    return static_cast<double>(index_) >= *scenario_.duration_s * rate_hz_ - 1e-9;
}

SensorFrame VirtualDevice::next_frame() {
    drain_queue();

    const double dt = period_s();
    const double t = static_cast<double>(index_) * dt;
    SensorFrame frame = step_scenario(scenario_, index_, rate_hz_);

    Pose pose = scenario_pose(scenario_.kind, t);
    if (orient_override_) {
        pose = *orient_override_;
        const Pose previous = previous_pose_.value_or(pose);
        std::mt19937_64 rng(scenario_.seed ^ (0xA5A5A5A5ull + static_cast<std::uint64_t>(index_)));
        std::normal_distribution<double> normal(0.0, kIdleAccelNoiseG);
        const auto gravity = gravity_in_body(pose);
        const auto rates = body_rates_dps(previous, pose, dt);
        const auto field = earth_field_in_body(pose);
        for (int axis = 0; axis < 3; ++axis) {
            frame.accel[axis] = accel_to_raw(gravity[axis] + normal(rng));
            frame.gyro[axis] = gyro_to_raw(rates[axis]);
            frame.mag[axis] = mag_to_raw(field[axis]);
        }
    }
    previous_pose_ = pose;

    frame.buttons |= held_buttons_;
    if (joy_override_) {
        frame.joy = {joy_to_raw((*joy_override_)[0]), joy_to_raw((*joy_override_)[1])};
    }
    if (pending_encoder_ != 0) {
        const int delta = std::clamp(frame.encoder_delta + pending_encoder_, -128, 127);
        frame.encoder_delta = static_cast<std::int8_t>(delta);
        pending_encoder_ = 0;
    }

    ++index_;
    return frame;
}

}  // namespace mindcube::simdevice
