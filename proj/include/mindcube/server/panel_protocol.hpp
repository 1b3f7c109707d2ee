#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mindcube/simdevice/device.hpp"

namespace mindcube::server {

class PanelMessageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One panel message, e.g. {"kind":"button_down","index":2}.
/// Throws PanelMessageError (bad JSON, unknown kind, missing or invalid field).
simdevice::PanelEvent parse_panel_message(std::string_view text);

std::string error_message_json(std::string_view message);

/// Snapshot pushed to panels at the telemetry rate.
struct Telemetry {
    std::uint64_t seq = 0;
    double uptime_s = 0.0;
    bool source_connected = false;
    std::uint64_t frames = 0;
    int frame_seq = -1;
    std::uint64_t seq_gaps = 0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    std::array<bool, 4> buttons{};
    double joy_x = 0.0;
    double joy_y = 0.0;
    long long encoder_position = 0;
    double activity = 0.0;
    double condition = 0.0;
    std::uint64_t events_accepted = 0;
    std::uint64_t events_rejected = 0;
    std::uint64_t generations = 0;
    double last_generation_s = 0.0;
    double last_render_rms = 0.0;
    double generation_rate_hz = 0.0;
};

std::string telemetry_json(const Telemetry& t);

}  // namespace mindcube::server
