#include "mindcube/server/panel_protocol.hpp"

#include <cmath>

#include <json.hpp>

namespace mindcube::server {
namespace {

using nlohmann::json;
using simdevice::PanelEvent;
using simdevice::PanelEventKind;

double number_field(const json& j, const char* name, std::optional<double> fallback = std::nullopt) {
    const auto it = j.find(name);
    if (it == j.end()) {
        if (fallback) return *fallback;
        throw PanelMessageError(std::string("missing field '") + name + "'");
    }
    if (!it->is_number()) throw PanelMessageError(std::string("field '") + name + "' must be a number");
    return it->get<double>();
}

int integer_field(const json& j, const char* name) {
    const double v = number_field(j, name);
    if (v != std::floor(v) || std::abs(v) > 1e6) {
        throw PanelMessageError(std::string("field '") + name + "' must be an integer");
    }
    return static_cast<int>(v);
}

}  // namespace

PanelEvent parse_panel_message(std::string_view text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw PanelMessageError("malformed JSON");
    if (!j.is_object()) throw PanelMessageError("message must be a JSON object");
    const auto kind_it = j.find("kind");
    if (kind_it == j.end() || !kind_it->is_string()) throw PanelMessageError("missing string field 'kind'");

    PanelEvent event;
    try {
        event.kind = simdevice::parse_panel_event_kind(kind_it->get<std::string>());
    } catch (const simdevice::InvalidEvent& e) {
        throw PanelMessageError(e.what());
    }
    switch (event.kind) {
        case PanelEventKind::ButtonDown:
        case PanelEventKind::ButtonUp:
            event.button = integer_field(j, "index");
            break;
        case PanelEventKind::JoySet:
            event.joy_x = number_field(j, "x");
            event.joy_y = number_field(j, "y");
            break;
        case PanelEventKind::EncoderStep:
            event.encoder_steps = integer_field(j, "delta");
            break;
        case PanelEventKind::OrientSet:
            event.pitch_deg = number_field(j, "pitch");
            event.roll_deg = number_field(j, "roll");
            event.yaw_deg = number_field(j, "yaw", 0.0);
            break;
    }
    try {
        simdevice::validate(event);
    } catch (const simdevice::InvalidEvent& e) {
        throw PanelMessageError(e.what());
    }
    return event;
}

std::string error_message_json(std::string_view message) {
    return json{{"type", "error"}, {"message", std::string(message)}}.dump();
}

std::string telemetry_json(const Telemetry& t) {
    json j{
        {"type", "telemetry"},
        {"seq", t.seq},
        {"uptime_s", t.uptime_s},
        {"source", {{"connected", t.source_connected}, {"frames", t.frames}, {"frame_seq", t.frame_seq},
                    {"seq_gaps", t.seq_gaps}}},
        {"attitude", {{"pitch_deg", t.pitch_deg}, {"roll_deg", t.roll_deg}}},
        {"buttons", t.buttons},
        {"joystick", {{"x", t.joy_x}, {"y", t.joy_y}}},
        {"encoder_position", t.encoder_position},
        {"activity", t.activity},
        {"condition", t.condition},
        {"events", {{"accepted", t.events_accepted}, {"rejected", t.events_rejected}}},
        {"generation", {{"count", t.generations}, {"last_duration_s", t.last_generation_s},
                        {"last_rms", t.last_render_rms}, {"rate_hz", t.generation_rate_hz}}},
    };
    return j.dump();
}

}  // namespace mindcube::server
