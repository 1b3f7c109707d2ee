#include "mindcube/sonify/control.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numbers>

#include "mindcube/common/text.hpp"

namespace mindcube::sonify {
namespace {

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

double bipolar_from_degrees(double radians) {
    const double degrees = finite_or_zero(radians) * 180.0 / std::numbers::pi;
    return std::clamp(degrees / 90.0 * kBipolarVolts, -kBipolarVolts, kBipolarVolts);
}

double unipolar(double unit) { return std::clamp(finite_or_zero(unit), 0.0, 1.0) * kUnipolarVolts; }

void append_fixed4(std::string& out, double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, 4);
    std::string_view s(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
    if (s == "-0.0000") s = "0.0000";
    out.append(s);
}

}  // namespace

ControlFrame control_frame(const fusion::Attitude& attitude, const SensorFrame& frame,
                           long long encoder_position, double activity,
                           const conditioning::Condition& condition) {
    ControlFrame cf;
    cf.seq = frame.seq;
    cf.pitch_v = bipolar_from_degrees(attitude.pitch);
    cf.roll_v = bipolar_from_degrees(attitude.roll);
    cf.joy_x_v = std::clamp(frame.joy_unit(0) * kBipolarVolts, -kBipolarVolts, kBipolarVolts);
    cf.joy_y_v = std::clamp(frame.joy_unit(1) * kBipolarVolts, -kBipolarVolts, kBipolarVolts);
    cf.gate1 = frame.button(1) ? kGateVolts : 0.0;
    cf.gate2 = frame.button(2) ? kGateVolts : 0.0;
    cf.gate3 = frame.button(3) ? kGateVolts : 0.0;
    cf.gate4 = frame.button(4) ? kGateVolts : 0.0;
    const long long step = ((encoder_position % kEncoderPositions) + kEncoderPositions) % kEncoderPositions;
    cf.encoder_step_v = static_cast<double>(step) / (kEncoderPositions - 1) * kUnipolarVolts;
    cf.activity_v = unipolar(activity);
    cf.condition_v = unipolar(condition.value);
    return cf;
}

ControlFrame ControlMapper::map(const fusion::Attitude& attitude, const SensorFrame& frame,
                                double activity, const conditioning::Condition& condition) {
    position_ += frame.encoder_delta;
    return control_frame(attitude, frame, position_, activity, condition);
}

std::string serialize_csv(const ControlFrame& f) {
    std::string out = std::to_string(f.seq);
    for (double v : {f.pitch_v, f.roll_v, f.joy_x_v, f.joy_y_v, f.gate1, f.gate2, f.gate3, f.gate4,
                     f.encoder_step_v, f.activity_v, f.condition_v}) {
        out.push_back(',');
        append_fixed4(out, v);
    }
    out.push_back('\n');
    return out;
}

ControlFrame parse_csv(std::string_view line) {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto parts = text::split(line, ',');
    if (parts.size() != kControlFields) {
        throw CsvError("expected 12 fields, got " + std::to_string(parts.size()));
    }
    ControlFrame f;
    const auto seq = text::parse_number<std::uint32_t>(parts[0]);
    if (!seq) throw CsvError("bad seq field '" + std::string(parts[0]) + "'");
    f.seq = *seq;
    std::array<double*, 11> fields{&f.pitch_v, &f.roll_v, &f.joy_x_v, &f.joy_y_v, &f.gate1,
                                   &f.gate2,   &f.gate3,  &f.gate4,   &f.encoder_step_v,
                                   &f.activity_v, &f.condition_v};
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto v = text::parse_number<double>(parts[i + 1]);
        if (!v) throw CsvError("bad field " + std::to_string(i + 1) + " '" + std::string(parts[i + 1]) + "'");
        *fields[i] = *v;
    }
    return f;
}

}  // namespace mindcube::sonify
