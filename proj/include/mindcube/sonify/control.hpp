#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mindcube/conditioning/activity.hpp"
#include "mindcube/fusion/attitude.hpp"
#include "mindcube/wire/sensor_frame.hpp"

namespace mindcube::sonify {

// Modular-synth voltage conventions.
inline constexpr double kBipolarVolts = 5.0;   // pitch, roll, joystick: [-5, 5]
inline constexpr double kUnipolarVolts = 10.0; // encoder, activity, condition: [0, 10]
inline constexpr double kGateVolts = 10.0;
inline constexpr int kEncoderPositions = 16;
inline constexpr std::size_t kControlFields = 12;

/// One line of the control-voltage stream.
struct ControlFrame {
    std::uint32_t seq = 0;
    double pitch_v = 0.0;
    double roll_v = 0.0;
    double joy_x_v = 0.0;
    double joy_y_v = 0.0;
    double gate1 = 0.0;
    double gate2 = 0.0;
    double gate3 = 0.0;
    double gate4 = 0.0;
    double encoder_step_v = 0.0;
    double activity_v = 0.0;
    double condition_v = 0.0;

    bool operator==(const ControlFrame&) const = default;
};

/// Pure mapping. `encoder_position` is the running disk position (any
/// integer; reduced mod 16). seq is taken from the sensor frame.
ControlFrame control_frame(const fusion::Attitude& attitude, const SensorFrame& frame,
                           long long encoder_position, double activity,
                           const conditioning::Condition& condition);

/// Tracks the running encoder position across frames.
class ControlMapper {
public:
    ControlFrame map(const fusion::Attitude& attitude, const SensorFrame& frame, double activity,
                     const conditioning::Condition& condition);
    long long encoder_position() const noexcept { return position_; }

private:
    long long position_ = 0;
};

/// "seq,f1,...,f11\n" with 4 fractional digits, '.' separator, no spaces.
std::string serialize_csv(const ControlFrame& frame);

class CsvError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parses one line (trailing newline optional). Throws CsvError.
ControlFrame parse_csv(std::string_view line);

}  // namespace mindcube::sonify
