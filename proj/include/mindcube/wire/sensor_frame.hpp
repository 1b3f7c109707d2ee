#pragma once

#include <array>
#include <cstdint>

namespace mindcube {

// Raw IMU scale factors (ICM-20948 full-scale settings used by the device).
inline constexpr double kAccelLsbPerG = 4096.0;     // +-8 g
inline constexpr double kGyroLsbPerDps = 16.4;      // +-2000 deg/s
inline constexpr double kMagMicroteslaPerLsb = 0.15;
inline constexpr double kJoyFullScale = 32767.0;

/// One 20 Hz reading of every input on the cube, in raw device units.
struct SensorFrame {
    std::uint8_t seq = 0;
    std::uint32_t timestamp_ms = 0;
    std::array<std::int16_t, 3> accel{};
    std::array<std::int16_t, 3> gyro{};
    std::array<std::int16_t, 3> mag{};
    std::array<std::int16_t, 2> joy{};
    std::uint8_t buttons = 0;  // bit0..bit3 = buttons 1..4
    std::int8_t encoder_delta = 0;

    bool operator==(const SensorFrame&) const = default;

    double accel_g(int axis) const { return accel[axis] / kAccelLsbPerG; }
    double gyro_dps(int axis) const { return gyro[axis] / kGyroLsbPerDps; }
    double mag_ut(int axis) const { return mag[axis] * kMagMicroteslaPerLsb; }
    double joy_unit(int axis) const { return joy[axis] / kJoyFullScale; }
    bool button(int index) const { return (buttons >> (index - 1)) & 1u; }
};

}  // namespace mindcube
