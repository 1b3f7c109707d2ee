#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mindcube/wire/sensor_frame.hpp"

namespace mindcube::simdevice {

class SimDeviceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnknownScenario : public SimDeviceError {
public:
    using SimDeviceError::SimDeviceError;
};

enum class ScenarioKind { Idle, FidgetBurst, TiltSweep, JoystickCircle };

/// Throws UnknownScenario.
ScenarioKind parse_scenario_kind(std::string_view name);
std::string_view to_string(ScenarioKind kind);

struct Scenario {
    ScenarioKind kind = ScenarioKind::Idle;
    std::uint64_t seed = 0;
    std::optional<double> duration_s;  // unbounded when empty
};

inline constexpr double kDefaultRateHz = 20.0;

// Scenario parameters.
inline constexpr double kIdleAccelNoiseG = 0.002;
inline constexpr double kBurstAccelNoiseG = 0.15;
inline constexpr double kBurstGyroNoiseDps = 150.0;
inline constexpr double kBurstPhaseSeconds = 2.0;  // idle and burst halves
inline constexpr double kBurstJoyLevel = 0.8;
inline constexpr double kTiltAmplitudeDeg = 80.0;
inline constexpr double kTiltFrequencyHz = 0.1;
inline constexpr double kCircleRadius = 0.9;
inline constexpr double kCircleFrequencyHz = 0.5;

/// Orientation in radians (ZYX Euler angles).
struct Pose {
    double pitch = 0.0;
    double roll = 0.0;
    double yaw = 0.0;
};

/// Specific force in body axes, in g, for a device at rest in `pose`.
std::array<double, 3> gravity_in_body(const Pose& pose);

/// Earth field in body axes, in microtesla.
std::array<double, 3> earth_field_in_body(const Pose& pose);

/// Body angular rates (deg/s) that carry `from` to `to` over `dt` seconds,
/// using the mean Euler-angle rates over the interval.
std::array<double, 3> body_rates_dps(const Pose& from, const Pose& to, double dt);

/// Ground-truth orientation of a scenario at time t seconds.
Pose scenario_pose(ScenarioKind kind, double t);

/// Whether `index` falls in a high-activity half of the fidget-burst cycle.
bool in_burst(std::int64_t index, double rate_hz = kDefaultRateHz);

/// Deterministic frame `index` of a scenario: identical (scenario, index, rate)
/// always yields an identical frame. Throws SimDeviceError on a negative index.
SensorFrame step_scenario(const Scenario& scenario, std::int64_t index,
                          double rate_hz = kDefaultRateHz);

/// Helpers converting physical units to saturated raw counts.
std::int16_t accel_to_raw(double g);
std::int16_t gyro_to_raw(double dps);
std::int16_t mag_to_raw(double microtesla);
std::int16_t joy_to_raw(double unit);

std::uint32_t timestamp_for_index(std::int64_t index, double rate_hz);

}  // namespace mindcube::simdevice
