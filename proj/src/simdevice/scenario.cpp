#include "mindcube/simdevice/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mindcube::simdevice {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Local field roughly matching mid-latitudes: 20 uT north, 40 uT down.
constexpr std::array<double, 3> kEarthFieldWorld{20.0, 0.0, -40.0};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::int16_t saturate(double value) {
    const double r = std::nearbyint(value);
    return static_cast<std::int16_t>(std::clamp(r, -32768.0, 32767.0));
}

// Rows of R^T for R = Rz(yaw) * Ry(pitch) * Rx(roll).
std::array<double, 3> world_to_body(const Pose& p, const std::array<double, 3>& v) {
    const double cr = std::cos(p.roll), sr = std::sin(p.roll);
    const double cp = std::cos(p.pitch), sp = std::sin(p.pitch);
    const double cy = std::cos(p.yaw), sy = std::sin(p.yaw);
    const double r00 = cy * cp, r01 = sy * cp, r02 = -sp;
    const double r10 = cy * sp * sr - sy * cr, r11 = sy * sp * sr + cy * cr, r12 = cp * sr;
    const double r20 = cy * sp * cr + sy * sr, r21 = sy * sp * cr - cy * sr, r22 = cp * cr;
    return {r00 * v[0] + r01 * v[1] + r02 * v[2], r10 * v[0] + r11 * v[1] + r12 * v[2],
            r20 * v[0] + r21 * v[1] + r22 * v[2]};
}

}  // namespace

ScenarioKind parse_scenario_kind(std::string_view name) {
    if (name == "idle") return ScenarioKind::Idle;
    if (name == "fidget-burst") return ScenarioKind::FidgetBurst;
    if (name == "tilt-sweep") return ScenarioKind::TiltSweep;
    if (name == "joystick-circle") return ScenarioKind::JoystickCircle;
    throw UnknownScenario("unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Idle: return "idle";
        case ScenarioKind::FidgetBurst: return "fidget-burst";
        case ScenarioKind::TiltSweep: return "tilt-sweep";
        case ScenarioKind::JoystickCircle: return "joystick-circle";
    }
    return "unknown";
}

std::array<double, 3> gravity_in_body(const Pose& pose) {
    return world_to_body(pose, {0.0, 0.0, 1.0});
}

std::array<double, 3> earth_field_in_body(const Pose& pose) {
    return world_to_body(pose, kEarthFieldWorld);
}

std::array<double, 3> body_rates_dps(const Pose& from, const Pose& to, double dt) {
    const double roll_rate = (to.roll - from.roll) / dt;
    const double pitch_rate = (to.pitch - from.pitch) / dt;
    const double yaw_rate = (to.yaw - from.yaw) / dt;
    const double cr = std::cos(to.roll), sr = std::sin(to.roll);
    const double cp = std::cos(to.pitch), sp = std::sin(to.pitch);
    const double p = roll_rate - yaw_rate * sp;
    const double q = pitch_rate * cr + yaw_rate * sr * cp;
    const double r = -pitch_rate * sr + yaw_rate * cr * cp;
    return {p / kDeg, q / kDeg, r / kDeg};
}

Pose scenario_pose(ScenarioKind kind, double t) {
    Pose pose;
    if (kind == ScenarioKind::TiltSweep) {
        pose.pitch = kTiltAmplitudeDeg * kDeg *
                     std::sin(2.0 * std::numbers::pi * kTiltFrequencyHz * t);
    }
    return pose;
}

bool in_burst(std::int64_t index, double rate_hz) {
    const auto half = static_cast<std::int64_t>(std::llround(kBurstPhaseSeconds * rate_hz));
    return (index / half) % 2 == 1;
}

std::int16_t accel_to_raw(double g) { return saturate(g * kAccelLsbPerG); }
std::int16_t gyro_to_raw(double dps) { return saturate(dps * kGyroLsbPerDps); }
std::int16_t mag_to_raw(double microtesla) { return saturate(microtesla / kMagMicroteslaPerLsb); }
std::int16_t joy_to_raw(double unit) { return saturate(std::clamp(unit, -1.0, 1.0) * kJoyFullScale); }

std::uint32_t timestamp_for_index(std::int64_t index, double rate_hz) {
    const auto ms = std::llround(static_cast<double>(index) * 1000.0 / rate_hz);
    return static_cast<std::uint32_t>(static_cast<std::uint64_t>(ms));
}

SensorFrame step_scenario(const Scenario& scenario, std::int64_t index, double rate_hz) {
    if (index < 0) throw SimDeviceError("frame index must be non-negative");

    const double dt = 1.0 / rate_hz;
    const double t = static_cast<double>(index) * dt;
    std::mt19937_64 rng(splitmix64(scenario.seed ^ splitmix64(static_cast<std::uint64_t>(index))));
    std::normal_distribution<double> normal(0.0, 1.0);

    const bool burst = scenario.kind == ScenarioKind::FidgetBurst && in_burst(index, rate_hz);
    const double accel_sigma = burst ? kBurstAccelNoiseG : kIdleAccelNoiseG;

    const Pose pose = scenario_pose(scenario.kind, t);
    const Pose previous = scenario_pose(scenario.kind, t - dt);
    const auto gravity = gravity_in_body(pose);
    const auto rates = body_rates_dps(previous, pose, dt);
    const auto field = earth_field_in_body(pose);

    SensorFrame frame;
    frame.seq = static_cast<std::uint8_t>(index & 0xFF);
    frame.timestamp_ms = timestamp_for_index(index, rate_hz);
    for (int axis = 0; axis < 3; ++axis) {
        frame.accel[axis] = accel_to_raw(gravity[axis] + accel_sigma * normal(rng));
    }
    for (int axis = 0; axis < 3; ++axis) {
        const double jitter = burst ? kBurstGyroNoiseDps * normal(rng) : 0.0;
        frame.gyro[axis] = gyro_to_raw(rates[axis] + jitter);
    }
    for (int axis = 0; axis < 3; ++axis) {
        frame.mag[axis] = mag_to_raw(field[axis]);
    }

    if (burst) {
        frame.buttons = (index % 2 == 0) ? 0b0101 : 0b1010;
        const double jx = ((index / 2) % 2 == 0) ? kBurstJoyLevel : -kBurstJoyLevel;
        const double jy = (((index + 1) / 2) % 2 == 0) ? kBurstJoyLevel : -kBurstJoyLevel;
        frame.joy = {joy_to_raw(jx), joy_to_raw(jy)};
        std::uniform_int_distribution<int> roll_ticks(-32, 32);
        frame.encoder_delta = static_cast<std::int8_t>(roll_ticks(rng));
    } else if (scenario.kind == ScenarioKind::JoystickCircle) {
        const double phase = 2.0 * std::numbers::pi * kCircleFrequencyHz * t;
        frame.joy = {joy_to_raw(kCircleRadius * std::cos(phase)),
                     joy_to_raw(kCircleRadius * std::sin(phase))};
    }
    return frame;
}

}  // namespace mindcube::simdevice
