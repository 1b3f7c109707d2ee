#include "mindcube/fusion/attitude.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mindcube::fusion {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

double sanitize(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

double wrap_pi(double angle) {
    if (!std::isfinite(angle)) return 0.0;
    double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
    if (wrapped <= -kPi) wrapped += 2.0 * kPi;
    return wrapped;
}

Attitude accel_attitude(const std::array<double, 3>& a) {
    const double norm = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    if (!(norm > kMinGravityG)) {
        throw DegenerateAccel("gravity not observable: |accel| <= 0.1 g");
    }
    Attitude att;
    att.pitch = std::atan2(-a[0], std::sqrt(a[1] * a[1] + a[2] * a[2]));
    att.roll = wrap_pi(std::atan2(a[1], a[2]));
    return att;
}

Attitude fuse_step(const Attitude& state, const SensorFrame& frame, double dt, double alpha) {
    dt = std::clamp(sanitize(dt), 1e-6, 1.0);
    const double pitch_rate = frame.gyro_dps(1) * kDeg;
    const double roll_rate = frame.gyro_dps(0) * kDeg;

    const double pitch0 = std::clamp(sanitize(state.pitch), -kPi / 2, kPi / 2);
    const double roll0 = wrap_pi(sanitize(state.roll));
    const double pitch_pred = pitch0 + pitch_rate * dt;
    const double roll_pred = roll0 + roll_rate * dt;

    Attitude next;
    next.updated_at = frame.timestamp_ms;
    try {
        const Attitude measured =
            accel_attitude({frame.accel_g(0), frame.accel_g(1), frame.accel_g(2)});
        next.pitch = alpha * pitch_pred + (1.0 - alpha) * measured.pitch;
        // Take the accelerometer roll on the same branch as the prediction so
        // the blend does not cut across the +-pi seam.
        double roll_meas = measured.roll;
        if (roll_meas - roll_pred > kPi) roll_meas -= 2.0 * kPi;
        if (roll_meas - roll_pred < -kPi) roll_meas += 2.0 * kPi;
        next.roll = alpha * roll_pred + (1.0 - alpha) * roll_meas;
    } catch (const DegenerateAccel&) {
        next.pitch = pitch_pred;
        next.roll = roll_pred;
    }
    next.pitch = std::clamp(next.pitch, -kPi / 2, kPi / 2);
    next.roll = wrap_pi(next.roll);
    return next;
}

ComplementaryFilter::ComplementaryFilter(double alpha, double nominal_dt)
    : alpha_(alpha), nominal_dt_(nominal_dt) {}

const Attitude& ComplementaryFilter::update(const SensorFrame& frame) {
    if (!seeded_) {
        seeded_ = true;
        try {
            state_ = accel_attitude({frame.accel_g(0), frame.accel_g(1), frame.accel_g(2)});
            state_.updated_at = frame.timestamp_ms;
            primed_ = true;
            return state_;
        } catch (const DegenerateAccel&) {
        }
    }
    double dt = nominal_dt_;
    if (primed_) {
        const std::uint32_t delta = frame.timestamp_ms - state_.updated_at;
        if (delta > 0 && delta <= 1000) dt = delta / 1000.0;
    }
    state_ = fuse_step(state_, frame, dt, alpha_);
    primed_ = true;
    return state_;
}

void ComplementaryFilter::reset() noexcept {
    state_ = Attitude{};
    primed_ = false;
    seeded_ = false;
}

void ComplementaryFilter::reset(const Attitude& state) noexcept {
    state_ = state;
    primed_ = false;
    seeded_ = true;
}

}  // namespace mindcube::fusion
