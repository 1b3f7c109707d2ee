#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

#include "mindcube/wire/sensor_frame.hpp"

namespace mindcube::fusion {

class DegenerateAccel : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Pitch in [-pi/2, pi/2], roll in (-pi, pi], radians.
struct Attitude {
    double pitch = 0.0;
    double roll = 0.0;
    std::uint32_t updated_at = 0;  // timestamp_ms of the last frame folded in

    bool operator==(const Attitude&) const = default;
};

inline constexpr double kDefaultAlpha = 0.98;
inline constexpr double kMinGravityG = 0.1;

/// Tilt from the gravity direction alone. Throws DegenerateAccel when
/// |accel| <= 0.1 g.
Attitude accel_attitude(const std::array<double, 3>& accel_g);

/// Wraps an angle into (-pi, pi].
double wrap_pi(double angle);

/// One complementary-filter step:
///   angle = alpha * (angle + rate * dt) + (1 - alpha) * accel_angle
/// gyro y is the pitch rate and gyro x the roll rate. Falls back to gyro-only
/// integration when the accelerometer is degenerate. dt is clamped to (0, 1].
Attitude fuse_step(const Attitude& state, const SensorFrame& frame, double dt,
                   double alpha = kDefaultAlpha);

/// Single-owner filter over a frame stream; derives dt from timestamps.
/// The first frame seeds the state from the accelerometer alone; if gravity
/// is not observable it is fused from the current state with the nominal dt.
class ComplementaryFilter {
public:
    explicit ComplementaryFilter(double alpha = kDefaultAlpha, double nominal_dt = 0.05);

    const Attitude& update(const SensorFrame& frame);
    const Attitude& state() const noexcept { return state_; }
    /// Forget the state; the next frame seeds it again.
    void reset() noexcept;
    /// Continue from `state`; the next frame uses the nominal dt.
    void reset(const Attitude& state) noexcept;
    double alpha() const noexcept { return alpha_; }

private:
    double alpha_;
    double nominal_dt_;
    Attitude state_;
    bool primed_ = false;
    bool seeded_ = false;
};

}  // namespace mindcube::fusion
