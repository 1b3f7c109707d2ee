#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mindcube/fusion/attitude.hpp"
#include "mindcube/simdevice/device.hpp"
#include "support/oracles.hpp"

using namespace mindcube;
using namespace mindcube::fusion;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

SensorFrame frame_with(std::array<double, 3> accel_g, std::array<double, 3> gyro_dps) {
    SensorFrame f;
    for (int i = 0; i < 3; ++i) {
        f.accel[i] = simdevice::accel_to_raw(accel_g[i]);
        f.gyro[i] = simdevice::gyro_to_raw(gyro_dps[i]);
    }
    return f;
}

}  // namespace

TEST_CASE("accel_attitude examples") {
    auto a = accel_attitude({0.0, 0.0, 1.0});
    CHECK(a.pitch == 0.0);
    CHECK(a.roll == 0.0);
    a = accel_attitude({0.0, 0.7071, 0.7071});
    CHECK(a.roll == doctest::Approx(kPi / 4));
    a = accel_attitude({-0.5, 0.0, 0.8660});
    CHECK(a.pitch == doctest::Approx(kPi / 6).epsilon(1e-4));
    CHECK_THROWS_AS(accel_attitude({0.05, 0.0, 0.05}), DegenerateAccel);
    CHECK_THROWS_AS(accel_attitude({0.0, 0.0, 0.0}), DegenerateAccel);
}

TEST_CASE("fuse_step examples") {
    const Attitude rest{};
    const auto still = fuse_step(rest, frame_with({0, 0, 1}, {0, 0, 0}), 0.05);
    CHECK(still.pitch == 0.0);
    CHECK(still.roll == 0.0);

    // 10 deg/s is 164 raw counts exactly.
    SensorFrame turning = frame_with({0, 0, 1}, {0, 10.0, 0});
    REQUIRE(turning.gyro[1] == 164);
    const auto next = fuse_step(rest, turning, 0.05);
    CHECK(next.pitch / kDeg == doctest::Approx(0.49).epsilon(1e-9));
    CHECK(next.roll == 0.0);
}

TEST_CASE("static convergence is geometric with ratio alpha") {
    const double theta = 25.0 * kDeg;
    const SensorFrame f = frame_with({-std::sin(theta), 0.0, std::cos(theta)}, {0, 0, 0});
    const double target = accel_attitude({f.accel_g(0), f.accel_g(1), f.accel_g(2)}).pitch;
    Attitude state{};
    const double e0 = std::abs(state.pitch - target);
    for (int n = 1; n <= 400; ++n) {
        const double before = state.pitch - target;
        state = fuse_step(state, f, 0.05);
        const double after = state.pitch - target;
        REQUIRE(std::abs(after) <= std::pow(kDefaultAlpha, n) * e0 + 1e-9);
        if (n <= 30) CHECK(after / before == doctest::Approx(kDefaultAlpha).epsilon(1e-9));
    }
}

TEST_CASE("roll convergence across the +-pi seam") {
    // Gravity says roll = 179 deg; start from -179 deg. Short way round is 2 deg.
    const double target = 179.0 * kDeg;
    const SensorFrame f = frame_with({0.0, std::sin(target), std::cos(target)}, {0, 0, 0});
    Attitude state{0.0, -179.0 * kDeg, 0};
    state = fuse_step(state, f, 0.05);
    CHECK(std::abs(wrap_pi(state.roll - (-179.0 - 0.02 * 2.0) * kDeg)) < 0.01 * kDeg);
}

TEST_CASE("gyro-only integration when accel is degenerate") {
    const double rate_dps = 12.195121951219512;  // 200 raw counts
    SensorFrame f = frame_with({0, 0, 0}, {rate_dps, rate_dps, 0});
    REQUIRE(f.gyro[1] == 200);
    const double r = f.gyro_dps(1) * kDeg;
    Attitude state{};
    const int steps = 100;
    for (int i = 0; i < steps; ++i) state = fuse_step(state, f, 0.05);
    CHECK(std::abs(state.pitch - steps * r * 0.05) < 1e-9);
    CHECK(std::abs(state.roll - steps * r * 0.05) < 1e-9);
}

TEST_CASE("range safety on fuzzed frames and states") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> any_angle(-10.0, 10.0);
    std::uniform_real_distribution<double> any_dt(-0.5, 2.0);
    Attitude state{};
    for (int i = 0; i < 100000; ++i) {
        const SensorFrame f = testing::random_frame(rng);
        if (i % 10 == 0) state = Attitude{any_angle(rng), any_angle(rng), 0};
        if (i % 1000 == 0) state = Attitude{std::nan(""), INFINITY, 0};
        state = fuse_step(state, f, any_dt(rng));
        REQUIRE(std::isfinite(state.pitch));
        REQUIRE(std::isfinite(state.roll));
        REQUIRE(state.pitch >= -kPi / 2);
        REQUIRE(state.pitch <= kPi / 2);
        REQUIRE(state.roll > -kPi);
        REQUIRE(state.roll <= kPi);
    }
}

TEST_CASE("tilt-sweep tracking over 30 s stays within 1 degree") {
    simdevice::VirtualDevice device(
        simdevice::Scenario{simdevice::ScenarioKind::TiltSweep, 17, {}});
    ComplementaryFilter filter;
    double worst = 0.0;
    for (int i = 0; i < 600; ++i) {
        const SensorFrame f = device.next_frame();
        const Attitude& att = filter.update(f);
        const auto truth = simdevice::scenario_pose(simdevice::ScenarioKind::TiltSweep, i * 0.05);
        worst = std::max(worst, std::abs(att.pitch - truth.pitch) / kDeg);
    }
    MESSAGE("max pitch error " << worst << " deg");
    CHECK(worst < 1.0);
}

TEST_CASE("filter derives dt from timestamps") {
    ComplementaryFilter filter;
    SensorFrame f = frame_with({0, 0, 1}, {0, 10.0, 0});
    f.timestamp_ms = 1000;
    filter.update(f);  // first frame seeds from gravity only
    const double after_first = filter.state().pitch;
    CHECK(after_first == 0.0);
    f.timestamp_ms = 1100;  // 100 ms later
    filter.update(f);
    const double expected = kDefaultAlpha * (after_first + 10.0 * kDeg * 0.1);
    CHECK(filter.state().pitch == doctest::Approx(expected).epsilon(1e-12));
    CHECK(filter.state().updated_at == 1100);

    // An explicit state is continued with the nominal dt.
    filter.reset(Attitude{});
    f.timestamp_ms = 5000;
    filter.update(f);
    CHECK(filter.state().pitch == doctest::Approx(kDefaultAlpha * 10.0 * kDeg * 0.05).epsilon(1e-12));
}

TEST_CASE("filter seeds from the accelerometer") {
    ComplementaryFilter filter;
    const double theta = 40.0 * kDeg;
    const SensorFrame f = frame_with({-std::sin(theta), 0.0, std::cos(theta)}, {0, 50.0, 0});
    CHECK(filter.update(f).pitch == doctest::Approx(theta).epsilon(1e-3));
    filter.reset();
    CHECK(filter.update(f).pitch == doctest::Approx(theta).epsilon(1e-3));
}
