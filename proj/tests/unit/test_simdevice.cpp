#include <doctest.h>

#include <cmath>
#include <numbers>
#include <thread>

#include "mindcube/fusion/attitude.hpp"
#include "mindcube/simdevice/device.hpp"
#include "mindcube/simdevice/scenario.hpp"
#include "mindcube/wire/packet.hpp"

using namespace mindcube;
using namespace mindcube::simdevice;

namespace {

constexpr double kRad = 180.0 / std::numbers::pi;

double accel_norm(const SensorFrame& f) {
    return std::sqrt(f.accel_g(0) * f.accel_g(0) + f.accel_g(1) * f.accel_g(1) +
                     f.accel_g(2) * f.accel_g(2));
}

}  // namespace

TEST_CASE("scenario names") {
    CHECK(parse_scenario_kind("idle") == ScenarioKind::Idle);
    CHECK(parse_scenario_kind("fidget-burst") == ScenarioKind::FidgetBurst);
    CHECK(parse_scenario_kind("tilt-sweep") == ScenarioKind::TiltSweep);
    CHECK(parse_scenario_kind("joystick-circle") == ScenarioKind::JoystickCircle);
    CHECK_THROWS_AS(parse_scenario_kind("juggle"), UnknownScenario);
    CHECK(to_string(ScenarioKind::FidgetBurst) == "fidget-burst");
}

TEST_CASE("idle: gravity only, static inputs") {
    const Scenario idle{ScenarioKind::Idle, 1, {}};
    const SensorFrame f = step_scenario(idle, 0);
    CHECK(f.buttons == 0);
    CHECK(std::abs(accel_norm(f) - 1.0) < 0.01);
    CHECK(f.joy == std::array<std::int16_t, 2>{0, 0});
    CHECK(f.encoder_delta == 0);
    CHECK(f.gyro == std::array<std::int16_t, 3>{0, 0, 0});
    CHECK_THROWS_AS(step_scenario(idle, -1), SimDeviceError);
}

TEST_CASE("fidget-burst: buttons alternate inside a burst, rest outside") {
    const Scenario burst{ScenarioKind::FidgetBurst, 77, {}};
    CHECK_FALSE(in_burst(0));
    CHECK_FALSE(in_burst(39));
    CHECK(in_burst(40));
    CHECK(in_burst(79));
    CHECK_FALSE(in_burst(80));
    for (std::int64_t i = 40; i < 79; ++i) {
        const auto a = step_scenario(burst, i);
        const auto b = step_scenario(burst, i + 1);
        CHECK((a.buttons & 1u) != (b.buttons & 1u));
        CHECK(std::abs(a.joy_unit(0)) == doctest::Approx(0.8).epsilon(1e-4));
    }
    CHECK(step_scenario(burst, 10).buttons == 0);
}

TEST_CASE("tilt-sweep at quarter period reads pitch +80 degrees from gravity") {
    const Scenario tilt{ScenarioKind::TiltSweep, 3, {}};
    // 0.1 Hz at 20 Hz: quarter period = 2.5 s = frame 50.
    const SensorFrame f = step_scenario(tilt, 50);
    const auto att = fusion::accel_attitude({f.accel_g(0), f.accel_g(1), f.accel_g(2)});
    CHECK(std::abs(att.pitch * kRad - 80.0) < 0.5);
    CHECK(std::abs(att.roll * kRad) < 0.5);
}

TEST_CASE("forward kinematics: gravity projection") {
    const auto g = gravity_in_body(Pose{30.0 / kRad, 0.0, 0.0});
    CHECK(g[0] == doctest::Approx(-0.5));
    CHECK(g[1] == doctest::Approx(0.0));
    CHECK(g[2] == doctest::Approx(std::sqrt(3.0) / 2.0));
    const auto r = gravity_in_body(Pose{0.0, 45.0 / kRad, 1.0});
    CHECK(r[1] == doctest::Approx(std::sqrt(0.5)));
    CHECK(r[2] == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("determinism: same scenario and seed give identical bytes") {
    for (auto kind : {ScenarioKind::Idle, ScenarioKind::FidgetBurst, ScenarioKind::TiltSweep,
                      ScenarioKind::JoystickCircle}) {
        VirtualDevice a(Scenario{kind, 123, {}});
        VirtualDevice b(Scenario{kind, 123, {}});
        VirtualDevice c(Scenario{kind, 124, {}});
        bool any_difference = false;
        for (int i = 0; i < 300; ++i) {
            const auto fa = wire::encode_frame(a.next_frame());
            REQUIRE(fa == wire::encode_frame(b.next_frame()));
            any_difference = any_difference || fa != wire::encode_frame(c.next_frame());
        }
        // Every scenario carries seeded accelerometer noise.
        CHECK(any_difference);
    }
}

TEST_CASE("physical consistency outside bursts") {
    for (auto kind : {ScenarioKind::Idle, ScenarioKind::FidgetBurst, ScenarioKind::TiltSweep,
                      ScenarioKind::JoystickCircle}) {
        const Scenario s{kind, 9, {}};
        for (std::int64_t i = 0; i < 1200; ++i) {
            if (kind == ScenarioKind::FidgetBurst && in_burst(i)) continue;
            const double n = accel_norm(step_scenario(s, i));
            REQUIRE(n >= 0.7);
            REQUIRE(n <= 1.3);
        }
    }
}

TEST_CASE("stream: 20 Hz timestamps, wrapping seq, rate precondition") {
    VirtualDevice device(Scenario{ScenarioKind::Idle, 1, {}}, 20.0);
    SensorFrame previous = device.next_frame();
    CHECK(previous.seq == 0);
    CHECK(previous.timestamp_ms == 0);
    for (int i = 1; i < 600; ++i) {
        const SensorFrame f = device.next_frame();
        REQUIRE(f.timestamp_ms - previous.timestamp_ms == 50);
        REQUIRE(f.seq == static_cast<std::uint8_t>(previous.seq + 1));
        if (i == 256) CHECK(f.seq == 0);
        previous = f;
    }
    CHECK_THROWS_AS(VirtualDevice(Scenario{}, 0.0), SimDeviceError);
    CHECK_THROWS_AS(VirtualDevice(Scenario{}, 201.0), SimDeviceError);
    CHECK_NOTHROW(VirtualDevice(Scenario{}, 200.0));

    VirtualDevice fast(Scenario{}, 200.0);
    fast.next_frame();
    CHECK(fast.next_frame().timestamp_ms == 5);
}

TEST_CASE("bounded scenarios report exhaustion") {
    VirtualDevice device(Scenario{ScenarioKind::Idle, 1, 1.0}, 20.0);
    int n = 0;
    while (!device.exhausted()) {
        device.next_frame();
        ++n;
    }
    CHECK(n == 20);
}

TEST_CASE("panel events override the next frame") {
    VirtualDevice device(Scenario{ScenarioKind::Idle, 5, {}});
    device.next_frame();

    device.post(PanelEvent::button_down(2));
    CHECK(((device.next_frame().buttons >> 1) & 1u) == 1u);
    CHECK(((device.next_frame().buttons >> 1) & 1u) == 1u);
    device.post(PanelEvent::button_up(2));
    CHECK(device.next_frame().buttons == 0);

    device.post(PanelEvent::joy_set(1.0, 0.0));
    const auto joy = device.next_frame();
    CHECK(joy.joy[0] == 32767);
    CHECK(joy.joy[1] == 0);

    device.post(PanelEvent::encoder_step(1));
    device.post(PanelEvent::encoder_step(1));
    CHECK(device.next_frame().encoder_delta == 2);
    CHECK(device.next_frame().encoder_delta == 0);

    device.post(PanelEvent::orient_set(30.0, 0.0));
    const auto tilted = device.next_frame();
    CHECK(std::abs(tilted.accel_g(0) - (-0.5)) < 0.01);
    CHECK(std::abs(tilted.accel_g(1)) < 0.01);
    CHECK(std::abs(tilted.accel_g(2) - 0.866) < 0.01);
    // Finite-difference gyro: a 30 degree step within one 50 ms frame.
    CHECK(tilted.gyro_dps(1) == doctest::Approx(600.0).epsilon(0.01));
    CHECK(std::abs(device.next_frame().gyro_dps(1)) < 0.1);
}

TEST_CASE("invalid panel events are rejected") {
    VirtualDevice device(Scenario{});
    CHECK_THROWS_AS(device.post(PanelEvent::button_down(0)), InvalidEvent);
    CHECK_THROWS_AS(device.post(PanelEvent::button_down(5)), InvalidEvent);
    CHECK_THROWS_AS(device.post(PanelEvent::joy_set(1.2, 0.0)), InvalidEvent);
    CHECK_THROWS_AS(device.post(PanelEvent::joy_set(std::nan(""), 0.0)), InvalidEvent);
    CHECK_THROWS_AS(device.post(PanelEvent::encoder_step(3)), InvalidEvent);
    CHECK_THROWS_AS(device.post(PanelEvent::orient_set(95.0, 0.0)), InvalidEvent);
    CHECK(parse_panel_event_kind("joy_set") == PanelEventKind::JoySet);
    CHECK_THROWS_AS(parse_panel_event_kind("shake"), InvalidEvent);
}

TEST_CASE("events posted from another thread land before the next frame") {
    VirtualDevice device(Scenario{});
    std::thread producer([&] { device.post(PanelEvent::button_down(4)); });
    producer.join();
    CHECK(device.next_frame().button(4));
}

TEST_CASE("motor pwm is stored state only") {
    VirtualDevice device(Scenario{});
    device.set_motor_pwm(128);
    CHECK(device.motor_pwm() == 128);
    CHECK(device.next_frame() == step_scenario(Scenario{}, 0));
}
