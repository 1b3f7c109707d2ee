#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mindcube/conditioning/activity.hpp"
#include "mindcube/simdevice/scenario.hpp"
#include "support/oracles.hpp"

using namespace mindcube;
using namespace mindcube::conditioning;

namespace {

std::vector<SensorFrame> scenario_window(simdevice::ScenarioKind kind, std::int64_t first,
                                         std::size_t n, std::uint64_t seed = 1) {
    std::vector<SensorFrame> w;
    for (std::size_t i = 0; i < n; ++i) {
        w.push_back(simdevice::step_scenario({kind, seed, {}}, first + static_cast<std::int64_t>(i)));
    }
    return w;
}

ChannelStats stats_with(std::size_t channel, double sigma) {
    ChannelStats s;
    s.sigma[channel] = sigma;
    return s;
}

}  // namespace

TEST_CASE("normalized channel order and scales") {
    SensorFrame f;
    f.accel = {4096, -8192, 32767};
    f.gyro = {164, 0, -164};
    f.mag = {4900, 0, -490};
    f.joy = {32767, -32767};
    f.buttons = 0b1001;
    f.encoder_delta = -127;
    const auto v = normalized_channels(f);
    CHECK(v[kAx] == doctest::Approx(1.0 / 8.0));
    CHECK(v[kAy] == doctest::Approx(-2.0 / 8.0));
    CHECK(v[kGx] == doctest::Approx(10.0 / 2000.0));
    CHECK(v[kMx] == doctest::Approx(1.0));
    CHECK(v[kMz] == doctest::Approx(-0.1));
    CHECK(v[kJx] == 1.0);
    CHECK(v[kJy] == -1.0);
    CHECK(v[kB1] == 1.0);
    CHECK(v[kB2] == 0.0);
    CHECK(v[kB4] == 1.0);
    CHECK(v[kEnc] == -1.0);
    CHECK(channel_name(kEnc) == "enc");
}

TEST_CASE("channel_std examples") {
    ActivityConfig config;
    std::vector<SensorFrame> constant(config.window_frames);
    for (auto& f : constant) f.accel = {10, 20, 4096};
    const auto zero = channel_std(constant, config);
    for (double s : zero.sigma) CHECK(s == 0.0);

    std::vector<SensorFrame> alternating(config.window_frames);
    for (std::size_t i = 0; i < alternating.size(); ++i) alternating[i].buttons = i % 2;
    CHECK(channel_std(alternating, config).sigma[kB1] == 0.5);

    std::vector<SensorFrame> sine(config.window_frames), sine2(config.window_frames);
    for (std::size_t i = 0; i < sine.size(); ++i) {
        const double phase = 2.0 * 3.141592653589793 * static_cast<double>(i) / 20.0;
        sine[i].accel[0] = static_cast<std::int16_t>(1000 * std::sin(phase) > 0 ? 1000 : -1000);
        sine2[i].accel[0] = static_cast<std::int16_t>(2 * sine[i].accel[0]);
    }
    CHECK(channel_std(sine2, config).sigma[kAx] ==
          doctest::Approx(2.0 * channel_std(sine, config).sigma[kAx]));

    CHECK_THROWS_AS(channel_std(std::vector<SensorFrame>(10), config), WindowTooShort);
    ActivityConfig tiny;
    tiny.window_frames = 1;
    CHECK_THROWS_AS(channel_std(std::vector<SensorFrame>(1), tiny), WindowTooShort);
}

TEST_CASE("activity_score examples") {
    ActivityConfig config;
    CHECK(activity_score(ChannelStats{}, config) == 0.0);
    CHECK(activity_score(stats_with(kB1, 0.5), config) == doctest::Approx(0.5 / 6.0));
    CHECK(activity_score(stats_with(kJx, 100.0), config) == 1.0);
}

TEST_CASE("rms_condition polarity") {
    ActivityConfig config;
    CHECK(rms_condition(0.0, config).value == 1.0);
    CHECK(rms_condition(1.0, config).value == 0.0);
    config.polarity = Polarity::Direct;
    CHECK(rms_condition(0.3, config).value == 0.3);
}

TEST_CASE("scenario activity: idle is quiet, bursts are loud") {
    ActivityConfig config;
    const auto idle = scenario_window(simdevice::ScenarioKind::Idle, 0, 60);
    const double idle_score = activity_score(channel_std(idle, config), config);
    // A window ending at the end of a burst: 20 idle frames then 40 burst frames.
    const auto burst = scenario_window(simdevice::ScenarioKind::FidgetBurst, 20, 60);
    const double burst_score = activity_score(channel_std(burst, config), config);
    MESSAGE("idle " << idle_score << ", burst " << burst_score);
    CHECK(idle_score < 0.02);
    CHECK(burst_score > 0.5);
}

TEST_CASE("property: monotone in each sigma, shift invariant, clamped") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ActivityConfig config;
    config.normalizer = 40.0;  // keep scores below the clamp
    for (int trial = 0; trial < 2000; ++trial) {
        ChannelStats s;
        for (double& v : s.sigma) v = unit(rng);
        const double base = activity_score(s, config);
        const std::size_t ch = rng() % kChannels;
        ChannelStats bumped = s;
        bumped.sigma[ch] += unit(rng);
        REQUIRE(activity_score(bumped, config) >= base);
    }

    std::uniform_real_distribution<double> wild(-1e6, 1e6);
    for (int trial = 0; trial < 2000; ++trial) {
        ChannelStats s;
        for (double& v : s.sigma) v = wild(rng);
        const double score = activity_score(s, ActivityConfig{});
        REQUIRE(score >= 0.0);
        REQUIRE(score <= 1.0);
        const double c = rms_condition(wild(rng), ActivityConfig{}).value;
        REQUIRE(c >= 0.0);
        REQUIRE(c <= 1.0);
    }

    // Adding a constant to a channel leaves its sigma unchanged.
    ActivityConfig defaults;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SensorFrame> w(defaults.window_frames);
        for (auto& f : w) f = testing::random_frame(rng);
        for (auto& f : w) f.joy[0] = static_cast<std::int16_t>(f.joy[0] / 2);
        auto shifted = w;
        for (auto& f : shifted) f.joy[0] = static_cast<std::int16_t>(f.joy[0] + 1000);
        const auto a = channel_std(w, defaults).sigma[kJx];
        const auto b = channel_std(shifted, defaults).sigma[kJx];
        REQUIRE(b == doctest::Approx(a).epsilon(1e-12));
    }
}

TEST_CASE("frame window keeps the most recent frames in order") {
    FrameWindow window(4);
    for (std::uint8_t i = 0; i < 6; ++i) {
        SensorFrame f;
        f.seq = i;
        window.push(f);
    }
    CHECK(window.full());
    const auto snap = window.snapshot();
    REQUIRE(snap.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(snap[i].seq == i + 2);
    CHECK_THROWS_AS(FrameWindow(0), ConfigError);
}

TEST_CASE("config keys") {
    ActivityConfig c;
    CHECK(apply_config_value(c, "activity.window_frames", "40"));
    CHECK(c.window_frames == 40);
    CHECK(apply_config_value(c, "activity.weights", "1,1,1, 0,0,0, 0,0,0, 2,2, 1,1,1,1, 0.5"));
    CHECK(c.weights[kJx] == 2.0);
    CHECK(c.weights[kEnc] == 0.5);
    CHECK(apply_config_value(c, "activity.normalizer", "4.5"));
    CHECK(c.normalizer == 4.5);
    CHECK(apply_config_value(c, "activity.polarity", "direct"));
    CHECK(c.polarity == Polarity::Direct);
    CHECK_FALSE(apply_config_value(c, "diffusion.steps", "30"));
    CHECK_NOTHROW(c.validate());

    CHECK_THROWS_AS(apply_config_value(c, "activity.window_frames", "1"), ConfigError);
    CHECK_THROWS_AS(apply_config_value(c, "activity.weights", "1,2,3"), ConfigError);
    CHECK_THROWS_AS(apply_config_value(c, "activity.polarity", "sideways"), ConfigError);
    CHECK_THROWS_AS(apply_config_value(c, "activity.normalizer", "abc"), ConfigError);

    ActivityConfig zero_weights;
    zero_weights.weights.fill(0.0);
    CHECK_THROWS_AS(zero_weights.validate(), ConfigError);
    ActivityConfig bad_r;
    bad_r.normalizer = 0.0;
    CHECK_THROWS_AS(bad_r.validate(), ConfigError);
}
