#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mindcube/wire/sensor_frame.hpp"

namespace mindcube::conditioning {

inline constexpr std::size_t kChannels = 16;

/// Channel order used everywhere activity is computed.
enum Channel : std::size_t {
    kAx, kAy, kAz, kGx, kGy, kGz, kMx, kMy, kMz, kJx, kJy, kB1, kB2, kB3, kB4, kEnc
};

std::string_view channel_name(std::size_t channel);

using ChannelVector = std::array<double, kChannels>;

enum class Polarity { Direct, Inverse };

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class WindowTooShort : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ActivityConfig {
    std::size_t window_frames = 60;  // 3 s at 20 Hz
    ChannelVector weights{1.0, 1.0, 1.0,     // accel
                          0.2, 0.2, 0.2,     // gyro
                          0.05, 0.05, 0.05,  // mag
                          1.0, 1.0,          // joystick
                          1.0, 1.0, 1.0, 1.0,  // buttons
                          1.0};              // encoder
    double normalizer = 6.0;
    Polarity polarity = Polarity::Inverse;

    /// Throws ConfigError.
    void validate() const;
};

/// Population standard deviation per channel over a window.
struct ChannelStats {
    ChannelVector sigma{};
};

/// Conditioning value c in [0, 1].
struct Condition {
    double value = 0.0;
    bool operator==(const Condition&) const = default;
};

// Full-scale divisors for unit normalization.
inline constexpr double kAccelFullScaleG = 8.0;
inline constexpr double kGyroFullScaleDps = 2000.0;
inline constexpr double kMagFullScaleRaw = 4900.0;
inline constexpr double kJoyFullScaleRaw = 32767.0;
inline constexpr double kEncoderFullScale = 127.0;

/// The 16 unit-normalized channel values of one frame.
ChannelVector normalized_channels(const SensorFrame& frame);

/// Throws WindowTooShort unless window.size() == config.window_frames (and >= 2).
ChannelStats channel_std(std::span<const SensorFrame> window, const ActivityConfig& config);

/// (1/R) * sum_i w_i * sigma_i, clamped to [0, 1].
double activity_score(const ChannelStats& stats, const ActivityConfig& config);

/// Maps activity to the conditioning value according to the polarity.
Condition rms_condition(double activity, const ActivityConfig& config);

/// Fixed-capacity window of the most recent frames. Single owner.
class FrameWindow {
public:
    explicit FrameWindow(std::size_t capacity);

    void push(const SensorFrame& frame);
    bool full() const noexcept { return size_ == buffer_.size(); }
    std::size_t size() const noexcept { return size_; }
    std::size_t capacity() const noexcept { return buffer_.size(); }
    /// Oldest first.
    std::vector<SensorFrame> snapshot() const;

private:
    std::vector<SensorFrame> buffer_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
};

/// Applies one activity.* key. Returns false for keys outside that namespace.
/// Throws ConfigError.
bool apply_config_value(ActivityConfig& config, std::string_view key, std::string_view value);

}  // namespace mindcube::conditioning
