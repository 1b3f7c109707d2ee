#include "mindcube/conditioning/activity.hpp"

#include <algorithm>
#include <cmath>

#include "mindcube/common/text.hpp"

namespace mindcube::conditioning {
namespace {

constexpr std::array<std::string_view, kChannels> kNames{
    "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz", "jx", "jy", "b1", "b2", "b3", "b4", "enc"};

double clamp_unit(double v) {
    if (!(v > 0.0)) return 0.0;  // also catches NaN
    return v < 1.0 ? v : 1.0;
}

}  // namespace

std::string_view channel_name(std::size_t channel) {
    return channel < kChannels ? kNames[channel] : "?";
}

void ActivityConfig::validate() const {
    if (window_frames < 2) throw ConfigError("activity.window_frames must be >= 2");
    bool any_positive = false;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) throw ConfigError("activity.weights must be finite and >= 0");
        any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) throw ConfigError("activity.weights needs at least one positive weight");
    if (!std::isfinite(normalizer) || !(normalizer > 0.0)) {
        throw ConfigError("activity.normalizer must be > 0");
    }
}

ChannelVector normalized_channels(const SensorFrame& f) {
    ChannelVector v{};
    for (int axis = 0; axis < 3; ++axis) {
        v[kAx + axis] = (f.accel[axis] / kAccelLsbPerG) / kAccelFullScaleG;
        v[kGx + axis] = (f.gyro[axis] / kGyroLsbPerDps) / kGyroFullScaleDps;
        v[kMx + axis] = f.mag[axis] / kMagFullScaleRaw;
    }
    v[kJx] = f.joy[0] / kJoyFullScaleRaw;
    v[kJy] = f.joy[1] / kJoyFullScaleRaw;
    for (int b = 0; b < 4; ++b) v[kB1 + b] = ((f.buttons >> b) & 1u) ? 1.0 : 0.0;
    v[kEnc] = f.encoder_delta / kEncoderFullScale;
    return v;
}

ChannelStats channel_std(std::span<const SensorFrame> window, const ActivityConfig& config) {
    if (window.size() < 2 || window.size() != config.window_frames) {
        throw WindowTooShort("window has " + std::to_string(window.size()) + " frames, need " +
                             std::to_string(config.window_frames));
    }
    std::vector<ChannelVector> values;
    values.reserve(window.size());
    for (const auto& frame : window) values.push_back(normalized_channels(frame));

    const double n = static_cast<double>(window.size());
    ChannelStats stats;
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
        double sum = 0.0;
        for (const auto& v : values) sum += v[ch];
        const double mean = sum / n;
        double sq = 0.0;
        for (const auto& v : values) {
            const double d = v[ch] - mean;
            sq += d * d;
        }
        stats.sigma[ch] = std::sqrt(sq / n);
    }
    return stats;
}

double activity_score(const ChannelStats& stats, const ActivityConfig& config) {
    double weighted = 0.0;
    for (std::size_t ch = 0; ch < kChannels; ++ch) {
        weighted += config.weights[ch] * stats.sigma[ch];
    }
    return clamp_unit(weighted / config.normalizer);
}

Condition rms_condition(double activity, const ActivityConfig& config) {
    const double a = clamp_unit(activity);
    return Condition{config.polarity == Polarity::Inverse ? 1.0 - a : a};
}

FrameWindow::FrameWindow(std::size_t capacity) : buffer_(capacity) {
    if (capacity == 0) throw ConfigError("window capacity must be positive");
}

void FrameWindow::push(const SensorFrame& frame) {
    buffer_[head_] = frame;
    head_ = (head_ + 1) % buffer_.size();
    size_ = std::min(size_ + 1, buffer_.size());
}

std::vector<SensorFrame> FrameWindow::snapshot() const {
    std::vector<SensorFrame> out;
    out.reserve(size_);
    const std::size_t start = (head_ + buffer_.size() - size_) % buffer_.size();
    for (std::size_t i = 0; i < size_; ++i) out.push_back(buffer_[(start + i) % buffer_.size()]);
    return out;
}

bool apply_config_value(ActivityConfig& config, std::string_view key, std::string_view value) {
    if (key == "activity.window_frames") {
        const auto n = text::parse_number<long long>(value);
        if (!n || *n < 2) throw ConfigError("activity.window_frames: expected an integer >= 2");
        config.window_frames = static_cast<std::size_t>(*n);
    } else if (key == "activity.weights") {
        const auto parts = text::split(value, ',');
        if (parts.size() != kChannels) {
            throw ConfigError("activity.weights: expected 16 comma-separated numbers");
        }
        ChannelVector weights{};
        for (std::size_t i = 0; i < kChannels; ++i) {
            const auto w = text::parse_number<double>(parts[i]);
            if (!w) throw ConfigError("activity.weights: bad number '" + std::string(parts[i]) + "'");
            weights[i] = *w;
        }
        config.weights = weights;
    } else if (key == "activity.normalizer") {
        const auto r = text::parse_number<double>(value);
        if (!r) throw ConfigError("activity.normalizer: expected a number");
        config.normalizer = *r;
    } else if (key == "activity.polarity") {
        const auto v = text::trim(value);
        if (v == "inverse") config.polarity = Polarity::Inverse;
        else if (v == "direct") config.polarity = Polarity::Direct;
        else throw ConfigError("activity.polarity: expected 'direct' or 'inverse'");
    } else {
        return false;
    }
    return true;
}

}  // namespace mindcube::conditioning
