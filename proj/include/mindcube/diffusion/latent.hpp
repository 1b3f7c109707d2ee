#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mindcube::diffusion {

enum class DiffusionErrc {
    InvalidSteps,
    ShapeMismatch,
    PrefixTooLong,
    NonFiniteDetected,
    SingularStep,
    InvalidArgument,
    BadLatentFile,
};

const char* to_string(DiffusionErrc code);

class DiffusionError : public std::runtime_error {
public:
    DiffusionError(DiffusionErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    DiffusionErrc code() const noexcept { return code_; }

private:
    DiffusionErrc code_;
};

/// Ordered frames of 4-dimensional latent vectors, stored frame-major.
class LatentSequence {
public:
    static constexpr std::size_t kDim = 4;
    static constexpr std::size_t kDefaultLength = 512;

    LatentSequence() = default;
    explicit LatentSequence(std::size_t length, float fill = 0.0f)
        : data_(length * kDim, fill) {}

    std::size_t length() const noexcept { return data_.size() / kDim; }
    bool empty() const noexcept { return data_.empty(); }

    std::span<float> frame(std::size_t i) { return {data_.data() + i * kDim, kDim}; }
    std::span<const float> frame(std::size_t i) const { return {data_.data() + i * kDim, kDim}; }
    float& at(std::size_t frame_index, std::size_t channel) {
        return data_[frame_index * kDim + channel];
    }
    float at(std::size_t frame_index, std::size_t channel) const {
        return data_[frame_index * kDim + channel];
    }

    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }

    /// Frames [first, first + count).
    LatentSequence slice(std::size_t first, std::size_t count) const;
    /// The last `count` frames.
    LatentSequence tail(std::size_t count) const;

    bool operator==(const LatentSequence&) const = default;

private:
    std::vector<float> data_;
};

}  // namespace mindcube::diffusion
