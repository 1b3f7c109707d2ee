#pragma once

#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <stop_token>
#include <vector>

#include "mindcube/wire/sensor_frame.hpp"

namespace mindcube::server {

/// Fixed-size ring of recent frames shared by one producer and any number of
/// readers. Readers keep their own cursor (count of frames seen so far).
class FrameRing {
public:
    explicit FrameRing(std::size_t capacity);

    void push(const SensorFrame& frame);

    /// Total frames ever pushed.
    std::uint64_t total() const;

    /// Frames pushed after `cursor`, oldest first; advances the cursor. Frames
    /// that were overwritten before the reader got to them are counted in
    /// `missed` (if given).
    std::vector<SensorFrame> read_since(std::uint64_t& cursor, std::uint64_t* missed = nullptr) const;

    /// The most recent min(n, available) frames, oldest first.
    std::vector<SensorFrame> last(std::size_t n) const;

    /// Waits until total() > cursor or the stop token fires. Returns false on stop.
    bool wait_beyond(std::uint64_t cursor, std::stop_token stop) const;

    std::size_t capacity() const noexcept { return buffer_.size(); }

private:
    mutable std::mutex mutex_;
    mutable std::condition_variable_any changed_;
    std::vector<SensorFrame> buffer_;
    std::uint64_t total_ = 0;
};

}  // namespace mindcube::server
