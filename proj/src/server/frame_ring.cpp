#include "mindcube/server/frame_ring.hpp"

#include <algorithm>
#include <stdexcept>

namespace mindcube::server {

FrameRing::FrameRing(std::size_t capacity) : buffer_(capacity) {
    if (capacity == 0) throw std::invalid_argument("frame ring capacity must be positive");
}

void FrameRing::push(const SensorFrame& frame) {
    {
        std::lock_guard lock(mutex_);
        buffer_[total_ % buffer_.size()] = frame;
        ++total_;
    }
    changed_.notify_all();
}

std::uint64_t FrameRing::total() const {
    std::lock_guard lock(mutex_);
    return total_;
}

std::vector<SensorFrame> FrameRing::read_since(std::uint64_t& cursor, std::uint64_t* missed) const {
    std::lock_guard lock(mutex_);
    const std::uint64_t oldest = total_ > buffer_.size() ? total_ - buffer_.size() : 0;
    std::uint64_t from = std::max(cursor, oldest);
    if (missed) *missed = from - std::min(cursor, from);
    std::vector<SensorFrame> out;
    out.reserve(static_cast<std::size_t>(total_ - std::min(from, total_)));
    for (; from < total_; ++from) out.push_back(buffer_[from % buffer_.size()]);
    cursor = total_;
    return out;
}

std::vector<SensorFrame> FrameRing::last(std::size_t n) const {
    std::lock_guard lock(mutex_);
    const std::uint64_t count = std::min<std::uint64_t>({n, total_, buffer_.size()});
    std::vector<SensorFrame> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = total_ - count; i < total_; ++i) out.push_back(buffer_[i % buffer_.size()]);
    return out;
}

bool FrameRing::wait_beyond(std::uint64_t cursor, std::stop_token stop) const {
    std::unique_lock lock(mutex_);
    return changed_.wait(lock, stop, [&] { return total_ > cursor; });
}

}  // namespace mindcube::server
