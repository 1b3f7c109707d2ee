#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mindcube/wire/sensor_frame.hpp"

namespace mindcube::wire {

inline constexpr std::uint8_t kPacketVersion = 0x01;
inline constexpr std::size_t kBodySize = 30;
inline constexpr std::size_t kPacketSize = 1 + kBodySize + 2;  // version + body + crc
inline constexpr std::size_t kMaxFramedSize = kPacketSize + 1 + 1;
inline constexpr std::uint8_t kDelimiter = 0x00;

using PacketBytes = std::array<std::uint8_t, kPacketSize>;

/// Throws WireError{InvalidFrame} when the frame breaks a SensorFrame invariant.
void validate(const SensorFrame& frame);

/// version || body || crc (big-endian), before stuffing.
PacketBytes serialize_packet(const SensorFrame& frame);

/// Checks length, crc and version, then unpacks the body.
SensorFrame parse_packet(std::span<const std::uint8_t> packet);

/// COBS-stuffed packet followed by the 0x00 delimiter.
std::vector<std::uint8_t> encode_frame(const SensorFrame& frame);

/// Decodes one delimiter-stripped COBS frame.
SensorFrame decode_frame(std::span<const std::uint8_t> encoded);

/// Incremental splitter for a byte stream of delimited frames. Feed arbitrary
/// chunks; each complete frame is handed back without its delimiter.
class FrameSplitter {
public:
    void feed(std::span<const std::uint8_t> bytes);
    std::optional<std::vector<std::uint8_t>> next();
    std::size_t pending_bytes() const noexcept { return partial_.size(); }
    std::size_t dropped_bytes() const noexcept { return dropped_; }

private:
    std::vector<std::uint8_t> partial_;
    std::vector<std::vector<std::uint8_t>> ready_;
    std::size_t ready_head_ = 0;
    std::size_t dropped_ = 0;
    bool overflowed_ = false;
};

}  // namespace mindcube::wire
