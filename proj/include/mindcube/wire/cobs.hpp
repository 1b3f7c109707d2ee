#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mindcube::wire {

// Single-block COBS: at most 254 payload bytes, so the encoding is always
// exactly one byte longer than its input. Longer inputs are rejected.
inline constexpr std::size_t kCobsMaxPayload = 254;

/// Stuffs `raw` so the result contains no 0x00. The frame delimiter is not
/// appended here. Throws WireError{InputTooLong}.
std::vector<std::uint8_t> cobs_encode(std::span<const std::uint8_t> raw);

/// Inverse of cobs_encode. `encoded` excludes the delimiter.
/// Throws WireError{MalformedFrame}.
std::vector<std::uint8_t> cobs_decode(std::span<const std::uint8_t> encoded);

}  // namespace mindcube::wire
