#pragma once

#include <cstdint>
#include <span>

namespace mindcube::wire {

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
/// Check value for "123456789" is 0x29B1.
std::uint16_t crc16(std::span<const std::uint8_t> data) noexcept;

/// Continues a running CRC. crc16(d) == crc16_update(0xFFFF, d).
std::uint16_t crc16_update(std::uint16_t crc, std::span<const std::uint8_t> data) noexcept;

}  // namespace mindcube::wire
