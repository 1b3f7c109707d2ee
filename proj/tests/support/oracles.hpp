#pragma once

// Independent reference implementations used only by tests. They are written
// directly from the algorithm definitions and share no code with src/.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mindcube/wire/sensor_frame.hpp"

namespace mindcube::testing {

/// MSB-first, one bit at a time: CRC-16/CCITT-FALSE.
inline std::uint16_t crc16_bitwise(std::span<const std::uint8_t> data) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t byte : data) {
        for (int i = 7; i >= 0; --i) {
            const bool top = (crc & 0x8000u) != 0;
            const bool bit = ((byte >> i) & 1u) != 0;
            crc = static_cast<std::uint16_t>(crc << 1);
            if (top != bit) crc ^= 0x1021u;
        }
    }
    return crc;
}

/// Classic pointer-style COBS encoder (no delimiter), valid for <= 254 bytes.
inline std::vector<std::uint8_t> cobs_encode_reference(std::span<const std::uint8_t> raw) {
    std::vector<std::uint8_t> out(raw.size() + 2);
    std::uint8_t* dst = out.data();
    std::uint8_t* code_ptr = dst++;
    std::uint8_t code = 0x01;
    for (std::uint8_t b : raw) {
        if (b == 0) {
            *code_ptr = code;
            code_ptr = dst++;
            code = 0x01;
        } else {
            *dst++ = b;
            ++code;
        }
    }
    *code_ptr = code;
    out.resize(static_cast<std::size_t>(dst - out.data()));
    return out;
}

inline SensorFrame random_frame(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> i16(-32768, 32767);
    SensorFrame f;
    f.seq = static_cast<std::uint8_t>(rng());
    f.timestamp_ms = static_cast<std::uint32_t>(rng());
    for (auto& v : f.accel) v = static_cast<std::int16_t>(i16(rng));
    for (auto& v : f.gyro) v = static_cast<std::int16_t>(i16(rng));
    for (auto& v : f.mag) v = static_cast<std::int16_t>(i16(rng));
    for (auto& v : f.joy) v = static_cast<std::int16_t>(i16(rng));
    f.buttons = static_cast<std::uint8_t>(rng() & 0x0F);
    f.encoder_delta = static_cast<std::int8_t>(rng());
    // Zero-heavy fields exercise the stuffing paths.
    if (rng() % 3 == 0) f.accel = {0, 0, 0};
    if (rng() % 3 == 0) f.joy = {0, 0};
    return f;
}

/// Two-pass population standard deviation, mean first.
inline double population_std(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    return std::sqrt(sq / static_cast<double>(xs.size()));
}

}  // namespace mindcube::testing
