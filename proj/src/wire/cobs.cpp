#include "mindcube/wire/cobs.hpp"

#include <string>

#include "mindcube/wire/errors.hpp"

namespace mindcube::wire {

const char* to_string(WireErrc code) {
    switch (code) {
        case WireErrc::InputTooLong: return "InputTooLong";
        case WireErrc::MalformedFrame: return "MalformedFrame";
        case WireErrc::InvalidFrame: return "InvalidFrame";
        case WireErrc::CrcMismatch: return "CrcMismatch";
        case WireErrc::UnsupportedVersion: return "UnsupportedVersion";
    }
    return "WireError";
}

std::vector<std::uint8_t> cobs_encode(std::span<const std::uint8_t> raw) {
    if (raw.size() > kCobsMaxPayload) {
        throw WireError(WireErrc::InputTooLong,
                        "payload of " + std::to_string(raw.size()) + " bytes exceeds 254");
    }
    std::vector<std::uint8_t> out(raw.size() + 1);
    std::size_t code_pos = 0;
    std::size_t write = 1;
    std::uint8_t code = 1;
    for (std::uint8_t byte : raw) {
        if (byte == 0) {
            out[code_pos] = code;
            code_pos = write++;
            code = 1;
        } else {
            out[write++] = byte;
            ++code;
        }
    }
    out[code_pos] = code;
    return out;
}

std::vector<std::uint8_t> cobs_decode(std::span<const std::uint8_t> encoded) {
    if (encoded.empty()) {
        throw WireError(WireErrc::MalformedFrame, "empty frame");
    }
    if (encoded.size() > kCobsMaxPayload + 1) {
        throw WireError(WireErrc::MalformedFrame, "frame longer than one COBS block");
    }
    std::vector<std::uint8_t> out;
    out.reserve(encoded.size());
    std::size_t pos = 0;
    while (pos < encoded.size()) {
        const std::uint8_t code = encoded[pos];
        if (code == 0) {
            throw WireError(WireErrc::MalformedFrame, "zero byte inside frame");
        }
        if (pos + code > encoded.size()) {
            throw WireError(WireErrc::MalformedFrame, "block header points past end of frame");
        }
        for (std::size_t i = pos + 1; i < pos + code; ++i) {
            if (encoded[i] == 0) {
                throw WireError(WireErrc::MalformedFrame, "zero byte inside frame");
            }
            out.push_back(encoded[i]);
        }
        pos += code;
        // Inside one block every code except the last one marks a zero.
        if (pos < encoded.size()) {
            out.push_back(0);
        }
    }
    return out;
}

}  // namespace mindcube::wire
