#include "mindcube/wire/packet.hpp"

#include <string>

#include "mindcube/wire/cobs.hpp"
#include "mindcube/wire/crc16.hpp"
#include "mindcube/wire/errors.hpp"

namespace mindcube::wire {
namespace {

// Body layout (little-endian):
//   0 seq u8 | 1 timestamp_ms u32 | 5 accel 3xi16 | 11 gyro 3xi16 |
//   17 mag 3xi16 | 23 joy 2xi16 | 27 buttons u8 | 28 encoder_delta i8 |
//   29 reserved u8 (always zero)
constexpr std::size_t kReservedOffset = 29;

class Writer {
public:
    explicit Writer(std::uint8_t* out) : out_(out) {}
    void u8(std::uint8_t v) { *out_++ = v; }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v & 0xFFu));
        u8(static_cast<std::uint8_t>(v >> 8));
    }
    void i16(std::int16_t v) { u16(static_cast<std::uint16_t>(v)); }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v & 0xFFFFu));
        u16(static_cast<std::uint16_t>(v >> 16));
    }

private:
    std::uint8_t* out_;
};

class Reader {
public:
    explicit Reader(const std::uint8_t* in) : in_(in) {}
    std::uint8_t u8() { return *in_++; }
    std::uint16_t u16() {
        const std::uint16_t lo = u8();
        const std::uint16_t hi = u8();
        return static_cast<std::uint16_t>(lo | (hi << 8));
    }
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    std::uint32_t u32() {
        const std::uint32_t lo = u16();
        const std::uint32_t hi = u16();
        return lo | (hi << 16);
    }

private:
    const std::uint8_t* in_;
};

}  // namespace

void validate(const SensorFrame& frame) {
    if (frame.buttons & 0xF0u) {
        throw WireError(WireErrc::InvalidFrame,
                        "buttons upper nibble set (0x" + std::to_string(frame.buttons) + ")");
    }
}

PacketBytes serialize_packet(const SensorFrame& frame) {
    validate(frame);
    PacketBytes packet{};
    packet[0] = kPacketVersion;
    Writer w(packet.data() + 1);
    w.u8(frame.seq);
    w.u32(frame.timestamp_ms);
    for (auto v : frame.accel) w.i16(v);
    for (auto v : frame.gyro) w.i16(v);
    for (auto v : frame.mag) w.i16(v);
    for (auto v : frame.joy) w.i16(v);
    w.u8(frame.buttons);
    w.u8(static_cast<std::uint8_t>(frame.encoder_delta));
    w.u8(0);

    const std::uint16_t crc = crc16(std::span(packet.data(), 1 + kBodySize));
    packet[kPacketSize - 2] = static_cast<std::uint8_t>(crc >> 8);
    packet[kPacketSize - 1] = static_cast<std::uint8_t>(crc & 0xFFu);
    return packet;
}

SensorFrame parse_packet(std::span<const std::uint8_t> packet) {
    if (packet.size() != kPacketSize) {
        throw WireError(WireErrc::MalformedFrame,
                        "packet is " + std::to_string(packet.size()) + " bytes, expected 33");
    }
    const std::uint16_t expected = crc16(packet.first(1 + kBodySize));
    const std::uint16_t received =
        static_cast<std::uint16_t>((packet[kPacketSize - 2] << 8) | packet[kPacketSize - 1]);
    if (expected != received) {
        throw WireError(WireErrc::CrcMismatch, "crc mismatch");
    }
    if (packet[0] != kPacketVersion) {
        throw WireError(WireErrc::UnsupportedVersion,
                        "version " + std::to_string(packet[0]));
    }
    const std::uint8_t* body = packet.data() + 1;
    if (body[kReservedOffset] != 0) {
        throw WireError(WireErrc::MalformedFrame, "reserved byte not zero");
    }

    SensorFrame frame;
    Reader r(body);
    frame.seq = r.u8();
    frame.timestamp_ms = r.u32();
    for (auto& v : frame.accel) v = r.i16();
    for (auto& v : frame.gyro) v = r.i16();
    for (auto& v : frame.mag) v = r.i16();
    for (auto& v : frame.joy) v = r.i16();
    frame.buttons = r.u8();
    frame.encoder_delta = static_cast<std::int8_t>(r.u8());
    if (frame.buttons & 0xF0u) {
        throw WireError(WireErrc::MalformedFrame, "buttons upper nibble set");
    }
    return frame;
}

std::vector<std::uint8_t> encode_frame(const SensorFrame& frame) {
    const PacketBytes packet = serialize_packet(frame);
    std::vector<std::uint8_t> out = cobs_encode(packet);
    out.push_back(kDelimiter);
    return out;
}

SensorFrame decode_frame(std::span<const std::uint8_t> encoded) {
    return parse_packet(cobs_decode(encoded));
}

void FrameSplitter::feed(std::span<const std::uint8_t> bytes) {
    for (std::uint8_t byte : bytes) {
        if (byte == kDelimiter) {
            if (overflowed_) {
                dropped_ += partial_.size() + 1;
                overflowed_ = false;
            } else if (!partial_.empty()) {
                ready_.push_back(std::move(partial_));
            }
            partial_.clear();
            continue;
        }
        // Anything longer than a framed packet is garbage; resync on the next delimiter.
        if (partial_.size() >= kMaxFramedSize) {
            overflowed_ = true;
            dropped_ += partial_.size();
            partial_.clear();
        }
        partial_.push_back(byte);
    }
}

std::optional<std::vector<std::uint8_t>> FrameSplitter::next() {
    if (ready_head_ >= ready_.size()) {
        ready_.clear();
        ready_head_ = 0;
        return std::nullopt;
    }
    return std::move(ready_[ready_head_++]);
}

}  // namespace mindcube::wire
