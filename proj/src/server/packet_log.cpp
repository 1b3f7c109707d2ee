#include "mindcube/server/packet_log.hpp"

#include <iterator>
#include <string>

#include "mindcube/wire/errors.hpp"
#include "mindcube/wire/packet.hpp"

namespace mindcube::server {

PacketLogWriter::PacketLogWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw PacketLogError("cannot open " + path.string() + " for writing");
}

void PacketLogWriter::append(std::uint64_t t_us, std::span<const std::uint8_t> framed) {
    std::uint8_t stamp[8];
    for (int i = 0; i < 8; ++i) stamp[i] = static_cast<std::uint8_t>(t_us >> (8 * i));
    out_.write(reinterpret_cast<const char*>(stamp), 8);
    if (!framed.empty() && framed.back() == wire::kDelimiter) framed = framed.first(framed.size() - 1);
    out_.write(reinterpret_cast<const char*>(framed.data()), static_cast<std::streamsize>(framed.size()));
    out_.put(static_cast<char>(wire::kDelimiter));
    if (!out_) throw PacketLogError("write failed");
    ++records_;
}

void PacketLogWriter::flush() { out_.flush(); }

std::vector<LoggedPacket> parse_packet_log(std::span<const std::uint8_t> bytes) {
    std::vector<LoggedPacket> out;
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        if (bytes.size() - pos < 8) throw PacketLogError("truncated timestamp at offset " + std::to_string(pos));
        LoggedPacket p;
        for (int i = 0; i < 8; ++i) p.t_us |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        const std::size_t start = pos;
        while (pos < bytes.size() && bytes[pos] != wire::kDelimiter) {
            if (pos - start >= wire::kMaxFramedSize) {
                throw PacketLogError("oversized record at offset " + std::to_string(start));
            }
            ++pos;
        }
        if (pos == bytes.size()) throw PacketLogError("missing delimiter at offset " + std::to_string(start));
        p.framed.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                        bytes.begin() + static_cast<std::ptrdiff_t>(pos));
        ++pos;
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<LoggedPacket> read_packet_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PacketLogError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_packet_log(bytes);
}

std::vector<SensorFrame> decode_packets(const std::vector<LoggedPacket>& packets, std::size_t* rejected) {
    std::vector<SensorFrame> frames;
    frames.reserve(packets.size());
    std::size_t bad = 0;
    for (const auto& p : packets) {
        try {
            frames.push_back(wire::decode_frame(p.framed));
        } catch (const wire::WireError&) {
            ++bad;
        }
    }
    if (rejected) *rejected = bad;
    return frames;
}

}  // namespace mindcube::server
