#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <vector>

#include "mindcube/wire/sensor_frame.hpp"

namespace mindcube::server {

// Packet log: repeated records of
//   u64 LE receive time in microseconds since the start of recording
//   COBS frame bytes including the trailing 0x00 delimiter

class PacketLogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoggedPacket {
    std::uint64_t t_us = 0;
    std::vector<std::uint8_t> framed;  // delimiter stripped
};

class PacketLogWriter {
public:
    /// Throws PacketLogError.
    explicit PacketLogWriter(const std::filesystem::path& path);
    /// `framed` may or may not carry its delimiter; one is always written.
    void append(std::uint64_t t_us, std::span<const std::uint8_t> framed);
    void flush();
    std::size_t records() const noexcept { return records_; }

private:
    std::ofstream out_;
    std::size_t records_ = 0;
};

/// Throws PacketLogError on a truncated or oversized record.
std::vector<LoggedPacket> read_packet_log(const std::filesystem::path& path);
std::vector<LoggedPacket> parse_packet_log(std::span<const std::uint8_t> bytes);

/// Decodes every record; packets failing CRC/COBS checks are skipped and counted.
std::vector<SensorFrame> decode_packets(const std::vector<LoggedPacket>& packets,
                                        std::size_t* rejected = nullptr);

}  // namespace mindcube::server
