#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mindcube/sonify/audio.hpp"

namespace mindcube::sonify {
namespace {

constexpr std::uint16_t kChannels = 2;
constexpr std::uint16_t kBitsPerSample = 16;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    put_u16(out, static_cast<std::uint16_t>(v & 0xFFFF));
    put_u16(out, static_cast<std::uint16_t>(v >> 16));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(get_u16(p)) | (static_cast<std::uint32_t>(get_u16(p + 2)) << 16);
}

}  // namespace

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer) {
    const std::uint32_t data_bytes =
        static_cast<std::uint32_t>(buffer.samples.size() * (kBitsPerSample / 8));
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, kChannels);
    put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(buffer.sample_rate) * kChannels * (kBitsPerSample / 8));
    put_u16(out, kChannels * (kBitsPerSample / 8));
    put_u16(out, kBitsPerSample);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    for (float s : buffer.samples) {
        const double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
        const auto q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(q));
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw AudioError("cannot open " + path.string() + " for writing");
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) throw AudioError("write failed for " + path.string());
}

AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw AudioError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(file),
                                          std::istreambuf_iterator<char>()};
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw AudioError(path.string() + " is not a RIFF/WAVE file");
    }
    AudioBuffer buffer;
    bool have_format = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        const std::uint32_t size = get_u32(chunk + 4);
        if (pos + 8 + size > bytes.size()) throw AudioError("truncated chunk in " + path.string());
        if (std::memcmp(chunk, "fmt ", 4) == 0 && size >= 16) {
            if (get_u16(chunk + 8) != 1 || get_u16(chunk + 10) != kChannels ||
                get_u16(chunk + 22) != kBitsPerSample) {
                throw AudioError("only 16-bit PCM stereo is supported");
            }
            buffer.sample_rate = static_cast<int>(get_u32(chunk + 12));
            have_format = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            if (!have_format) throw AudioError("data chunk before fmt chunk");
            buffer.samples.resize(size / 2);
            for (std::size_t i = 0; i < buffer.samples.size(); ++i) {
                const auto q = static_cast<std::int16_t>(get_u16(chunk + 8 + 2 * i));
                buffer.samples[i] = static_cast<float>(q / 32767.0);
            }
            return buffer;
        }
        pos += 8 + size + (size & 1u);
    }
    throw AudioError("no data chunk in " + path.string());
}

}  // namespace mindcube::sonify
