#include "mindcube/diffusion/latent_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace mindcube::diffusion {
namespace {

constexpr std::uint8_t kMagic[4] = {'M', 'C', 'L', 'Z'};
constexpr std::size_t kHeaderSize = 4 + 1 + 4 + 1;

void put_u32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

[[noreturn]] void bad(const std::string& why) {
    throw DiffusionError(DiffusionErrc::BadLatentFile, why);
}

}  // namespace

std::vector<std::uint8_t> serialize_latents(const LatentSequence& latents) {
    std::vector<std::uint8_t> out(kHeaderSize + latents.values().size() * 4);
    std::memcpy(out.data(), kMagic, 4);
    out[4] = kLatentFileVersion;
    put_u32(out.data() + 5, static_cast<std::uint32_t>(latents.length()));
    out[9] = static_cast<std::uint8_t>(LatentSequence::kDim);
    std::uint8_t* p = out.data() + kHeaderSize;
    for (float v : latents.values()) {
        put_u32(p, std::bit_cast<std::uint32_t>(v));
        p += 4;
    }
    return out;
}

LatentSequence parse_latents(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) bad("truncated header");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) bad("missing MCLZ magic");
    if (bytes[4] != kLatentFileVersion) bad("unsupported version " + std::to_string(bytes[4]));
    const std::uint32_t length = get_u32(bytes.data() + 5);
    const std::uint8_t dim = bytes[9];
    if (dim != LatentSequence::kDim) bad("expected dim 4, got " + std::to_string(dim));
    const std::size_t expected = kHeaderSize + static_cast<std::size_t>(length) * dim * 4;
    if (bytes.size() != expected) {
        bad("payload is " + std::to_string(bytes.size()) + " bytes, expected " +
            std::to_string(expected));
    }
    LatentSequence latents(length);
    const std::uint8_t* p = bytes.data() + kHeaderSize;
    for (float& v : latents.values()) {
        v = std::bit_cast<float>(get_u32(p));
        p += 4;
    }
    return latents;
}

void write_latent_file(const std::filesystem::path& path, const LatentSequence& latents) {
    const auto bytes = serialize_latents(latents);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) bad("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) bad("write failed for " + path.string());
}

LatentSequence read_latent_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) bad("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                          std::istreambuf_iterator<char>()};
    return parse_latents(bytes);
}

}  // namespace mindcube::diffusion
