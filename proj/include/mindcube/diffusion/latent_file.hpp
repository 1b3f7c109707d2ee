#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mindcube/diffusion/latent.hpp"

namespace mindcube::diffusion {

// MCLZ layout: "MCLZ" | version u8 (1) | length u32 LE | dim u8 (4) |
// length * dim float32 LE, frame-major.
inline constexpr std::uint8_t kLatentFileVersion = 1;

std::vector<std::uint8_t> serialize_latents(const LatentSequence& latents);
/// Throws DiffusionError{BadLatentFile}.
LatentSequence parse_latents(std::span<const std::uint8_t> bytes);

void write_latent_file(const std::filesystem::path& path, const LatentSequence& latents);
LatentSequence read_latent_file(const std::filesystem::path& path);

}  // namespace mindcube::diffusion
