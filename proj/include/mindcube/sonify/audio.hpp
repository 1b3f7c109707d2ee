#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "mindcube/diffusion/latent.hpp"

namespace mindcube::sonify {

inline constexpr int kSampleRate = 44100;
inline constexpr std::size_t kDefaultHop = 2048;  // samples per latent frame
inline constexpr int kHarmonics = 8;

class AudioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyLatents : public AudioError {
public:
    using AudioError::AudioError;
};

class EmptyBuffer : public AudioError {
public:
    using AudioError::AudioError;
};

/// Interleaved stereo float samples.
struct AudioBuffer {
    int sample_rate = kSampleRate;
    std::vector<float> samples;  // L, R, L, R, ...

    std::size_t frames() const noexcept { return samples.size() / 2; }
    double duration_s() const noexcept { return static_cast<double>(frames()) / sample_rate; }
};

/// Synth parameters decoded from one latent frame.
struct VoiceParams {
    double frequency_hz;  // 220 * 2^z1, clamped to [55, 880]
    double rolloff;       // softplus(z2): harmonic k has weight k^-rolloff
    double amplitude;     // sigmoid(z3)
    double mix;           // sigmoid(z4): stereo width and noise amount
};

VoiceParams voice_params(const float* latent_frame);

/// Soft limiter: identity up to 0.9, then a tanh knee approaching +-1.
float soft_limit(float x);

/// Additive-synth rendering of a latent sequence, `hop` stereo frames per
/// latent, parameters interpolated linearly across each hop. The noise
/// component is seeded, so rendering is deterministic.
/// Throws EmptyLatents.
AudioBuffer render_latents(const diffusion::LatentSequence& latents, std::size_t hop = kDefaultHop,
                           std::uint64_t noise_seed = 0);

/// Root mean square over both channels. Throws EmptyBuffer.
double audio_rms(const AudioBuffer& buffer);

/// 16-bit PCM stereo WAV.
void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer);
/// Reads a 16-bit PCM stereo WAV written by write_wav. Throws AudioError.
AudioBuffer read_wav(const std::filesystem::path& path);

}  // namespace mindcube::sonify
