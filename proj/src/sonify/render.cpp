#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "mindcube/simd/kernels.hpp"
#include "mindcube/sonify/audio.hpp"

namespace mindcube::sonify {
namespace {

constexpr double kBaseHz = 220.0;
constexpr double kMinHz = 55.0;
constexpr double kMaxHz = 880.0;
constexpr double kNoiseLevel = 0.1;
constexpr double kKnee = 0.9;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

struct FrameState {
    std::array<double, kHarmonics> weights;  // unit L2 norm
    double phase_inc;
    double amplitude;
    double mix;
};

FrameState frame_state(const float* latent) {
    const VoiceParams p = voice_params(latent);
    FrameState s{};
    double norm = 0.0;
    for (int k = 0; k < kHarmonics; ++k) {
        s.weights[k] = std::pow(static_cast<double>(k + 1), -p.rolloff);
        norm += s.weights[k] * s.weights[k];
    }
    norm = std::sqrt(norm);
    for (double& w : s.weights) w /= norm;
    s.phase_inc = 2.0 * std::numbers::pi * p.frequency_hz / kSampleRate;
    s.amplitude = p.amplitude;
    s.mix = p.mix;
    return s;
}

// sum_k w_k sin(k * phase), harmonics via the Chebyshev recurrence.
double harmonic_sum(const std::array<double, kHarmonics>& w, double phase) {
    const double s1 = std::sin(phase);
    const double two_c = 2.0 * std::cos(phase);
    double prev = 0.0, cur = s1, acc = w[0] * s1;
    for (int k = 1; k < kHarmonics; ++k) {
        const double next = two_c * cur - prev;
        prev = cur;
        cur = next;
        acc += w[k] * cur;
    }
    return acc;
}

}  // namespace

VoiceParams voice_params(const float* z) {
    VoiceParams p{};
    p.frequency_hz = std::clamp(kBaseHz * std::exp2(static_cast<double>(z[0])), kMinHz, kMaxHz);
    p.rolloff = softplus(z[1]);
    p.amplitude = sigmoid(z[2]);
    p.mix = sigmoid(z[3]);
    return p;
}

float soft_limit(float x) {
    const double mag = std::abs(static_cast<double>(x));
    if (mag <= kKnee) return x;
    const double limited = kKnee + (1.0 - kKnee) * std::tanh((mag - kKnee) / (1.0 - kKnee));
    return static_cast<float>(std::copysign(limited, static_cast<double>(x)));
}

AudioBuffer render_latents(const diffusion::LatentSequence& latents, std::size_t hop,
                           std::uint64_t noise_seed) {
    if (latents.empty()) throw EmptyLatents("cannot render an empty latent sequence");
    if (hop == 0) throw AudioError("hop must be positive");

    AudioBuffer out;
    out.samples.resize(latents.length() * hop * 2);

    std::mt19937_64 rng(noise_seed);
    std::uniform_real_distribution<double> noise(-1.0, 1.0);

    double phase = 0.0;
    FrameState current = frame_state(latents.frame(0).data());
    std::size_t write = 0;
    for (std::size_t i = 0; i < latents.length(); ++i) {
        const FrameState next =
            i + 1 < latents.length() ? frame_state(latents.frame(i + 1).data()) : current;
        for (std::size_t j = 0; j < hop; ++j) {
            const double u = static_cast<double>(j) / static_cast<double>(hop);
            std::array<double, kHarmonics> w;
            for (int k = 0; k < kHarmonics; ++k) {
                w[k] = current.weights[k] + u * (next.weights[k] - current.weights[k]);
            }
            const double amp = current.amplitude + u * (next.amplitude - current.amplitude);
            const double mix = current.mix + u * (next.mix - current.mix);
            const double inc = current.phase_inc + u * (next.phase_inc - current.phase_inc);

            const double width = mix * std::numbers::pi / 2.0;
            const double left = harmonic_sum(w, phase) + kNoiseLevel * mix * noise(rng);
            const double right = harmonic_sum(w, phase + width) + kNoiseLevel * mix * noise(rng);
            out.samples[write++] = soft_limit(static_cast<float>(amp * left));
            out.samples[write++] = soft_limit(static_cast<float>(amp * right));

            phase += inc;
            if (phase >= 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
        }
        current = next;
    }
    return out;
}

double audio_rms(const AudioBuffer& buffer) {
    if (buffer.samples.empty()) throw EmptyBuffer("cannot take the RMS of an empty buffer");
    return std::sqrt(simd::sum_squares(buffer.samples) / static_cast<double>(buffer.samples.size()));
}

}  // namespace mindcube::sonify
