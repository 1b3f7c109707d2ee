#pragma once

// Data-parallel float kernels used by the latent sampler and the audio path.
//
// Every kernel has a scalar reference implementation and, where the CPU
// supports it, an AVX2 variant picked once at startup. Elementwise kernels
// produce bit-identical results across variants (same operation order, no
// fused multiply-add). Reductions accumulate in double and agree to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace mindcube::simd {

/// Per-channel parameters of a Gaussian posterior-mean denoiser, for data laid
/// out as consecutive 4-float frames.
struct OracleParams {
    float mu[4];
    float gain[4];     // sqrt(a) * sigma^2 / (a * sigma^2 + 1 - a)
    float sqrt_a;      // sqrt(alpha_bar)
    float sqrt_1ma;    // sqrt(1 - alpha_bar)
};

struct KernelTable {
    std::string_view name;

    // out = (1 - gamma) * uncond + gamma * cond
    void (*cfg_combine)(const float* uncond, const float* cond, float gamma, float* out,
                        std::size_t n);
    // out = a * x + b * y  (out may alias x or y)
    void (*axpby)(float a, const float* x, float b, const float* y, float* out,
                  std::size_t n);
    // out = sqrt_a * clean + sqrt_1ma * noise
    void (*renoise)(const float* clean, const float* noise, float sqrt_a, float sqrt_1ma,
                    float* out, std::size_t n);
    // Closed-form eps prediction for Gaussian data. n must be a multiple of 4.
    void (*oracle_eps)(const float* z, const OracleParams& params, float* out, std::size_t n);
    bool (*all_finite)(const float* x, std::size_t n);
    double (*sum_squares)(const float* x, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the binary or CPU lacks AVX2.
const KernelTable* avx2_kernels();

/// The table in use. Chosen on first call: MINDCUBE_SIMD=scalar|avx2 forces a
/// variant, otherwise the widest one the CPU supports.
const KernelTable& active();

/// Overrides the active table (tests and benchmarks). Not thread-safe with
/// respect to concurrent kernel callers.
void set_active(const KernelTable& table);

// Span conveniences over the active table.
void cfg_combine(std::span<const float> uncond, std::span<const float> cond, float gamma,
                 std::span<float> out);
void axpby(float a, std::span<const float> x, float b, std::span<const float> y,
           std::span<float> out);
bool all_finite(std::span<const float> x);
double sum_squares(std::span<const float> x);

}  // namespace mindcube::simd
