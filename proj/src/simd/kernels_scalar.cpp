#include <cmath>

#include "mindcube/simd/kernels.hpp"

namespace mindcube::simd {
namespace {

void cfg_combine_scalar(const float* uncond, const float* cond, float gamma, float* out,
                        std::size_t n) {
    const float keep = 1.0f - gamma;
    for (std::size_t i = 0; i < n; ++i) {
        const float u = keep * uncond[i];
        const float c = gamma * cond[i];
        out[i] = u + c;
    }
}

void axpby_scalar(float a, const float* x, float b, const float* y, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const float ax = a * x[i];
        const float by = b * y[i];
        out[i] = ax + by;
    }
}

void renoise_scalar(const float* clean, const float* noise, float sqrt_a, float sqrt_1ma,
                    float* out, std::size_t n) {
    axpby_scalar(sqrt_a, clean, sqrt_1ma, noise, out, n);
}

void oracle_eps_scalar(const float* z, const OracleParams& p, float* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ch = i & 3u;
        const float centered = z[i] - p.sqrt_a * p.mu[ch];
        const float x0 = p.mu[ch] + p.gain[ch] * centered;
        const float residual = z[i] - p.sqrt_a * x0;
        out[i] = residual / p.sqrt_1ma;
    }
}

bool all_finite_scalar(const float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i])) return false;
    }
    return true;
}

double sum_squares_scalar(const float* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i];
        acc += v * v;
    }
    return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        "scalar",         cfg_combine_scalar, axpby_scalar,       renoise_scalar,
        oracle_eps_scalar, all_finite_scalar, sum_squares_scalar,
    };
    return table;
}

}  // namespace mindcube::simd
