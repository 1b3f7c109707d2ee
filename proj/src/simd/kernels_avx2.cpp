// Compiled with -mavx2 only; callers must check the CPU before using this table.

#include <immintrin.h>

#include <cmath>

#include "mindcube/simd/kernels.hpp"

namespace mindcube::simd {
namespace {

void cfg_combine_avx2(const float* uncond, const float* cond, float gamma, float* out,
                      std::size_t n) {
    const float keep_s = 1.0f - gamma;
    const __m256 keep = _mm256_set1_ps(keep_s);
    const __m256 g = _mm256_set1_ps(gamma);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 u = _mm256_mul_ps(keep, _mm256_loadu_ps(uncond + i));
        const __m256 c = _mm256_mul_ps(g, _mm256_loadu_ps(cond + i));
        _mm256_storeu_ps(out + i, _mm256_add_ps(u, c));
    }
    for (; i < n; ++i) {
        const float u = keep_s * uncond[i];
        const float c = gamma * cond[i];
        out[i] = u + c;
    }
}

void axpby_avx2(float a, const float* x, float b, const float* y, float* out, std::size_t n) {
    const __m256 va = _mm256_set1_ps(a);
    const __m256 vb = _mm256_set1_ps(b);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 ax = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        const __m256 by = _mm256_mul_ps(vb, _mm256_loadu_ps(y + i));
        _mm256_storeu_ps(out + i, _mm256_add_ps(ax, by));
    }
    for (; i < n; ++i) {
        const float ax = a * x[i];
        const float by = b * y[i];
        out[i] = ax + by;
    }
}

void renoise_avx2(const float* clean, const float* noise, float sqrt_a, float sqrt_1ma,
                  float* out, std::size_t n) {
    axpby_avx2(sqrt_a, clean, sqrt_1ma, noise, out, n);
}

void oracle_eps_avx2(const float* z, const OracleParams& p, float* out, std::size_t n) {
    // Two 4-channel frames per register.
    const __m256 mu = _mm256_setr_ps(p.mu[0], p.mu[1], p.mu[2], p.mu[3],
                                     p.mu[0], p.mu[1], p.mu[2], p.mu[3]);
    const __m256 gain = _mm256_setr_ps(p.gain[0], p.gain[1], p.gain[2], p.gain[3],
                                       p.gain[0], p.gain[1], p.gain[2], p.gain[3]);
    const __m256 sa = _mm256_set1_ps(p.sqrt_a);
    const __m256 s1a = _mm256_set1_ps(p.sqrt_1ma);
    const __m256 sa_mu = _mm256_mul_ps(sa, mu);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 zi = _mm256_loadu_ps(z + i);
        const __m256 centered = _mm256_sub_ps(zi, sa_mu);
        const __m256 x0 = _mm256_add_ps(mu, _mm256_mul_ps(gain, centered));
        const __m256 residual = _mm256_sub_ps(zi, _mm256_mul_ps(sa, x0));
        _mm256_storeu_ps(out + i, _mm256_div_ps(residual, s1a));
    }
    for (; i < n; ++i) {
        const std::size_t ch = i & 3u;
        const float centered = z[i] - p.sqrt_a * p.mu[ch];
        const float x0 = p.mu[ch] + p.gain[ch] * centered;
        const float residual = z[i] - p.sqrt_a * x0;
        out[i] = residual / p.sqrt_1ma;
    }
}

bool all_finite_avx2(const float* x, std::size_t n) {
    const __m256i exp_mask = _mm256_set1_epi32(0x7F800000);
    __m256i bad = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i bits = _mm256_castps_si256(_mm256_loadu_ps(x + i));
        const __m256i exponent = _mm256_and_si256(bits, exp_mask);
        bad = _mm256_or_si256(bad, _mm256_cmpeq_epi32(exponent, exp_mask));
    }
    if (!_mm256_testz_si256(bad, bad)) return false;
    for (; i < n; ++i) {
        if (!std::isfinite(x[i])) return false;
    }
    return true;
}

double sum_squares_avx2(const float* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d lo = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        const __m256d hi = _mm256_cvtps_pd(_mm_loadu_ps(x + i + 4));
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(lo, lo));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(hi, hi));
    }
    const __m256d acc = _mm256_add_pd(acc0, acc1);
    const __m128d pair = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
    double total = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
    for (; i < n; ++i) {
        const double v = x[i];
        total += v * v;
    }
    return total;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        "avx2",          cfg_combine_avx2, axpby_avx2,       renoise_avx2,
        oracle_eps_avx2, all_finite_avx2,  sum_squares_avx2,
    };
    return table;
}

}  // namespace mindcube::simd
