#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string_view>

#include <spdlog/spdlog.h>

#include "mindcube/simd/kernels.hpp"

namespace mindcube::simd {

#if MINDCUBE_HAVE_AVX2
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if MINDCUBE_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable* pick() {
    const KernelTable* best = avx2_kernels();
    if (const char* env = std::getenv("MINDCUBE_SIMD")) {
        const std::string_view want(env);
        if (want == "scalar") return &scalar_kernels();
        if (want == "avx2") {
            if (best) return best;
            spdlog::warn("MINDCUBE_SIMD=avx2 requested but unavailable; using scalar kernels");
        } else if (!want.empty()) {
            spdlog::warn("unknown MINDCUBE_SIMD value '{}'", want);
        }
    }
    return best ? best : &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> table{pick()};
    return table;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if MINDCUBE_HAVE_AVX2
    static const bool usable = cpu_has_avx2();
    return usable ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(const KernelTable& table) { slot().store(&table, std::memory_order_release); }

void cfg_combine(std::span<const float> uncond, std::span<const float> cond, float gamma,
                 std::span<float> out) {
    assert(uncond.size() == cond.size() && cond.size() == out.size());
    active().cfg_combine(uncond.data(), cond.data(), gamma, out.data(), out.size());
}

void axpby(float a, std::span<const float> x, float b, std::span<const float> y,
           std::span<float> out) {
    assert(x.size() == y.size() && y.size() == out.size());
    active().axpby(a, x.data(), b, y.data(), out.data(), out.size());
}

bool all_finite(std::span<const float> x) { return active().all_finite(x.data(), x.size()); }

double sum_squares(std::span<const float> x) { return active().sum_squares(x.data(), x.size()); }

}  // namespace mindcube::simd
