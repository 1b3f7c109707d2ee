#pragma once

#include <cstddef>
#include <vector>

namespace mindcube::diffusion {

inline constexpr int kDefaultSteps = 30;
inline constexpr int kMaxSteps = 1000;

/// Cumulative signal levels alpha_bar[0..steps], alpha_bar[0] == 1,
/// strictly decreasing, all in (0, 1].
struct Schedule {
    int steps = 0;
    std::vector<double> alpha_bar;

    double at(int t) const { return alpha_bar[static_cast<std::size_t>(t)]; }
};

/// Cosine schedule (offset 0.008) with per-step beta capped at 0.999.
/// Throws DiffusionError{InvalidSteps} outside [1, 1000].
Schedule make_schedule(int steps = kDefaultSteps);

}  // namespace mindcube::diffusion
