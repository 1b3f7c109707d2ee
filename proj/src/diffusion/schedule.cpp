#include "mindcube/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mindcube/diffusion/latent.hpp"

namespace mindcube::diffusion {

Schedule make_schedule(int steps) {
    if (steps < 1 || steps > kMaxSteps) {
        throw DiffusionError(DiffusionErrc::InvalidSteps,
                             "steps must lie in [1, 1000], got " + std::to_string(steps));
    }
    constexpr double kOffset = 0.008;
    constexpr double kMaxBeta = 0.999;
    const auto f = [&](int t) {
        const double phase = (static_cast<double>(t) / steps + kOffset) / (1.0 + kOffset);
        const double c = std::cos(phase * std::numbers::pi / 2.0);
        return c * c;
    };
    Schedule schedule;
    schedule.steps = steps;
    schedule.alpha_bar.resize(static_cast<std::size_t>(steps) + 1);
    schedule.alpha_bar[0] = 1.0;
    const double f0 = f(0);
    for (int t = 1; t <= steps; ++t) {
        const double previous = schedule.alpha_bar[static_cast<std::size_t>(t) - 1];
        const double beta = std::min(1.0 - (f(t) / f0) / previous, kMaxBeta);
        schedule.alpha_bar[static_cast<std::size_t>(t)] = previous * (1.0 - beta);
    }
    return schedule;
}

}  // namespace mindcube::diffusion
