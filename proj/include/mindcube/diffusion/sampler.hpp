#pragma once

#include <cstddef>
#include <cstdint>

#include "mindcube/diffusion/denoiser.hpp"

namespace mindcube::diffusion {

inline constexpr double kDefaultGamma = 1.5;
inline constexpr std::size_t kDefaultKeep = 64;

struct GuidanceConfig {
    double gamma = kDefaultGamma;
    Condition condition{};
};

/// (1 - gamma) * eps_uncond + gamma * eps_cond. Throws ShapeMismatch.
LatentSequence cfg_epsilon(const LatentSequence& eps_uncond, const LatentSequence& eps_cond,
                           double gamma);

/// Deterministic guided sampling from z_T ~ N(0, I) (seeded).
///
/// The update is the ODE form parameterized by alpha_bar: each step recovers
/// the clean estimate x0 from the guided eps and moves to the next noise level,
/// with a second-order multistep correction on x0 (first order on the first
/// and last steps). With a non-empty prefix of K frames, frames [0, K) are
/// replaced by the prefix re-noised to the current level before every
/// denoiser call and set exactly to the prefix at the end.
///
/// Throws PrefixTooLong, NonFiniteDetected, InvalidArgument.
LatentSequence sample(const Denoiser& denoiser, const Schedule& schedule,
                      const GuidanceConfig& guidance, std::size_t length, std::uint64_t seed,
                      const LatentSequence& prefix = {});

/// Continues `previous`: samples `length` frames whose first `keep` frames are
/// the last `keep` frames of `previous`.
LatentSequence outpaint_continuation(const LatentSequence& previous, std::size_t keep,
                                     const Denoiser& denoiser, const Schedule& schedule,
                                     const GuidanceConfig& guidance, std::size_t length,
                                     std::uint64_t seed);

}  // namespace mindcube::diffusion
