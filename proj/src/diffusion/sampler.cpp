#include "mindcube/diffusion/sampler.hpp"

#include <cmath>
#include <random>
#include <string>

#include "mindcube/simd/kernels.hpp"

namespace mindcube::diffusion {
namespace {

void require_finite(const LatentSequence& x, int t, const char* what) {
    if (!simd::all_finite(x.values())) {
        throw DiffusionError(DiffusionErrc::NonFiniteDetected,
                             std::string(what) + " non-finite at step " + std::to_string(t));
    }
}

void fill_normal(std::mt19937_64& rng, std::span<float> out) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (float& v : out) v = normal(rng);
}

// Half log signal-to-noise ratio.
double lambda(double alpha_bar) { return 0.5 * std::log(alpha_bar / (1.0 - alpha_bar)); }

}  // namespace

LatentSequence cfg_epsilon(const LatentSequence& eps_uncond, const LatentSequence& eps_cond,
                           double gamma) {
    if (eps_uncond.length() != eps_cond.length()) {
        throw DiffusionError(DiffusionErrc::ShapeMismatch,
                             std::to_string(eps_uncond.length()) + " vs " +
                                 std::to_string(eps_cond.length()) + " frames");
    }
    if (!std::isfinite(gamma)) {
        throw DiffusionError(DiffusionErrc::InvalidArgument, "guidance weight must be finite");
    }
    LatentSequence out(eps_uncond.length());
    simd::cfg_combine(eps_uncond.values(), eps_cond.values(), static_cast<float>(gamma),
                      out.values());
    return out;
}

LatentSequence sample(const Denoiser& denoiser, const Schedule& schedule,
                      const GuidanceConfig& guidance, std::size_t length, std::uint64_t seed,
                      const LatentSequence& prefix) {
    if (length == 0) {
        throw DiffusionError(DiffusionErrc::InvalidArgument, "length must be at least 1");
    }
    if (schedule.steps < 1 || schedule.alpha_bar.size() != static_cast<std::size_t>(schedule.steps) + 1) {
        throw DiffusionError(DiffusionErrc::InvalidSteps, "malformed schedule");
    }
    if (!prefix.empty() && prefix.length() >= length) {
        throw DiffusionError(DiffusionErrc::PrefixTooLong,
                             "prefix of " + std::to_string(prefix.length()) +
                                 " frames does not fit in " + std::to_string(length));
    }
    if (!std::isfinite(guidance.gamma) || !std::isfinite(guidance.condition.value)) {
        throw DiffusionError(DiffusionErrc::InvalidArgument, "guidance must be finite");
    }

    const std::size_t keep_values = prefix.length() * LatentSequence::kDim;
    const float gamma = static_cast<float>(guidance.gamma);
    const std::optional<Condition> condition = guidance.condition;
    const auto& kernels = simd::active();

    std::mt19937_64 rng(seed);
    LatentSequence z(length);
    fill_normal(rng, z.values());

    LatentSequence eps_u(length), eps_c(length), eps(length), x0(length), x0_prev(length),
        drift(length), prefix_noise(prefix.length());
    double h_prev = 0.0;
    bool have_prev = false;

    for (int t = schedule.steps; t >= 1; --t) {
        const double a = schedule.at(t);
        const double a_next = schedule.at(t - 1);
        const double alpha = std::sqrt(a);
        const double sigma = std::sqrt(1.0 - a);

        if (keep_values > 0) {
            fill_normal(rng, prefix_noise.values());
            kernels.renoise(prefix.values().data(), prefix_noise.values().data(),
                            static_cast<float>(alpha), static_cast<float>(sigma),
                            z.values().data(), keep_values);
        }

        const StepInfo step{t, a};
        denoiser.predict_eps(z, step, std::nullopt, eps_u);
        denoiser.predict_eps(z, step, condition, eps_c);
        if (eps_u.length() != length || eps_c.length() != length) {
            throw DiffusionError(DiffusionErrc::ShapeMismatch, "denoiser changed the sequence length");
        }
        kernels.cfg_combine(eps_u.values().data(), eps_c.values().data(), gamma,
                            eps.values().data(), eps.values().size());
        require_finite(eps, t, "eps");

        // Clean estimate implied by the guided noise prediction.
        simd::axpby(static_cast<float>(1.0 / alpha), z.values(), static_cast<float>(-sigma / alpha),
                    eps.values(), x0.values());

        if (a_next >= 1.0) {
            z = x0;
        } else {
            const double alpha_next = std::sqrt(a_next);
            const double sigma_next = std::sqrt(1.0 - a_next);
            const double h = lambda(a_next) - lambda(a);
            const LatentSequence* estimate = &x0;
            if (have_prev) {
                const double r = h_prev / h;
                simd::axpby(static_cast<float>(1.0 + 0.5 / r), x0.values(),
                            static_cast<float>(-0.5 / r), x0_prev.values(), drift.values());
                estimate = &drift;
            }
            simd::axpby(static_cast<float>(sigma_next / sigma), z.values(),
                        static_cast<float>(-alpha_next * std::expm1(-h)), estimate->values(),
                        z.values());
            std::swap(x0_prev, x0);
            h_prev = h;
            have_prev = true;
        }
        require_finite(z, t, "latent");
    }

    if (keep_values > 0) {
        std::copy(prefix.values().begin(), prefix.values().end(), z.values().begin());
    }
    return z;
}

LatentSequence outpaint_continuation(const LatentSequence& previous, std::size_t keep,
                                     const Denoiser& denoiser, const Schedule& schedule,
                                     const GuidanceConfig& guidance, std::size_t length,
                                     std::uint64_t seed) {
    if (keep > previous.length()) {
        throw DiffusionError(DiffusionErrc::PrefixTooLong,
                             "cannot keep " + std::to_string(keep) + " of " +
                                 std::to_string(previous.length()) + " frames");
    }
    return sample(denoiser, schedule, guidance, length, seed,
                  keep == 0 ? LatentSequence{} : previous.tail(keep));
}

}  // namespace mindcube::diffusion
