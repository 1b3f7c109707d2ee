#include "mindcube/diffusion/denoiser.hpp"

#include <cmath>

#include "mindcube/simd/kernels.hpp"

namespace mindcube::diffusion {

double gaussian_oracle_eps(double z_t, double alpha_bar, double mu, double sigma) {
    if (!(alpha_bar < 1.0)) {
        throw DiffusionError(DiffusionErrc::SingularStep, "alpha_bar == 1 has no noise to predict");
    }
    const double a = alpha_bar;
    const double var = sigma * sigma;
    const double x0 = mu + (std::sqrt(a) * var / (a * var + 1.0 - a)) * (z_t - std::sqrt(a) * mu);
    return (z_t - std::sqrt(a) * x0) / std::sqrt(1.0 - a);
}

double gaussian_oracle_eps(double z_t, const Schedule& schedule, int t, double mu, double sigma) {
    if (t < 0 || t > schedule.steps) {
        throw DiffusionError(DiffusionErrc::InvalidArgument, "step index outside schedule");
    }
    return gaussian_oracle_eps(z_t, schedule.at(t), mu, sigma);
}

void gaussian_eps(const LatentSequence& z, double alpha_bar, const std::array<double, 4>& mu,
                  const std::array<double, 4>& sigma, LatentSequence& eps) {
    if (!(alpha_bar < 1.0)) {
        throw DiffusionError(DiffusionErrc::SingularStep, "alpha_bar == 1 has no noise to predict");
    }
    if (eps.length() != z.length()) eps = LatentSequence(z.length());
    simd::OracleParams params{};
    const double sa = std::sqrt(alpha_bar);
    for (std::size_t ch = 0; ch < 4; ++ch) {
        const double var = sigma[ch] * sigma[ch];
        params.mu[ch] = static_cast<float>(mu[ch]);
        params.gain[ch] = static_cast<float>(sa * var / (alpha_bar * var + 1.0 - alpha_bar));
    }
    params.sqrt_a = static_cast<float>(sa);
    params.sqrt_1ma = static_cast<float>(std::sqrt(1.0 - alpha_bar));
    const auto in = z.values();
    simd::active().oracle_eps(in.data(), params, eps.values().data(), in.size());
}

GaussianOracleDenoiser::GaussianOracleDenoiser(std::array<double, 4> mu, double sigma)
    : mu_(mu), sigma_{sigma, sigma, sigma, sigma} {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw DiffusionError(DiffusionErrc::InvalidArgument, "sigma must be positive");
    }
}

void GaussianOracleDenoiser::predict_eps(const LatentSequence& z, const StepInfo& step,
                                         const std::optional<Condition>&,
                                         LatentSequence& eps) const {
    gaussian_eps(z, step.alpha_bar, mu_, sigma_, eps);
}

void ConditionedOracleDenoiser::predict_eps(const LatentSequence& z, const StepInfo& step,
                                            const std::optional<Condition>& condition,
                                            LatentSequence& eps) const {
    std::array<double, 4> mu{0.0, 0.0, 0.0, 0.0};
    std::array<double, 4> sigma{1.0, 1.0, 1.0, 1.0};
    if (condition) {
        mu[kConditionedChannel] = conditional_mean(condition->value);
        sigma[kConditionedChannel] = kConditionedSigma;
    }
    gaussian_eps(z, step.alpha_bar, mu, sigma, eps);
}

}  // namespace mindcube::diffusion
