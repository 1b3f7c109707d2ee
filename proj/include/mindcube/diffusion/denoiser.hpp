#pragma once

#include <array>
#include <optional>

#include "mindcube/conditioning/activity.hpp"
#include "mindcube/diffusion/latent.hpp"
#include "mindcube/diffusion/schedule.hpp"

namespace mindcube::diffusion {

using conditioning::Condition;

struct StepInfo {
    int t = 0;
    double alpha_bar = 1.0;
};

/// Noise predictor eps(z_t, t, c). Without a condition it returns the
/// unconditional prediction (the conditional-dropout convention).
class Denoiser {
public:
    virtual ~Denoiser() = default;

    /// `eps` has the same length as `z`. Must be deterministic.
    virtual void predict_eps(const LatentSequence& z, const StepInfo& step,
                             const std::optional<Condition>& condition,
                             LatentSequence& eps) const = 0;
};

/// Optimal eps prediction for scalar data drawn from N(mu, sigma^2), computed
/// in double. Throws DiffusionError{SingularStep} when alpha_bar >= 1.
double gaussian_oracle_eps(double z_t, double alpha_bar, double mu, double sigma);
double gaussian_oracle_eps(double z_t, const Schedule& schedule, int t, double mu, double sigma);

/// Exact denoiser for data ~ N(mu, sigma^2 I) per channel. Ignores conditions.
class GaussianOracleDenoiser final : public Denoiser {
public:
    GaussianOracleDenoiser(std::array<double, 4> mu, double sigma);

    void predict_eps(const LatentSequence& z, const StepInfo& step,
                     const std::optional<Condition>& condition,
                     LatentSequence& eps) const override;

private:
    std::array<double, 4> mu_;
    std::array<double, 4> sigma_;
};

/// Test denoiser with a known conditional law. Unconditionally every channel
/// is N(0, 1); given c, channel kConditionedChannel (the amplitude channel)
/// becomes N(2c - 1, 0.1^2) and the others stay N(0, 1).
class ConditionedOracleDenoiser final : public Denoiser {
public:
    static constexpr std::size_t kConditionedChannel = 2;
    static constexpr double kConditionedSigma = 0.1;

    static double conditional_mean(double c) { return 2.0 * c - 1.0; }

    void predict_eps(const LatentSequence& z, const StepInfo& step,
                     const std::optional<Condition>& condition,
                     LatentSequence& eps) const override;
};

/// Shared by the oracle denoisers: per-channel Gaussian eps via the active kernels.
void gaussian_eps(const LatentSequence& z, double alpha_bar, const std::array<double, 4>& mu,
                  const std::array<double, 4>& sigma, LatentSequence& eps);

}  // namespace mindcube::diffusion
