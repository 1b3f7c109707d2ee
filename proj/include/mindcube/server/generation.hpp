#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mindcube/conditioning/activity.hpp"
#include "mindcube/diffusion/denoiser.hpp"
#include "mindcube/diffusion/latent.hpp"
#include "mindcube/server/config.hpp"

namespace mindcube::server {

struct ConditionPoint {
    double activity = 0.0;
    conditioning::Condition condition;
    bool operator==(const ConditionPoint&) const = default;
};

/// Activity and condition for one full window.
ConditionPoint compute_condition(std::span<const SensorFrame> window, const conditioning::ActivityConfig& config);

/// The generation step shared by the live pipeline and offline replay: a
/// fresh sample on the first call, then outpainted continuations.
class Generator {
public:
    /// Uses the conditioned oracle denoiser unless one is given.
    explicit Generator(const PipelineConfig& config, std::shared_ptr<const diffusion::Denoiser> denoiser = nullptr);

    diffusion::LatentSequence next(const conditioning::Condition& condition);

    std::uint64_t count() const noexcept { return count_; }
    /// Seed used by generation `index` (sampler and render noise).
    std::uint64_t seed_for(std::uint64_t index) const noexcept { return seed_ + index; }

private:
    std::shared_ptr<const diffusion::Denoiser> denoiser_;
    diffusion::Schedule schedule_;
    double gamma_;
    std::size_t keep_;
    std::size_t length_;
    std::uint64_t seed_;
    std::uint64_t count_ = 0;
    std::optional<diffusion::LatentSequence> previous_;
};

struct TraceEntry {
    std::uint64_t generation = 0;
    std::uint64_t frame_index = 0;  // frames consumed when the window was taken
    int last_seq = 0;
    ConditionPoint point;
    bool operator==(const TraceEntry&) const = default;
};

struct ReplayResult {
    std::vector<TraceEntry> trace;
    std::vector<diffusion::LatentSequence> latents;
};

/// Deterministic offline schedule: one generation every frames_per_read()
/// frames once the conditioning window is full. Latents only when asked.
ReplayResult replay_frames(std::span<const SensorFrame> frames, const PipelineConfig& config,
                           bool generate_latents = true);

/// "generation,frame_index,last_seq,activity,condition" lines, round-trip precision.
std::string format_trace(const std::vector<TraceEntry>& trace);

}  // namespace mindcube::server
