#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "mindcube/conditioning/activity.hpp"
#include "mindcube/diffusion/sampler.hpp"
#include "mindcube/diffusion/schedule.hpp"

namespace mindcube::server {

using conditioning::ConfigError;

struct PipelineConfig {
    // Generation cadence.
    double sensor_read_period_s = 1.0;
    double generation_budget_s = 1.05;
    std::optional<double> simulated_latency_s;

    // Diffusion pass-through.
    int diffusion_steps = diffusion::kDefaultSteps;
    double gamma = diffusion::kDefaultGamma;
    std::size_t keep = diffusion::kDefaultKeep;
    std::size_t latent_length = diffusion::LatentSequence::kDefaultLength;
    std::size_t hop = 2048;
    std::uint64_t seed = 1;

    conditioning::ActivityConfig activity;

    // Network. Port 0 picks an ephemeral port.
    std::uint16_t tcp_port = 7000;
    std::uint16_t ws_port = 7001;
    bool bind_any = false;
    std::size_t max_client_backlog = 1 << 20;
    double telemetry_hz = 10.0;

    // Frame source reconnect backoff.
    double reconnect_initial_s = 0.5;
    double reconnect_max_s = 8.0;

    double stream_rate_hz = 20.0;

    /// Throws ConfigError.
    void validate() const;

    /// Frames between generation snapshots in offline replay.
    std::size_t frames_per_read() const;
};

/// Applies one key. Throws ConfigError for unknown keys or bad values.
void apply_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// key=value lines; '#' starts a comment. Throws ConfigError.
void apply_config_text(PipelineConfig& config, std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

}  // namespace mindcube::server
