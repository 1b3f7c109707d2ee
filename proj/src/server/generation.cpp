#include "mindcube/server/generation.hpp"

#include <fmt/format.h>

#include "mindcube/diffusion/sampler.hpp"

namespace mindcube::server {

ConditionPoint compute_condition(std::span<const SensorFrame> window, const conditioning::ActivityConfig& config) {
    ConditionPoint p;
    p.activity = conditioning::activity_score(conditioning::channel_std(window, config), config);
    p.condition = conditioning::rms_condition(p.activity, config);
    return p;
}

Generator::Generator(const PipelineConfig& config, std::shared_ptr<const diffusion::Denoiser> denoiser)
    : denoiser_(denoiser ? std::move(denoiser) : std::make_shared<diffusion::ConditionedOracleDenoiser>()),
      schedule_(diffusion::make_schedule(config.diffusion_steps)),
      gamma_(config.gamma),
      keep_(config.keep),
      length_(config.latent_length),
      seed_(config.seed) {}

diffusion::LatentSequence Generator::next(const conditioning::Condition& condition) {
    const diffusion::GuidanceConfig guidance{gamma_, condition};
    const std::uint64_t seed = seed_for(count_);
    auto latents = previous_
                       ? diffusion::outpaint_continuation(*previous_, keep_, *denoiser_, schedule_, guidance, length_, seed)
                       : diffusion::sample(*denoiser_, schedule_, guidance, length_, seed);
    previous_ = latents;
    ++count_;
    return latents;
}

ReplayResult replay_frames(std::span<const SensorFrame> frames, const PipelineConfig& config, bool generate_latents) {
    ReplayResult out;
    const std::size_t window = config.activity.window_frames;
    const std::size_t every = config.frames_per_read();
    Generator generator(config);
    for (std::size_t consumed = every; consumed <= frames.size(); consumed += every) {
        if (consumed < window) continue;
        TraceEntry e;
        e.generation = out.trace.size();
        e.frame_index = consumed;
        e.last_seq = frames[consumed - 1].seq;
        e.point = compute_condition(frames.subspan(consumed - window, window), config.activity);
        if (generate_latents) out.latents.push_back(generator.next(e.point.condition));
        out.trace.push_back(e);
    }
    return out;
}

std::string format_trace(const std::vector<TraceEntry>& trace) {
    std::string out;
    for (const auto& e : trace) {
        out += fmt::format("{},{},{},{},{}\n", e.generation, e.frame_index, e.last_seq, e.point.activity,
                           e.point.condition.value);
    }
    return out;
}

}  // namespace mindcube::server
