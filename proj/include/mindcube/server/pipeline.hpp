#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mindcube/diffusion/latent.hpp"
#include "mindcube/fusion/attitude.hpp"
#include "mindcube/server/config.hpp"
#include "mindcube/server/control_stream.hpp"
#include "mindcube/server/frame_ring.hpp"
#include "mindcube/server/generation.hpp"
#include "mindcube/server/packet_log.hpp"
#include "mindcube/server/panel_protocol.hpp"
#include "mindcube/server/sources.hpp"
#include "mindcube/server/websocket.hpp"
#include "mindcube/sonify/audio.hpp"

namespace mindcube::server {

struct PipelineOptions {
    bool control_server = true;  // CSV over TCP
    bool panel_server = true;    // WebSocket
    std::optional<std::filesystem::path> wav_dir;
    std::optional<std::filesystem::path> latent_dir;
    std::optional<std::filesystem::path> record_log;
    /// Render audio for each generation (off in timing-only runs).
    bool render = true;
};

struct GenerationRecord {
    std::uint64_t index = 0;
    double snapshot_s = 0.0;  // since pipeline start
    std::uint64_t frames_seen = 0;
    ConditionPoint point;
    double compute_s = 0.0;   // sampler + render
    double cycle_s = 0.0;     // including simulated latency
    double render_rms = 0.0;
    bool overrun = false;
};

struct GeneratedAudio {
    std::uint64_t index = 0;
    diffusion::LatentSequence latents;
    sonify::AudioBuffer audio;
};

struct PipelineStats {
    std::uint64_t frames = 0;
    std::uint64_t decode_errors = 0;
    std::uint64_t seq_gaps = 0;
    std::uint64_t missing_frames = 0;  // estimated from timestamps
    std::uint64_t csv_lines = 0;
    std::vector<double> csv_times_s;   // emission times, most recent last
    std::uint64_t overruns = 0;
    std::uint64_t audio_dropped = 0;
    std::uint64_t events_accepted = 0;
    std::uint64_t events_rejected = 0;
    bool source_finished = false;
};

/// Bounded queue of rendered generations; the oldest is dropped when full.
class AudioQueue {
public:
    explicit AudioQueue(std::size_t depth = 3) : depth_(depth) {}
    /// Returns true if an older item was dropped to make room.
    bool push(GeneratedAudio item);
    std::optional<GeneratedAudio> pop(std::stop_token stop);
    std::size_t size() const;

private:
    std::size_t depth_;
    mutable std::mutex mutex_;
    std::condition_variable_any ready_;
    std::deque<GeneratedAudio> items_;
};

/// Ingest, 20 Hz control stream, generation loop and network surfaces.
class Pipeline {
public:
    Pipeline(PipelineConfig config, std::unique_ptr<FrameSource> source, PipelineOptions options = {});
    ~Pipeline();

    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    /// Throws BindFailed.
    void start();
    void stop();

    std::uint16_t control_port() const;
    std::uint16_t panel_port() const;

    PipelineStats stats() const;
    std::vector<GenerationRecord> generations() const;
    Telemetry telemetry() const;

    /// Applies one panel message. Returns an error reply, or nullopt when accepted.
    std::optional<std::string> handle_panel_message(std::string_view text);

    /// Called on the audio thread for every generation that leaves the queue.
    void set_audio_sink(std::function<void(const GeneratedAudio&)> sink);

    const PipelineConfig& config() const noexcept { return config_; }

private:
    struct LiveState {
        fusion::Attitude attitude;
        SensorFrame frame;
        bool have_frame = false;
        long long encoder_position = 0;
        ConditionPoint point;
    };

    void ingest_loop(std::stop_token stop);
    void control_loop(std::stop_token stop);
    void generation_loop(std::stop_token stop);
    void audio_loop(std::stop_token stop);
    double seconds_since_start() const;

    PipelineConfig config_;
    PipelineOptions options_;
    std::unique_ptr<FrameSource> source_;
    FrameRing ring_;
    AudioQueue audio_;
    std::chrono::steady_clock::time_point started_;

    std::unique_ptr<ControlBroadcaster> control_;
    std::unique_ptr<WebSocketServer> panel_;
    std::unique_ptr<PacketLogWriter> recorder_;

    mutable std::mutex state_mutex_;
    LiveState live_;
    PipelineStats stats_;
    std::vector<GenerationRecord> generations_;
    std::function<void(const GeneratedAudio&)> sink_;
    mutable std::atomic<std::uint64_t> telemetry_seq_{0};

    std::jthread ingest_thread_;
    std::jthread control_thread_;
    std::jthread generation_thread_;
    std::jthread audio_thread_;
    bool running_ = false;
};

}  // namespace mindcube::server
