#include "mindcube/server/pipeline.hpp"

#include <sys/resource.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mindcube/diffusion/latent_file.hpp"
#include "mindcube/sonify/control.hpp"
#include "mindcube/wire/errors.hpp"

namespace mindcube::server {
namespace {

using Clock = std::chrono::steady_clock;
constexpr std::size_t kMaxCsvTimes = 1 << 16;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

Clock::duration seconds(double s) {
    return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s));
}

// Generation is the slow consumer; let the 20 Hz paths win the CPU.
void lower_thread_priority() {
#ifdef __linux__
    ::setpriority(PRIO_PROCESS, static_cast<id_t>(::syscall(SYS_gettid)), 10);
#endif
}

}  // namespace

bool AudioQueue::push(GeneratedAudio item) {
    bool dropped = false;
    {
        std::lock_guard lock(mutex_);
        if (items_.size() >= depth_) {
            items_.pop_front();
            dropped = true;
        }
        items_.push_back(std::move(item));
    }
    ready_.notify_one();
    return dropped;
}

std::optional<GeneratedAudio> AudioQueue::pop(std::stop_token stop) {
    std::unique_lock lock(mutex_);
    if (!ready_.wait(lock, stop, [&] { return !items_.empty(); })) return std::nullopt;
    GeneratedAudio item = std::move(items_.front());
    items_.pop_front();
    return item;
}

std::size_t AudioQueue::size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
}

Pipeline::Pipeline(PipelineConfig config, std::unique_ptr<FrameSource> source, PipelineOptions options)
    : config_(std::move(config)),
      options_(std::move(options)),
      source_(std::move(source)),
      ring_(std::max<std::size_t>(config_.activity.window_frames, 64) * 4) {
    config_.validate();
    if (!source_) throw std::invalid_argument("pipeline needs a frame source");
}

Pipeline::~Pipeline() { stop(); }

void Pipeline::start() {
    if (running_) return;
    started_ = Clock::now();
    if (options_.control_server) {
        control_ = std::make_unique<ControlBroadcaster>(config_.tcp_port, config_.bind_any, config_.max_client_backlog);
        control_->start();
    }
    if (options_.panel_server) {
        panel_ = std::make_unique<WebSocketServer>(
            config_.ws_port, [this](std::string_view text) { return handle_panel_message(text); },
            [this] { return telemetry_json(telemetry()); }, config_.telemetry_hz, config_.bind_any,
            config_.max_client_backlog);
        panel_->start();
    }
    if (options_.record_log) recorder_ = std::make_unique<PacketLogWriter>(*options_.record_log);
    for (const auto* dir : {&options_.wav_dir, &options_.latent_dir}) {
        if (*dir) std::filesystem::create_directories(**dir);
    }

    audio_thread_ = std::jthread([this](std::stop_token st) { audio_loop(st); });
    generation_thread_ = std::jthread([this](std::stop_token st) { generation_loop(st); });
    control_thread_ = std::jthread([this](std::stop_token st) { control_loop(st); });
    ingest_thread_ = std::jthread([this](std::stop_token st) { ingest_loop(st); });
    running_ = true;
}

void Pipeline::stop() {
    if (!running_) return;
    for (auto* t : {&ingest_thread_, &control_thread_, &generation_thread_, &audio_thread_}) t->request_stop();
    for (auto* t : {&ingest_thread_, &control_thread_, &generation_thread_, &audio_thread_}) {
        if (t->joinable()) t->join();
    }
    if (panel_) panel_->stop();
    if (control_) control_->stop();
    if (recorder_) recorder_->flush();
    running_ = false;
}

std::uint16_t Pipeline::control_port() const { return control_ ? control_->port() : 0; }
std::uint16_t Pipeline::panel_port() const { return panel_ ? panel_->port() : 0; }

double Pipeline::seconds_since_start() const {
    return std::chrono::duration<double>(Clock::now() - started_).count();
}

PipelineStats Pipeline::stats() const {
    std::lock_guard lock(state_mutex_);
    return stats_;
}

std::vector<GenerationRecord> Pipeline::generations() const {
    std::lock_guard lock(state_mutex_);
    return generations_;
}

void Pipeline::set_audio_sink(std::function<void(const GeneratedAudio&)> sink) {
    std::lock_guard lock(state_mutex_);
    sink_ = std::move(sink);
}

Telemetry Pipeline::telemetry() const {
    Telemetry t;
    t.seq = telemetry_seq_++;
    t.uptime_s = seconds_since_start();
    t.source_connected = source_->connected();
    std::lock_guard lock(state_mutex_);
    t.frames = stats_.frames;
    t.seq_gaps = stats_.seq_gaps;
    if (live_.have_frame) {
        t.frame_seq = live_.frame.seq;
        for (int i = 0; i < 4; ++i) t.buttons[static_cast<std::size_t>(i)] = live_.frame.button(i + 1);
        t.joy_x = live_.frame.joy_unit(0);
        t.joy_y = live_.frame.joy_unit(1);
    }
    t.pitch_deg = live_.attitude.pitch * kRadToDeg;
    t.roll_deg = live_.attitude.roll * kRadToDeg;
    t.encoder_position = live_.encoder_position;
    t.activity = live_.point.activity;
    t.condition = live_.point.condition.value;
    t.events_accepted = stats_.events_accepted;
    t.events_rejected = stats_.events_rejected;
    t.generations = generations_.size();
    if (!generations_.empty()) {
        t.last_generation_s = generations_.back().compute_s;
        t.last_render_rms = generations_.back().render_rms;
        const std::size_t n = std::min<std::size_t>(generations_.size(), 10);
        const double span = generations_.back().snapshot_s - generations_[generations_.size() - n].snapshot_s;
        if (n > 1 && span > 0.0) t.generation_rate_hz = static_cast<double>(n - 1) / span;
    }
    return t;
}

std::optional<std::string> Pipeline::handle_panel_message(std::string_view text) {
    try {
        source_->post(parse_panel_message(text));
    } catch (const std::exception& e) {
        std::lock_guard lock(state_mutex_);
        ++stats_.events_rejected;
        return error_message_json(e.what());
    }
    std::lock_guard lock(state_mutex_);
    ++stats_.events_accepted;
    return std::nullopt;
}

void Pipeline::ingest_loop(std::stop_token stop) {
    std::optional<SensorFrame> previous;
    while (!stop.stop_requested()) {
        const auto packet = source_->next(stop);
        if (!packet) break;
        if (recorder_) {
            const auto t_us = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - started_).count();
            recorder_->append(static_cast<std::uint64_t>(t_us), *packet);
        }
        SensorFrame frame;
        try {
            frame = wire::decode_frame(*packet);
        } catch (const wire::WireError& e) {
            spdlog::debug("dropped packet: {}", e.what());
            std::lock_guard lock(state_mutex_);
            ++stats_.decode_errors;
            continue;
        }
        if (previous && frame.seq != static_cast<std::uint8_t>(previous->seq + 1)) {
            const double dt_ms = static_cast<double>(frame.timestamp_ms - previous->timestamp_ms);
            const double period_ms = 1000.0 / config_.stream_rate_hz;
            const auto missing = static_cast<std::uint64_t>(std::max(0.0, std::round(dt_ms / period_ms) - 1.0));
            spdlog::warn("seq gap: expected {} got {} (about {} frames missing)",
                         static_cast<std::uint8_t>(previous->seq + 1), frame.seq, missing);
            std::lock_guard lock(state_mutex_);
            ++stats_.seq_gaps;
            stats_.missing_frames += missing;
        }
        previous = frame;
        ring_.push(frame);
        std::lock_guard lock(state_mutex_);
        ++stats_.frames;
    }
    std::lock_guard lock(state_mutex_);
    stats_.source_finished = true;
    spdlog::info("frame source finished");
}

void Pipeline::control_loop(std::stop_token stop) {
    std::uint64_t cursor = 0;
    fusion::ComplementaryFilter filter;
    sonify::ControlMapper mapper;
    conditioning::FrameWindow window(config_.activity.window_frames);
    while (ring_.wait_beyond(cursor, stop)) {
        for (const SensorFrame& frame : ring_.read_since(cursor)) {
            const fusion::Attitude attitude = filter.update(frame);
            window.push(frame);
            ConditionPoint point;
            if (window.full()) {
                const auto frames = window.snapshot();
                point = compute_condition(frames, config_.activity);
            } else {
                point.condition = conditioning::rms_condition(0.0, config_.activity);
            }
            const auto cf = mapper.map(attitude, frame, point.activity, point.condition);
            const std::string line = sonify::serialize_csv(cf);
            if (control_) control_->publish(line);
            const double now = seconds_since_start();

            std::lock_guard lock(state_mutex_);
            live_.attitude = attitude;
            live_.frame = frame;
            live_.have_frame = true;
            live_.encoder_position = mapper.encoder_position();
            live_.point = point;
            ++stats_.csv_lines;
            if (stats_.csv_times_s.size() >= kMaxCsvTimes) {
                stats_.csv_times_s.erase(stats_.csv_times_s.begin(),
                                         stats_.csv_times_s.begin() + kMaxCsvTimes / 2);
            }
            stats_.csv_times_s.push_back(now);
        }
    }
}

void Pipeline::generation_loop(std::stop_token stop) {
    lower_thread_priority();
    Generator generator(config_);
    const std::size_t window = config_.activity.window_frames;
    auto next_start = Clock::now();
    while (sleep_until(stop, next_start)) {
        const auto cycle_start = Clock::now();
        const auto frames = ring_.last(window);
        if (frames.size() < window) {
            next_start = cycle_start + seconds(std::min(config_.sensor_read_period_s, 0.1));
            continue;
        }
        GenerationRecord record;
        record.index = generator.count();
        record.snapshot_s = std::chrono::duration<double>(cycle_start - started_).count();
        record.frames_seen = ring_.total();
        record.point = compute_condition(frames, config_.activity);

        GeneratedAudio item;
        item.index = record.index;
        item.latents = generator.next(record.point.condition);
        if (options_.render) {
            item.audio = sonify::render_latents(item.latents, config_.hop, generator.seed_for(record.index));
            record.render_rms = sonify::audio_rms(item.audio);
        }
        record.compute_s = std::chrono::duration<double>(Clock::now() - cycle_start).count();

        if (config_.simulated_latency_s && !sleep_until(stop, cycle_start + seconds(*config_.simulated_latency_s))) {
            break;
        }
        const auto cycle_end = Clock::now();
        record.cycle_s = std::chrono::duration<double>(cycle_end - cycle_start).count();
        record.overrun = record.compute_s > 2.0 * config_.generation_budget_s;
        if (record.overrun) {
            spdlog::warn("generation {} overran: {:.3f} s against a {:.3f} s budget; skipping a cycle",
                         record.index, record.compute_s, config_.generation_budget_s);
        }
        spdlog::debug("generation {}: activity {:.4f} c {:.4f} in {:.3f} s", record.index, record.point.activity,
                      record.point.condition.value, record.compute_s);

        const bool dropped = audio_.push(std::move(item));
        {
            std::lock_guard lock(state_mutex_);
            if (record.overrun) ++stats_.overruns;
            if (dropped) ++stats_.audio_dropped;
            generations_.push_back(record);
        }
        if (dropped) spdlog::warn("audio queue full; dropped the oldest generation");

        next_start = std::max(cycle_start + seconds(config_.sensor_read_period_s), cycle_end);
        if (record.overrun) next_start += seconds(config_.generation_budget_s);
    }
}

void Pipeline::audio_loop(std::stop_token stop) {
    while (auto item = audio_.pop(stop)) {
        if (options_.wav_dir && !item->audio.samples.empty()) {
            sonify::write_wav(*options_.wav_dir / fmt::format("gen_{:05}.wav", item->index), item->audio);
        }
        if (options_.latent_dir) {
            diffusion::write_latent_file(*options_.latent_dir / fmt::format("gen_{:05}.mclz", item->index),
                                         item->latents);
        }
        std::function<void(const GeneratedAudio&)> sink;
        {
            std::lock_guard lock(state_mutex_);
            sink = sink_;
        }
        if (sink) sink(*item);
    }
}

}  // namespace mindcube::server
