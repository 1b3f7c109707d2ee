// mindcube: run the sonification pipeline, record and replay packet logs,
// render latent files, serve a simulated device.

#include <csignal>
#include <ctime>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mindcube/conditioning/activity.hpp"
#include "mindcube/diffusion/denoiser.hpp"
#include "mindcube/diffusion/latent_file.hpp"
#include "mindcube/diffusion/sampler.hpp"
#include "mindcube/server/config.hpp"
#include "mindcube/server/generation.hpp"
#include "mindcube/server/packet_log.hpp"
#include "mindcube/server/pipeline.hpp"
#include "mindcube/server/sources.hpp"
#include "mindcube/simd/kernels.hpp"
#include "mindcube/simdevice/scenario.hpp"
#include "mindcube/sonify/audio.hpp"
#include "mindcube/wire/crc16.hpp"
#include "mindcube/wire/packet.hpp"

namespace fs = std::filesystem;
using namespace mindcube;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Signals are blocked in every thread and collected with sigtimedwait.
sigset_t stop_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    return set;
}

/// Waits for SIGINT/SIGTERM or until `seconds` elapse. True if signalled.
bool wait_for_signal(std::optional<double> seconds) {
    const sigset_t set = stop_signals();
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(seconds.value_or(0.0));
    while (true) {
        timespec ts{0, 200'000'000};
        if (seconds) {
            const double left = std::chrono::duration<double>(deadline - std::chrono::steady_clock::now()).count();
            if (left <= 0.0) return false;
            if (left < 0.2) ts = {0, static_cast<long>(left * 1e9)};
        }
        if (sigtimedwait(&set, nullptr, &ts) > 0) return true;
    }
}

struct SourceArgs {
    std::string scenario = "idle";
    std::uint64_t seed = 1;
    std::string source;  // host:port, empty for the simulated device
};

std::pair<std::string, std::uint16_t> split_host_port(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0) throw UsageError("--source expects host:port, got '" + text + "'");
    int port = 0;
    try {
        port = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        port = -1;
    }
    if (port < 1 || port > 65535) throw UsageError("bad port in '" + text + "'");
    return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

std::unique_ptr<server::FrameSource> make_source(const SourceArgs& args, const server::PipelineConfig& config,
                                                 std::optional<double> duration_s = std::nullopt) {
    if (!args.source.empty()) {
        const auto [host, port] = split_host_port(args.source);
        return std::make_unique<server::TcpFeedSource>(
            host, port, server::Backoff{config.reconnect_initial_s, config.reconnect_max_s});
    }
    simdevice::Scenario scenario{simdevice::parse_scenario_kind(args.scenario), args.seed, duration_s};
    return std::make_unique<server::SimulatedSource>(scenario, config.stream_rate_hz);
}

void add_source_options(CLI::App* cmd, SourceArgs& args) {
    cmd->add_option("--scenario", args.scenario, "idle, fidget-burst, tilt-sweep or joystick-circle");
    cmd->add_option("--seed", args.seed, "scenario seed");
    cmd->add_option("--source", args.source, "read frames from a device at host:port instead");
}

server::PipelineConfig load(const std::string& path) {
    return path.empty() ? server::PipelineConfig{} : server::load_config(path);
}

// --- run ----------------------------------------------------------------------

struct RunArgs {
    SourceArgs source;
    std::string config;
    std::optional<int> tcp_port;
    std::optional<int> ws_port;
    std::string wav_out;
    std::string latents_out;
    std::string record;
    bool headless = false;
    std::optional<double> latency;
    std::optional<double> duration;
};

int cmd_run(const RunArgs& a) {
    auto config = load(a.config);
    if (a.tcp_port) server::apply_config_value(config, "tcp_port", std::to_string(*a.tcp_port));
    if (a.ws_port) server::apply_config_value(config, "ws_port", std::to_string(*a.ws_port));
    if (a.latency) config.simulated_latency_s = *a.latency;
    if (!a.source.source.empty() || a.source.seed != 1) config.seed = a.source.seed;
    config.validate();

    server::PipelineOptions options;
    options.panel_server = !a.headless;
    if (!a.wav_out.empty()) options.wav_dir = fs::path(a.wav_out);
    if (!a.latents_out.empty()) options.latent_dir = fs::path(a.latents_out);
    if (!a.record.empty()) options.record_log = fs::path(a.record);

    auto source = make_source(a.source, config);
    const std::string described = source->describe();
    server::Pipeline pipeline(config, std::move(source), options);
    pipeline.start();
    fmt::print("source {}\ncontrol tcp port {}\n", described, pipeline.control_port());
    if (options.panel_server) fmt::print("panel websocket port {}\n", pipeline.panel_port());
    std::fflush(stdout);

    wait_for_signal(a.duration);
    pipeline.stop();
    const auto s = pipeline.stats();
    const auto gens = pipeline.generations();
    fmt::print("frames {} csv lines {} seq gaps {} generations {} overruns {} audio dropped {}\n", s.frames,
               s.csv_lines, s.seq_gaps, gens.size(), s.overruns, s.audio_dropped);
    if (!gens.empty()) {
        double total = 0.0;
        for (const auto& g : gens) total += g.compute_s;
        fmt::print("mean generation time {:.3f} s\n", total / static_cast<double>(gens.size()));
    }
    return 0;
}

// --- record -------------------------------------------------------------------

int cmd_record(const std::string& file, const SourceArgs& args, double duration, bool fast) {
    server::PipelineConfig config;
    std::unique_ptr<server::FrameSource> source;
    if (args.source.empty()) {
        simdevice::Scenario scenario{simdevice::parse_scenario_kind(args.scenario), args.seed, duration};
        source = std::make_unique<server::SimulatedSource>(scenario, config.stream_rate_hz, !fast);
    } else {
        source = make_source(args, config);
    }
    server::PacketLogWriter writer(file);
    std::atomic<bool> done{false};
    std::jthread worker([&](std::stop_token stop) {
        const auto start = std::chrono::steady_clock::now();
        const auto end = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                     std::chrono::duration<double>(duration));
        while (!stop.stop_requested()) {
            const auto packet = source->next(stop);
            if (!packet) break;
            const auto now = std::chrono::steady_clock::now();
            const auto t_us = std::chrono::duration_cast<std::chrono::microseconds>(now - start).count();
            writer.append(static_cast<std::uint64_t>(t_us), *packet);
            // A simulated scenario is bounded by its own duration.
            if (!args.source.empty() && now >= end) break;
        }
        done = true;
    });
    const sigset_t set = stop_signals();
    while (!done) {
        timespec ts{0, 100'000'000};
        if (sigtimedwait(&set, nullptr, &ts) > 0) break;
    }
    worker.request_stop();
    worker.join();
    writer.flush();
    fmt::print("recorded {} packets to {}\n", writer.records(), file);
    return 0;
}

// --- replay -------------------------------------------------------------------

int cmd_replay(const std::string& file, const std::string& config_path, const std::string& out_dir,
               bool with_latents) {
    const auto config = load(config_path);
    std::size_t rejected = 0;
    const auto frames = server::decode_packets(server::read_packet_log(file), &rejected);
    if (rejected) spdlog::warn("{} packets in {} failed to decode", rejected, file);
    const auto result = server::replay_frames(frames, config, with_latents || !out_dir.empty());
    std::cout << server::format_trace(result.trace);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        for (std::size_t i = 0; i < result.latents.size(); ++i) {
            diffusion::write_latent_file(fs::path(out_dir) / fmt::format("gen_{:05}.mclz", i), result.latents[i]);
        }
        spdlog::info("wrote {} latent files to {}", result.latents.size(), out_dir);
    }
    return 0;
}

// --- render -------------------------------------------------------------------

int cmd_render(const std::string& in, const std::string& out, std::size_t hop, std::uint64_t seed) {
    const auto latents = diffusion::read_latent_file(in);
    const auto audio = sonify::render_latents(latents, hop, seed);
    sonify::write_wav(out, audio);
    fmt::print("{} latents -> {} frames ({:.2f} s), rms {:.4f}\n", latents.length(), audio.frames(),
               audio.duration_s(), sonify::audio_rms(audio));
    return 0;
}

// --- device -------------------------------------------------------------------

int cmd_device(const SourceArgs& args, int port, bool any) {
    if (port < 0 || port > 65535) throw UsageError("--port must lie in [0, 65535]");
    server::DeviceFeedServer device({simdevice::parse_scenario_kind(args.scenario), args.seed, {}},
                                    static_cast<std::uint16_t>(port), simdevice::kDefaultRateHz, any);
    device.start();
    fmt::print("device feed port {}\n", device.port());
    std::fflush(stdout);
    wait_for_signal(std::nullopt);
    device.stop();
    fmt::print("frames emitted {}\n", device.frames_emitted());
    return 0;
}

// --- selftest -----------------------------------------------------------------

int cmd_selftest() {
    int failures = 0;
    auto report = [&](bool ok, const std::string& what) {
        fmt::print("{} {}\n", ok ? "PASS" : "FAIL", what);
        if (!ok) ++failures;
    };
    fmt::print("kernels: {}\n", simd::active().name);

    const std::string check = "123456789";
    report(wire::crc16({reinterpret_cast<const std::uint8_t*>(check.data()), check.size()}) == 0x29B1,
           "crc16 check value 0x29B1");

    bool roundtrip = true;
    for (int i = 0; i < 2000 && roundtrip; ++i) {
        const auto f = simdevice::step_scenario({simdevice::ScenarioKind::FidgetBurst, 9, {}}, i);
        auto framed = wire::encode_frame(f);
        framed.pop_back();
        roundtrip = wire::decode_frame(framed) == f;
    }
    report(roundtrip, "wire round trip over 2000 scenario frames");

    conditioning::ActivityConfig ac;
    report(conditioning::rms_condition(0.0, ac).value == 1.0 && conditioning::rms_condition(1.0, ac).value == 0.0,
           "condition polarity endpoints");

    const auto schedule = diffusion::make_schedule(30);
    const diffusion::GaussianOracleDenoiser oracle({0.5, -1.0, 2.0, 0.0}, 0.7);
    const auto z = diffusion::sample(oracle, schedule, {1.0, {}}, 4096, 3);
    bool marginals = true;
    for (std::size_t ch = 0; ch < 4; ++ch) {
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < z.length(); ++i) sum += z.at(i, ch);
        const double mean = sum / static_cast<double>(z.length());
        for (std::size_t i = 0; i < z.length(); ++i) sq += (z.at(i, ch) - mean) * (z.at(i, ch) - mean);
        const double sd = std::sqrt(sq / static_cast<double>(z.length() - 1));
        const double want_mu = std::array{0.5, -1.0, 2.0, 0.0}[ch];
        marginals = marginals && std::abs(mean - want_mu) <= 0.05 && std::abs(sd - 0.7) <= 0.05;
    }
    report(marginals, "sampler marginals against the Gaussian oracle");

    const auto audio = sonify::render_latents(diffusion::LatentSequence(512), 2048, 1);
    report(audio.frames() == 1048576, "512 latents render to 1048576 frames");

    fmt::print("{}\n", failures ? "selftest FAILED" : "selftest ok");
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    const sigset_t set = stop_signals();
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    spdlog::set_default_logger(spdlog::stderr_color_mt("mindcube"));

    CLI::App app{"MindCube sensor sonification pipeline"};
    app.require_subcommand(1);
    std::string level = "info";
    app.add_option("--log-level", level, "trace, debug, info, warn, error or off");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "run the live pipeline");
    add_source_options(run_cmd, run.source);
    run_cmd->add_option("--config", run.config, "key=value config file");
    run_cmd->add_option("--tcp-port", run.tcp_port, "CSV control stream port (0 picks one)");
    run_cmd->add_option("--ws-port", run.ws_port, "panel WebSocket port (0 picks one)");
    run_cmd->add_option("--wav-out", run.wav_out, "write each generation as gen_NNNNN.wav here");
    run_cmd->add_option("--latents-out", run.latents_out, "write each generation as gen_NNNNN.mclz here");
    run_cmd->add_option("--record", run.record, "also log received packets to this file");
    run_cmd->add_flag("--headless", run.headless, "no panel WebSocket server");
    run_cmd->add_option("--simulated-latency", run.latency, "minimum seconds per generation");
    run_cmd->add_option("--duration", run.duration, "stop after this many seconds");

    std::string record_file;
    SourceArgs record_source;
    double record_duration = 10.0;
    bool record_fast = false;
    auto* record_cmd = app.add_subcommand("record", "log framed packets from a source");
    record_cmd->add_option("file", record_file)->required();
    add_source_options(record_cmd, record_source);
    record_cmd->add_option("--duration", record_duration, "seconds of stream to record")->check(CLI::PositiveNumber);
    record_cmd->add_flag("--fast", record_fast, "simulated source only: do not pace to real time");

    std::string replay_file;
    std::string replay_config;
    std::string replay_out;
    bool replay_latents = false;
    auto* replay_cmd = app.add_subcommand("replay", "re-run conditioning and generation from a packet log");
    replay_cmd->add_option("file", replay_file)->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--config", replay_config, "key=value config file");
    replay_cmd->add_option("--out", replay_out, "write gen_NNNNN.mclz latent files here");
    replay_cmd->add_flag("--latents", replay_latents, "run the sampler even without --out");

    std::string render_in;
    std::string render_out;
    std::size_t render_hop = sonify::kDefaultHop;
    std::uint64_t render_seed = 0;
    auto* render_cmd = app.add_subcommand("render", "render a latent file to WAV");
    render_cmd->add_option("file", render_in)->required()->check(CLI::ExistingFile);
    render_cmd->add_option("out", render_out)->required();
    render_cmd->add_option("--hop", render_hop, "frames per latent")->check(CLI::PositiveNumber);
    render_cmd->add_option("--seed", render_seed, "noise seed");

    auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in oracle checks");

    SourceArgs device_args;
    int device_port = 7100;
    bool device_any = false;
    auto* device_cmd = app.add_subcommand("device", "serve a simulated device over TCP");
    device_cmd->add_option("--scenario", device_args.scenario, "scenario name");
    device_cmd->add_option("--seed", device_args.seed, "scenario seed");
    device_cmd->add_option("--port", device_port, "listen port (0 picks one)");
    device_cmd->add_flag("--any", device_any, "listen on all interfaces");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(level));

    try {
        if (*run_cmd) return cmd_run(run);
        if (*record_cmd) return cmd_record(record_file, record_source, record_duration, record_fast);
        if (*replay_cmd) return cmd_replay(replay_file, replay_config, replay_out, replay_latents);
        if (*render_cmd) return cmd_render(render_in, render_out, render_hop, render_seed);
        if (*selftest_cmd) return cmd_selftest();
        if (*device_cmd) return cmd_device(device_args, device_port, device_any);
    } catch (const UsageError& e) {
        std::cerr << "mindcube: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mindcube: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
