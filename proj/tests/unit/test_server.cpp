#include <doctest.h>

#include <poll.h>
#include <sys/socket.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mindcube/diffusion/latent_file.hpp"
#include "mindcube/server/config.hpp"
#include "mindcube/server/control_stream.hpp"
#include "mindcube/server/frame_ring.hpp"
#include "mindcube/server/generation.hpp"
#include "mindcube/server/net.hpp"
#include "mindcube/server/packet_log.hpp"
#include "mindcube/server/panel_protocol.hpp"
#include "mindcube/server/pipeline.hpp"
#include "mindcube/server/sources.hpp"
#include "mindcube/server/websocket.hpp"
#include "mindcube/simdevice/scenario.hpp"
#include "mindcube/sonify/control.hpp"
#include "mindcube/wire/packet.hpp"

using namespace mindcube;
using namespace mindcube::server;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "mindcube_test_server";
    std::filesystem::create_directories(dir);
    return dir / name;
}

SensorFrame frame_with_seq(int seq) {
    SensorFrame f;
    f.seq = static_cast<std::uint8_t>(seq);
    f.timestamp_ms = static_cast<std::uint32_t>(seq * 50);
    return f;
}

// Blocking line reader over a plain TCP client socket.
class LineClient {
public:
    explicit LineClient(std::uint16_t port) : fd_(connect_tcp("127.0.0.1", port)) {}

    std::optional<std::string> line(std::chrono::milliseconds timeout = 2000ms) {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            if (const auto nl = buf_.find('\n'); nl != std::string::npos) {
                std::string out = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                return out;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) return std::nullopt;
            pollfd p{fd_.get(), POLLIN, 0};
            if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) continue;
            char tmp[4096];
            const auto n = ::recv(fd_.get(), tmp, sizeof tmp, 0);
            if (n <= 0) return std::nullopt;
            buf_.append(tmp, static_cast<std::size_t>(n));
        }
    }

private:
    Fd fd_;
    std::string buf_;
};

template <class Pred>
bool wait_for(Pred pred, std::chrono::milliseconds timeout = 5000ms) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
        if (pred()) return true;
        std::this_thread::sleep_for(5ms);
    }
    return pred();
}

PipelineConfig small_config() {
    PipelineConfig c;
    c.tcp_port = 0;
    c.ws_port = 0;
    c.activity.window_frames = 10;
    c.latent_length = 64;
    c.keep = 8;
    c.diffusion_steps = 10;
    c.hop = 256;
    c.sensor_read_period_s = 0.2;
    return c;
}

PipelineOptions headless() {
    PipelineOptions o;
    o.control_server = false;
    o.panel_server = false;
    return o;
}

}  // namespace

TEST_CASE("config text parsing") {
    PipelineConfig c;
    apply_config_text(c,
                      "# cadence\n"
                      "sensor_read_period_s = 0.5\n"
                      "simulated_latency_s=1.05\n"
                      "diffusion.steps = 12\n"
                      "diffusion.gamma = 2\n"
                      "tcp_port = 0\n"
                      "activity.window_frames = 40\n");
    CHECK(c.sensor_read_period_s == 0.5);
    REQUIRE(c.simulated_latency_s);
    CHECK(*c.simulated_latency_s == 1.05);
    CHECK(c.diffusion_steps == 12);
    CHECK(c.gamma == 2.0);
    CHECK(c.tcp_port == 0);
    CHECK(c.activity.window_frames == 40);
    CHECK(c.frames_per_read() == 10);
    apply_config_value(c, "simulated_latency_s", "none");
    CHECK_FALSE(c.simulated_latency_s);

    CHECK_THROWS_AS(apply_config_value(c, "no.such.key", "1"), ConfigError);
    CHECK_THROWS_AS(apply_config_value(c, "tcp_port", "70000"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(c, "seed 4\n"), ConfigError);
    PipelineConfig bad;
    bad.sensor_read_period_s = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("frame ring keeps the newest frames") {
    FrameRing ring(4);
    for (int i = 0; i < 10; ++i) ring.push(frame_with_seq(i));
    CHECK(ring.total() == 10);
    const auto last = ring.last(3);
    REQUIRE(last.size() == 3);
    CHECK(last[0].seq == 7);
    CHECK(last[2].seq == 9);
    CHECK(ring.last(99).size() == 4);

    std::uint64_t cursor = 2;
    std::uint64_t missed = 0;
    const auto got = ring.read_since(cursor, &missed);
    CHECK(missed == 4);
    REQUIRE(got.size() == 4);
    CHECK(got.front().seq == 6);
    CHECK(cursor == 10);
    CHECK(ring.read_since(cursor).empty());
}

TEST_CASE("packet log round trip and corruption") {
    const auto path = temp_path("log.bin");
    std::vector<std::vector<std::uint8_t>> packets;
    {
        PacketLogWriter w(path);
        for (int i = 0; i < 30; ++i) {
            auto framed = wire::encode_frame(simdevice::step_scenario({simdevice::ScenarioKind::FidgetBurst, 3, {}}, i));
            framed.pop_back();
            w.append(static_cast<std::uint64_t>(i) * 50000u, framed);
            packets.push_back(framed);
        }
        CHECK(w.records() == 30);
    }
    const auto log = read_packet_log(path);
    REQUIRE(log.size() == 30);
    CHECK(log[29].t_us == 29u * 50000u);
    CHECK(log[5].framed == packets[5]);
    std::size_t rejected = 0;
    const auto frames = decode_packets(log, &rejected);
    CHECK(rejected == 0);
    REQUIRE(frames.size() == 30);
    CHECK(frames[17] == simdevice::step_scenario({simdevice::ScenarioKind::FidgetBurst, 3, {}}, 17));

    std::ifstream in(path, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
    CHECK_THROWS_AS(parse_packet_log(std::span(bytes).first(bytes.size() - 3)), PacketLogError);
    CHECK(parse_packet_log(std::span<const std::uint8_t>{}).empty());

    auto damaged = log;
    damaged[3].framed[10] ^= 0x40;
    CHECK(decode_packets(damaged, &rejected).size() == 29);
    CHECK(rejected == 1);
}

TEST_CASE("websocket accept key and frames") {
    CHECK(websocket_accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo=");

    for (std::size_t len : {0u, 5u, 125u, 126u, 300u, 65535u, 65536u}) {
        const std::string payload(len, 'x');
        for (bool masked : {false, true}) {
            const auto bytes = encode_ws_frame(WsOpcode::Text, payload,
                                               masked ? std::optional<std::uint32_t>(0xA1B2C3D4u) : std::nullopt);
            std::size_t consumed = 0;
            const auto f = decode_ws_frame(bytes, consumed, masked);
            REQUIRE(f);
            CHECK(consumed == bytes.size());
            CHECK(f->payload == payload);
            CHECK(f->opcode == WsOpcode::Text);
            std::size_t partial = 0;
            CHECK_FALSE(decode_ws_frame(std::string_view(bytes).substr(0, bytes.size() - 1), partial, masked));
        }
    }
    std::size_t consumed = 0;
    const auto unmasked = encode_ws_frame(WsOpcode::Text, "hi");
    CHECK_THROWS_AS(decode_ws_frame(unmasked, consumed, true), WsProtocolError);
}

TEST_CASE("panel message parsing") {
    const auto e = parse_panel_message(R"({"kind":"button_down","index":2})");
    CHECK(e.kind == simdevice::PanelEventKind::ButtonDown);
    CHECK(e.button == 2);
    const auto o = parse_panel_message(R"({"kind":"orient_set","pitch":10,"roll":-5})");
    CHECK(o.pitch_deg == 10.0);
    CHECK(o.yaw_deg == 0.0);
    CHECK(parse_panel_message(R"({"kind":"joy_set","x":0.5,"y":-1})").joy_y == -1.0);
    CHECK(parse_panel_message(R"({"kind":"encoder_step","delta":-1})").encoder_steps == -1);

    CHECK_THROWS_AS(parse_panel_message("{not json"), PanelMessageError);
    CHECK_THROWS_AS(parse_panel_message("[1,2]"), PanelMessageError);
    CHECK_THROWS_AS(parse_panel_message(R"({"kind":"explode"})"), PanelMessageError);
    CHECK_THROWS_AS(parse_panel_message(R"({"kind":"button_down","index":9})"), PanelMessageError);
    CHECK_THROWS_AS(parse_panel_message(R"({"kind":"button_down","index":"1"})"), PanelMessageError);
    CHECK_THROWS_AS(parse_panel_message(R"({"kind":"joy_set","x":3,"y":0})"), PanelMessageError);

    const auto err = json::parse(error_message_json("bad \"thing\""));
    CHECK(err["type"] == "error");
    CHECK(err["message"] == "bad \"thing\"");

    Telemetry t;
    t.buttons[1] = true;
    t.condition = 0.25;
    const auto j = json::parse(telemetry_json(t));
    CHECK(j["type"] == "telemetry");
    CHECK(j["buttons"][1] == true);
    CHECK(j["condition"] == 0.25);
    CHECK(j.contains("attitude"));
    CHECK(j["generation"].contains("last_rms"));
}

TEST_CASE("control stream broadcasts identical lines to every client") {
    ControlBroadcaster b(0);
    b.start();
    LineClient first(b.port());
    REQUIRE(wait_for([&] { return b.clients() == 1; }));
    for (int i = 0; i < 10; ++i) b.publish("early," + std::to_string(i) + "\n");

    LineClient second(b.port());
    REQUIRE(wait_for([&] { return b.clients() == 2; }));
    for (int i = 0; i < 100; ++i) b.publish("line," + std::to_string(i) + "\n");

    for (int i = 0; i < 10; ++i) CHECK(first.line() == "early," + std::to_string(i));
    for (int i = 0; i < 100; ++i) {
        const auto a = first.line();
        const auto c = second.line();
        REQUIRE(a);
        CHECK(a == c);
        CHECK(*a == "line," + std::to_string(i));
    }
    CHECK(b.lines_published() == 110);
    b.stop();
}

TEST_CASE("stalled control client is dropped at the backlog limit") {
    ControlBroadcaster b(0, false, 1 << 20);
    b.start();
    LineClient reader(b.port());
    Fd stalled = connect_tcp("127.0.0.1", b.port());
    REQUIRE(wait_for([&] { return b.clients() == 2; }));

    const std::string line = std::string(199, 'z') + "\n";
    std::size_t published = 0;
    std::size_t read = 0;
    // The reader keeps up; the stalled socket never reads.
    while (b.slow_disconnects() == 0 && published < 400000) {
        for (int i = 0; i < 64; ++i, ++published) b.publish(line);
        while (read < published) {
            const auto got = reader.line(2000ms);
            REQUIRE(got);
            ++read;
        }
    }
    CHECK(b.slow_disconnects() == 1);
    CHECK(wait_for([&] { return b.clients() == 1; }));
    b.publish("after\n");
    CHECK(reader.line() == "after");
    b.stop();
}

TEST_CASE("websocket server keeps the connection after a malformed message") {
    std::atomic<int> accepted{0};
    WebSocketServer ws(
        0,
        [&](std::string_view text) -> std::optional<std::string> {
            try {
                parse_panel_message(text);
            } catch (const std::exception& e) {
                return error_message_json(e.what());
            }
            ++accepted;
            return std::nullopt;
        },
        [] { return std::string(R"({"type":"telemetry"})"); }, 10.0);
    ws.start();

    WebSocketClient client("127.0.0.1", ws.port());
    client.send_text("{this is not json");
    std::optional<json> reply;
    for (int i = 0; i < 20 && !reply; ++i) {
        const auto msg = client.receive(1000ms);
        REQUIRE(msg);
        auto j = json::parse(*msg);
        if (j["type"] == "error") reply = j;
    }
    REQUIRE(reply);
    CHECK((*reply)["message"] == "malformed JSON");

    client.send_text(R"({"kind":"button_down","index":1})");
    CHECK(wait_for([&] { return accepted.load() == 1; }));
    CHECK(ws.clients() == 1);

    // Telemetry cadence, counted from the client side.
    const auto t0 = std::chrono::steady_clock::now();
    int ticks = 0;
    while (std::chrono::steady_clock::now() - t0 < 2s) {
        if (const auto msg = client.receive(500ms); msg && msg->find("telemetry") != std::string::npos) ++ticks;
    }
    const double hz = ticks / 2.0;
    CHECK(hz >= 8.0);
    CHECK(hz <= 12.0);
    client.close();
    CHECK(wait_for([&] { return ws.clients() == 0; }));
    ws.stop();
}

TEST_CASE("websocket server answers plain HTTP with 426") {
    WebSocketServer ws(0, [](std::string_view) { return std::nullopt; }, [] { return std::string("{}"); });
    ws.start();
    Fd fd = connect_tcp("127.0.0.1", ws.port());
    const std::string req = "GET / HTTP/1.1\r\nHost: x\r\n\r\n";
    REQUIRE(::send(fd.get(), req.data(), req.size(), MSG_NOSIGNAL) == static_cast<ssize_t>(req.size()));
    pollfd p{fd.get(), POLLIN, 0};
    REQUIRE(::poll(&p, 1, 2000) == 1);
    char buf[256] = {};
    const auto n = ::recv(fd.get(), buf, sizeof buf - 1, 0);
    REQUIRE(n > 0);
    CHECK(std::string(buf).rfind("HTTP/1.1 426", 0) == 0);
    ws.stop();
}

TEST_CASE("audio queue drops the oldest generation") {
    AudioQueue q(3);
    for (std::uint64_t i = 0; i < 3; ++i) CHECK_FALSE(q.push(GeneratedAudio{i, {}, {}}));
    CHECK(q.push(GeneratedAudio{3, {}, {}}));
    CHECK(q.size() == 3);
    std::stop_source stop;
    CHECK(q.pop(stop.get_token())->index == 1);
}

TEST_CASE("bind failure is reported") {
    ControlBroadcaster a(0);
    CHECK_THROWS_AS(ControlBroadcaster(a.port()), BindFailed);
}

TEST_CASE("idle pipeline generates with condition near one") {
    auto config = small_config();
    Pipeline p(config, std::make_unique<SimulatedSource>(simdevice::Scenario{simdevice::ScenarioKind::Idle, 1, {}}),
               headless());
    std::atomic<int> sunk{0};
    p.set_audio_sink([&](const GeneratedAudio& a) {
        if (a.audio.frames() == config.latent_length * config.hop) ++sunk;
    });
    p.start();
    REQUIRE(wait_for([&] { return p.generations().size() >= 3; }, 15000ms));
    p.stop();
    const auto gens = p.generations();
    for (const auto& g : gens) {
        CHECK(g.point.condition.value > 0.98);
        CHECK(g.point.activity < 0.02);
        CHECK(g.render_rms > 0.0);
    }
    CHECK(gens[1].index == 1);
    CHECK(gens[1].snapshot_s - gens[0].snapshot_s >= config.sensor_read_period_s - 0.01);
    CHECK(sunk.load() >= 1);
    const auto s = p.stats();
    CHECK(s.seq_gaps == 0);
    CHECK(s.decode_errors == 0);
    CHECK(s.csv_lines == s.frames);
}

TEST_CASE("panel button press reaches telemetry within two frames") {
    auto config = small_config();
    config.latent_length = 32;
    config.keep = 4;
    PipelineOptions options;
    options.control_server = false;
    options.render = false;
    Pipeline p(config, std::make_unique<SimulatedSource>(simdevice::Scenario{simdevice::ScenarioKind::Idle, 1, {}}),
               options);
    p.start();
    REQUIRE(wait_for([&] { return p.stats().frames > config.activity.window_frames + 5; }));

    WebSocketClient client("127.0.0.1", p.panel_port());
    double before = 1.0;
    for (int i = 0; i < 3; ++i) {
        const auto msg = client.receive(1000ms);
        REQUIRE(msg);
        before = json::parse(*msg)["activity"].get<double>();
    }
    client.send_text(R"({"kind":"button_down","index":1})");
    bool seen = false;
    for (int i = 0; i < 2 && !seen; ++i) {
        const auto msg = client.receive(1000ms);
        REQUIRE(msg);
        const auto j = json::parse(*msg);
        if (j["type"] != "telemetry") continue;
        seen = j["buttons"][0].get<bool>() && j["activity"].get<double>() > before;
    }
    CHECK(seen);
    CHECK(p.stats().events_accepted == 1);

    client.send_text(R"({"kind":"button_down"})");
    const auto reply = client.receive(1000ms);
    REQUIRE(reply);
    bool got_error = json::parse(*reply)["type"] == "error";
    for (int i = 0; i < 3 && !got_error; ++i) {
        if (const auto m = client.receive(1000ms)) got_error = json::parse(*m)["type"] == "error";
    }
    CHECK(got_error);
    CHECK(p.stats().events_rejected == 1);
    p.stop();
}

TEST_CASE("pipeline control stream follows the frame rate") {
    auto config = small_config();
    PipelineOptions options;
    options.panel_server = false;
    options.render = false;
    Pipeline p(config, std::make_unique<SimulatedSource>(simdevice::Scenario{simdevice::ScenarioKind::TiltSweep, 1, {}}),
               options);
    p.start();
    LineClient client(p.control_port());
    std::vector<sonify::ControlFrame> lines;
    for (int i = 0; i < 20; ++i) {
        const auto l = client.line();
        REQUIRE(l);
        lines.push_back(sonify::parse_csv(*l));
    }
    p.stop();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        CHECK(static_cast<std::uint8_t>(lines[i].seq - lines[i - 1].seq) == 1);
    }
}

TEST_CASE("pipeline survives frame source loss and logs the gap") {
    DeviceFeedServer device({simdevice::ScenarioKind::Idle, 2, {}}, 0);
    device.start();
    auto config = small_config();
    PipelineOptions options;
    options.panel_server = false;
    options.render = false;
    auto source = std::make_unique<TcpFeedSource>("127.0.0.1", device.port(), Backoff{0.1, 0.4});
    auto* feed = source.get();
    Pipeline p(config, std::move(source), options);
    p.start();
    REQUIRE(wait_for([&] { return p.stats().frames >= 20; }));

    device.suspend();
    REQUIRE(wait_for([&] { return !feed->connected(); }));
    const auto paused = p.stats().csv_lines;
    std::this_thread::sleep_for(600ms);
    CHECK(p.stats().csv_lines == paused);

    device.resume();
    REQUIRE(wait_for([&] { return p.stats().frames >= paused + 10; }));
    p.stop();
    device.stop();

    const auto s = p.stats();
    CHECK(feed->losses() >= 1);
    CHECK(feed->connections() >= 2);
    CHECK(s.seq_gaps >= 1);
    CHECK(s.missing_frames >= 10);
}

TEST_CASE("recorded packets replay to an identical trace") {
    const auto log_path = temp_path("record.bin");
    std::filesystem::remove(log_path);
    auto config = small_config();
    {
        PipelineOptions options = headless();
        options.record_log = log_path;
        options.render = false;
        Pipeline p(config,
                   std::make_unique<SimulatedSource>(simdevice::Scenario{simdevice::ScenarioKind::FidgetBurst, 5, {}}),
                   options);
        p.start();
        REQUIRE(wait_for([&] { return p.stats().frames >= 60; }));
        p.stop();
    }
    const auto frames = decode_packets(read_packet_log(log_path));
    REQUIRE(frames.size() >= 60);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        REQUIRE(frames[i] == simdevice::step_scenario({simdevice::ScenarioKind::FidgetBurst, 5, {}},
                                                      static_cast<std::int64_t>(i)));
    }
    const auto a = replay_frames(frames, config);
    const auto b = replay_frames(frames, config);
    const std::size_t every = config.frames_per_read();
    REQUIRE(a.trace.size() == frames.size() / every - (config.activity.window_frames - 1) / every);
    CHECK(a.trace.front().frame_index == 12);
    CHECK(a.trace == b.trace);
    CHECK(format_trace(a.trace) == format_trace(b.trace));
    REQUIRE(a.latents.size() == b.latents.size());
    for (std::size_t i = 0; i < a.latents.size(); ++i) {
        CHECK(diffusion::serialize_latents(a.latents[i]) == diffusion::serialize_latents(b.latents[i]));
    }
    // Outpainted continuations share their prefix with the previous tail.
    for (std::size_t i = 1; i < a.latents.size(); ++i) {
        const auto& prev = a.latents[i - 1];
        const auto& cur = a.latents[i];
        for (std::size_t k = 0; k < config.keep; ++k) {
            for (std::size_t ch = 0; ch < 4; ++ch) {
                CHECK(cur.at(k, ch) == prev.at(prev.length() - config.keep + k, ch));
            }
        }
    }
}
