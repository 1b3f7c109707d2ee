#include "mindcube/server/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mindcube/common/text.hpp"

namespace mindcube::server {
namespace {

template <typename T>
T number(std::string_view key, std::string_view value) {
    const auto v = text::parse_number<T>(value);
    if (!v) throw ConfigError(std::string(key) + ": not a number: '" + std::string(value) + "'");
    return *v;
}

bool boolean(std::string_view key, std::string_view value) {
    value = text::trim(value);
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw ConfigError(std::string(key) + ": expected true/false, got '" + std::string(value) + "'");
}

}  // namespace

void PipelineConfig::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(sensor_read_period_s, "sensor_read_period_s");
    positive(generation_budget_s, "generation_budget_s");
    if (simulated_latency_s && (!(*simulated_latency_s >= 0.0) || !std::isfinite(*simulated_latency_s))) {
        throw ConfigError("simulated_latency_s must be non-negative");
    }
    if (diffusion_steps < 1 || diffusion_steps > diffusion::kMaxSteps) {
        throw ConfigError("diffusion.steps must lie in [1, 1000]");
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("diffusion.gamma must be >= 0");
    if (latent_length < 1) throw ConfigError("diffusion.length must be >= 1");
    if (keep >= latent_length) throw ConfigError("diffusion.keep must be shorter than diffusion.length");
    if (hop < 1) throw ConfigError("render.hop must be >= 1");
    if (max_client_backlog < 1024) throw ConfigError("net.max_client_backlog must be >= 1024");
    positive(telemetry_hz, "telemetry_hz");
    positive(reconnect_initial_s, "reconnect.initial_s");
    if (reconnect_max_s < reconnect_initial_s) throw ConfigError("reconnect.max_s below reconnect.initial_s");
    if (stream_rate_hz < 1.0 || stream_rate_hz > 200.0) throw ConfigError("stream_rate_hz must lie in [1, 200]");
    activity.validate();
}

std::size_t PipelineConfig::frames_per_read() const {
    const auto n = std::llround(sensor_read_period_s * stream_rate_hz);
    return n < 1 ? 1 : static_cast<std::size_t>(n);
}

void apply_config_value(PipelineConfig& c, std::string_view key, std::string_view value) {
    key = text::trim(key);
    value = text::trim(value);
    if (conditioning::apply_config_value(c.activity, key, value)) return;

    if (key == "sensor_read_period_s") c.sensor_read_period_s = number<double>(key, value);
    else if (key == "generation_budget_s") c.generation_budget_s = number<double>(key, value);
    else if (key == "simulated_latency_s") {
        if (value.empty() || value == "none") c.simulated_latency_s.reset();
        else c.simulated_latency_s = number<double>(key, value);
    }
    else if (key == "diffusion.steps") c.diffusion_steps = number<int>(key, value);
    else if (key == "diffusion.gamma") c.gamma = number<double>(key, value);
    else if (key == "diffusion.keep") c.keep = number<std::size_t>(key, value);
    else if (key == "diffusion.length") c.latent_length = number<std::size_t>(key, value);
    else if (key == "render.hop") c.hop = number<std::size_t>(key, value);
    else if (key == "seed") c.seed = number<std::uint64_t>(key, value);
    else if (key == "tcp_port") c.tcp_port = number<std::uint16_t>(key, value);
    else if (key == "ws_port") c.ws_port = number<std::uint16_t>(key, value);
    else if (key == "net.bind_any") c.bind_any = boolean(key, value);
    else if (key == "net.max_client_backlog") c.max_client_backlog = number<std::size_t>(key, value);
    else if (key == "telemetry_hz") c.telemetry_hz = number<double>(key, value);
    else if (key == "reconnect.initial_s") c.reconnect_initial_s = number<double>(key, value);
    else if (key == "reconnect.max_s") c.reconnect_max_s = number<double>(key, value);
    else if (key == "stream_rate_hz") c.stream_rate_hz = number<double>(key, value);
    else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_config_text(PipelineConfig& config, std::string_view text) {
    int line_no = 0;
    for (std::string_view line : text::split(text, '\n')) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        }
        try {
            apply_config_value(config, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    apply_config_text(base, text.str());
    base.validate();
    return base;
}

}  // namespace mindcube::server
