#include "dtwin/simulator.hpp"

#include "dtwin/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace dtwin {

namespace {

constexpr int walk_window = 16;
constexpr std::int64_t state_epoch_ticks = 32;

std::uint64_t mix(std::uint64_t x)
{
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0)
{
    return mix(mix(mix(seed ^ mix(a)) ^ b) ^ mix(c + 0x632be59bd9b4e019ULL));
}

double unit(std::uint64_t h)
{
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

enum Channel : std::uint64_t {
    ch_state = 1,
    ch_cpu,
    ch_node_temp,
    ch_gpu_util,
    ch_gpu_mem,
    ch_gpu_power,
    ch_gpu_temp,
    ch_base,
    ch_job,
    ch_env,
};

/// Sum of the last `walk_window` increments in [-1, 1]: consecutive ticks
/// move like a random walk while staying bounded.
double walk(std::uint64_t seed, std::uint64_t key, std::int64_t t)
{
    double sum = 0.0;
    for (std::int64_t k = t - walk_window + 1; k <= t; ++k)
        sum += 2.0 * unit(hash(seed, key, static_cast<std::uint64_t>(k))) - 1.0;
    return sum / std::sqrt(static_cast<double>(walk_window));
}

std::uint64_t key(std::uint64_t node, Channel ch, std::uint64_t sub = 0)
{
    return (node << 24) ^ (static_cast<std::uint64_t>(ch) << 8) ^ sub;
}

std::string padded(const char* prefix, int index, int count)
{
    const int width = count >= 1000 ? (count >= 10000 ? 5 : 4) : 3;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, index + 1);
    return buf;
}

NodeTelemetry make_node(const SimulatorConfig& cfg, std::uint64_t id, std::string name, int gpus, std::int64_t t)
{
    const std::uint64_t seed = cfg.seed;
    NodeTelemetry node;
    node.node_name = std::move(name);
    node.kind = gpus > 0 ? NodeKind::gpu_accelerated : NodeKind::cpu_only;

    const std::int64_t epoch = t / state_epoch_ticks;
    const double s = unit(hash(seed, key(id, ch_state), static_cast<std::uint64_t>(epoch)));
    if (s < cfg.off_fraction)
        node.state = NodeState::off;
    else if (s < cfg.off_fraction + cfg.idle_fraction)
        node.state = NodeState::idle;
    else
        node.state = NodeState::active;

    const double base = unit(hash(seed, key(id, ch_base)));
    const bool active = node.state == NodeState::active;

    if (active) {
        node.cpu_load = std::clamp(0.2 + 0.6 * base + cfg.drift.cpu_load * walk(seed, key(id, ch_cpu), t), 0.0, 1.0);
        // groups of 8 neighbouring nodes share a job
        const std::uint64_t job = hash(seed, key(id / 8, ch_job), static_cast<std::uint64_t>(epoch));
        node.user = "user" + std::to_string(job % 12);
        node.job_id = "job-" + std::to_string(100000 + job % 900000);
    } else if (node.state == NodeState::idle) {
        node.cpu_load = 0.02 * unit(hash(seed, key(id, ch_cpu), static_cast<std::uint64_t>(t)));
    }
    node.node_temp_c = 30.0 + 40.0 * node.cpu_load + 3.0 * base + cfg.drift.temp_c * walk(seed, key(id, ch_node_temp), t);

    for (int g = 0; g < gpus; ++g) {
        const auto sub = static_cast<std::uint64_t>(g);
        GpuTelemetry gpu;
        gpu.gpu_index = g;
        gpu.mem_capacity_bytes = cfg.mem_capacity_bytes;
        const double gbase = unit(hash(seed, key(id, ch_base, sub + 1)));
        if (node.state != NodeState::off) {
            const double util_base = active ? 0.15 + 0.8 * gbase : 0.0;
            gpu.utilization = std::clamp(
                util_base + (active ? cfg.drift.gpu_util * walk(seed, key(id, ch_gpu_util, sub), t) : 0.0), 0.0, 1.0);
            const double mem_frac = std::clamp(
                (active ? 0.1 + 0.8 * gbase : 0.01) + cfg.drift.gpu_mem * walk(seed, key(id, ch_gpu_mem, sub), t), 0.0,
                1.0);
            gpu.mem_used_bytes = std::floor(mem_frac * gpu.mem_capacity_bytes);
            gpu.power_draw_w = std::max(
                0.0, 60.0 + 330.0 * gpu.utilization + cfg.drift.power_w * walk(seed, key(id, ch_gpu_power, sub), t));
        }
        gpu.temp_c = 32.0 + 50.0 * gpu.utilization + cfg.drift.temp_c * walk(seed, key(id, ch_gpu_temp, sub), t);
        node.gpus.push_back(gpu);
    }
    return node;
}

} // namespace

void SimulatorConfig::validate() const
{
    if (node_count < 1)
        throw InputError("simulator: node_count must be >= 1");
    if (gpus_per_node < 0)
        throw InputError("simulator: gpus_per_node must be >= 0");
    if (cpu_node_count < 0)
        throw InputError("simulator: cpu_node_count must be >= 0");
    if (!(tick_hz > 0.0) || !std::isfinite(tick_hz))
        throw InputError("simulator: tick_hz must be positive");
    if (!(idle_fraction >= 0.0 && off_fraction >= 0.0 && idle_fraction + off_fraction <= 1.0))
        throw InputError("simulator: idle/off fractions must lie in [0,1] and sum to <= 1");
    if (!(mem_capacity_bytes > 0.0))
        throw InputError("simulator: mem_capacity_bytes must be positive");
}

std::string simulated_node_name(const SimulatorConfig& config, int index)
{
    return padded("node-", index, config.node_count);
}

std::string simulated_cpu_node_name(const SimulatorConfig& config, int index)
{
    return padded("cpu-", index, config.cpu_node_count);
}

SnapshotFrame simulate_tick(const SimulatorConfig& config, std::int64_t t)
{
    config.validate();
    if (t < 0)
        throw InputError("simulator: tick index must be >= 0");

    SnapshotFrame frame;
    frame.timestamp = config.start_ms + static_cast<TimestampMs>(std::llround(static_cast<double>(t) * 1000.0 / config.tick_hz));

    for (int i = 0; i < config.node_count; ++i) {
        auto node = make_node(config, static_cast<std::uint64_t>(i), simulated_node_name(config, i),
                              config.gpus_per_node, t);
        auto name = node.node_name;
        frame.nodes.emplace(std::move(name), std::move(node));
    }
    for (int i = 0; i < config.cpu_node_count; ++i) {
        auto node = make_node(config, static_cast<std::uint64_t>(1'000'000 + i), simulated_cpu_node_name(config, i), 0, t);
        auto name = node.node_name;
        frame.nodes.emplace(std::move(name), std::move(node));
    }

    for (int s = 0; s < 4; ++s) {
        const auto id = static_cast<std::uint64_t>(s);
        EnvTelemetry env;
        env.sensor_id = "ecopod-" + std::to_string(s + 1);
        env.humidity_pct = std::clamp(45.0 + 8.0 * walk(config.seed, key(id, ch_env, 1), t), 0.0, 100.0);
        env.airflow = std::max(0.0, 1200.0 + 60.0 * walk(config.seed, key(id, ch_env, 2), t));
        env.temp_c = 22.0 + 1.5 * walk(config.seed, key(id, ch_env, 3), t);
        env.timestamp = frame.timestamp;
        frame.env.push_back(env);
    }
    return frame;
}

} // namespace dtwin
