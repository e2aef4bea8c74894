#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dtwin {

using TimestampMs = std::int64_t;

enum class NodeKind { cpu_only, gpu_accelerated };
enum class NodeState { active, idle, off };

std::string_view to_string(NodeKind kind);
std::string_view to_string(NodeState state);
std::optional<NodeKind> parse_node_kind(std::string_view text);
std::optional<NodeState> parse_node_state(std::string_view text);

struct GpuTelemetry {
    int gpu_index = 0;
    double utilization = 0.0;
    double mem_used_bytes = 0.0;
    double mem_capacity_bytes = 0.0;
    double power_draw_w = 0.0;
    double temp_c = 0.0;

    double mem_fraction() const
    {
        return mem_capacity_bytes > 0.0 ? mem_used_bytes / mem_capacity_bytes : 0.0;
    }

    bool operator==(const GpuTelemetry&) const = default;
};

struct NodeTelemetry {
    std::string node_name;
    NodeKind kind = NodeKind::cpu_only;
    NodeState state = NodeState::active;
    double cpu_load = 0.0;
    double node_temp_c = 0.0;
    std::vector<std::string> alerts;
    std::optional<std::string> user;
    std::optional<std::string> job_id;
    std::vector<GpuTelemetry> gpus;

    bool operator==(const NodeTelemetry&) const = default;
};

struct EnvTelemetry {
    std::string sensor_id;
    double humidity_pct = 0.0;
    double airflow = 0.0;
    double temp_c = 0.0;
    TimestampMs timestamp = 0;

    bool operator==(const EnvTelemetry&) const = default;
};

/// One timestamped picture of the whole machine, keyed by node name.
struct SnapshotFrame {
    TimestampMs timestamp = 0;
    std::map<std::string, NodeTelemetry> nodes;
    std::vector<EnvTelemetry> env;

    bool operator==(const SnapshotFrame&) const = default;
};

/// Returns human-readable invariant violations; empty when the value is valid.
std::vector<std::string> check_invariants(const GpuTelemetry& gpu);
std::vector<std::string> check_invariants(const NodeTelemetry& node);
std::vector<std::string> check_invariants(const SnapshotFrame& frame);

} // namespace dtwin
