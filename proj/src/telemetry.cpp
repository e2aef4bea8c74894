#include "dtwin/telemetry.hpp"

namespace dtwin {

std::string_view to_string(NodeKind kind)
{
    return kind == NodeKind::cpu_only ? "cpu_only" : "gpu_accelerated";
}

std::string_view to_string(NodeState state)
{
    switch (state) {
    case NodeState::active: return "active";
    case NodeState::idle: return "idle";
    case NodeState::off: return "off";
    }
    return "active";
}

std::optional<NodeKind> parse_node_kind(std::string_view text)
{
    if (text == "cpu_only") return NodeKind::cpu_only;
    if (text == "gpu_accelerated") return NodeKind::gpu_accelerated;
    return std::nullopt;
}

std::optional<NodeState> parse_node_state(std::string_view text)
{
    if (text == "active") return NodeState::active;
    if (text == "idle") return NodeState::idle;
    if (text == "off") return NodeState::off;
    return std::nullopt;
}

std::vector<std::string> check_invariants(const GpuTelemetry& gpu)
{
    std::vector<std::string> out;
    const std::string prefix = "gpu" + std::to_string(gpu.gpu_index) + ": ";
    if (!(gpu.utilization >= 0.0 && gpu.utilization <= 1.0))
        out.push_back(prefix + "utilization outside [0,1]");
    if (!(gpu.mem_used_bytes >= 0.0 && gpu.mem_used_bytes <= gpu.mem_capacity_bytes))
        out.push_back(prefix + "mem_used_bytes outside [0, capacity]");
    if (!(gpu.power_draw_w >= 0.0))
        out.push_back(prefix + "negative power draw");
    return out;
}

std::vector<std::string> check_invariants(const NodeTelemetry& node)
{
    std::vector<std::string> out;
    const std::string prefix = node.node_name + ": ";
    if (node.node_name.empty())
        out.push_back("empty node name");
    if (!(node.cpu_load >= 0.0 && node.cpu_load <= 1.0))
        out.push_back(prefix + "cpu_load outside [0,1]");
    if (node.gpus.empty() != (node.kind == NodeKind::cpu_only))
        out.push_back(prefix + "gpu list does not match node kind");
    if (node.state == NodeState::off) {
        if (node.cpu_load != 0.0)
            out.push_back(prefix + "off node reports cpu load");
        for (const auto& gpu : node.gpus) {
            if (gpu.utilization != 0.0 || gpu.mem_used_bytes != 0.0 || gpu.power_draw_w != 0.0)
                out.push_back(prefix + "off node reports live gpu readings");
        }
    }
    for (const auto& gpu : node.gpus) {
        for (auto& msg : check_invariants(gpu))
            out.push_back(prefix + msg);
    }
    return out;
}

std::vector<std::string> check_invariants(const SnapshotFrame& frame)
{
    std::vector<std::string> out;
    for (const auto& [name, node] : frame.nodes) {
        if (name != node.node_name)
            out.push_back(name + ": map key differs from node_name");
        for (auto& msg : check_invariants(node))
            out.push_back(std::move(msg));
    }
    for (const auto& env : frame.env) {
        if (!(env.humidity_pct >= 0.0 && env.humidity_pct <= 100.0))
            out.push_back(env.sensor_id + ": humidity outside [0,100]");
    }
    return out;
}

} // namespace dtwin
