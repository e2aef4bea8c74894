#include "dtwin/wire.hpp"

#include "dtwin/error.hpp"

#include <charconv>

namespace dtwin {

json to_json(const GpuTelemetry& gpu)
{
    return {{"gpu_index", gpu.gpu_index},       {"utilization", gpu.utilization},
            {"mem_used_bytes", gpu.mem_used_bytes}, {"mem_capacity_bytes", gpu.mem_capacity_bytes},
            {"power_draw_w", gpu.power_draw_w},   {"temp_c", gpu.temp_c}};
}

json to_json(const NodeTelemetry& node)
{
    json gpus = json::array();
    for (const auto& g : node.gpus)
        gpus.push_back(to_json(g));
    return {{"node_name", node.node_name},
            {"kind", std::string(to_string(node.kind))},
            {"state", std::string(to_string(node.state))},
            {"cpu_load", node.cpu_load},
            {"node_temp_c", node.node_temp_c},
            {"alerts", node.alerts},
            {"user", node.user ? json(*node.user) : json(nullptr)},
            {"job_id", node.job_id ? json(*node.job_id) : json(nullptr)},
            {"gpus", gpus}};
}

json to_json(const SnapshotFrame& frame)
{
    json nodes = json::array();
    for (const auto& [name, node] : frame.nodes)
        nodes.push_back(to_json(node));
    json env = json::array();
    for (const auto& e : frame.env)
        env.push_back({{"sensor_id", e.sensor_id},
                       {"humidity_pct", e.humidity_pct},
                       {"airflow", e.airflow},
                       {"temp_c", e.temp_c},
                       {"timestamp", e.timestamp}});
    return {{"timestamp", frame.timestamp}, {"nodes", nodes}, {"env", env}};
}

json to_json(const Alert& alert)
{
    return {{"node", alert.node},
            {"rule_id", alert.rule_id},
            {"value", alert.value},
            {"timestamp", alert.timestamp},
            {"severity", std::string(to_string(alert.severity))}};
}

json to_json(const InstanceProps& props)
{
    json j = json::object();
    for (auto id : instance_property_ids)
        j[std::string(id)] = get_property(props, id);
    return j;
}

json to_json(const RenderItem& item)
{
    return {{"item_id", item.item_id},
            {"node", item.node},
            {"mesh_id", item.mesh_id},
            {"template_id", item.template_id},
            {"props", to_json(item.instance)},
            {"position", item.transform.position},
            {"scale", item.transform.scale}};
}

json to_json(const RenderPropertyUpdate& update)
{
    return {{"item_id", update.item_id}, {"material_slot", update.material_slot}, {"props", update.props}};
}

json to_json(const SceneStats& stats)
{
    return {{"batch_count", stats.batch_count},
            {"potential_draw_calls", stats.potential_draw_calls},
            {"triangle_count", stats.triangle_count},
            {"instanced_groups", stats.instanced_groups},
            {"clamp_count", stats.clamp_count},
            {"row_error_count", stats.row_error_count}};
}

json to_json(const FramePacket& packet)
{
    json j = {{"seq", packet.seq},
              {"timestamp", packet.timestamp},
              {"type", packet.kind == PacketKind::full ? "full" : "delta"},
              {"stats", to_json(packet.stats)}};
    json alerts = json::array();
    for (const auto& a : packet.alerts)
        alerts.push_back(to_json(a));
    j["alerts"] = alerts;
    if (packet.kind == PacketKind::full) {
        json items = json::array();
        for (const auto& item : packet.items)
            items.push_back(to_json(item));
        json batches = json::array();
        for (const auto& b : packet.batches) {
            json ids = json::array();
            for (const auto& inst : b.instances)
                ids.push_back(inst.item_id);
            batches.push_back({{"mesh_id", b.mesh_id}, {"template_id", b.template_id}, {"item_ids", ids}});
        }
        j["items"] = items;
        j["batches"] = batches;
    } else {
        json updates = json::array();
        for (const auto& u : packet.updates)
            updates.push_back(to_json(u));
        j["updates"] = updates;
    }
    return j;
}

NodeTelemetry node_from_json(const json& j)
{
    NodeTelemetry node;
    node.node_name = j.at("node_name").get<std::string>();
    auto kind = parse_node_kind(j.at("kind").get<std::string>());
    auto state = parse_node_state(j.at("state").get<std::string>());
    if (!kind || !state)
        throw InputError("node json: bad kind/state");
    node.kind = *kind;
    node.state = *state;
    node.cpu_load = j.at("cpu_load").get<double>();
    node.node_temp_c = j.at("node_temp_c").get<double>();
    node.alerts = j.at("alerts").get<std::vector<std::string>>();
    if (!j.at("user").is_null())
        node.user = j.at("user").get<std::string>();
    if (!j.at("job_id").is_null())
        node.job_id = j.at("job_id").get<std::string>();
    for (const auto& g : j.at("gpus")) {
        GpuTelemetry gpu;
        gpu.gpu_index = g.at("gpu_index").get<int>();
        gpu.utilization = g.at("utilization").get<double>();
        gpu.mem_used_bytes = g.at("mem_used_bytes").get<double>();
        gpu.mem_capacity_bytes = g.at("mem_capacity_bytes").get<double>();
        gpu.power_draw_w = g.at("power_draw_w").get<double>();
        gpu.temp_c = g.at("temp_c").get<double>();
        node.gpus.push_back(gpu);
    }
    return node;
}

SnapshotFrame frame_from_json(const json& j)
{
    SnapshotFrame frame;
    frame.timestamp = j.at("timestamp").get<TimestampMs>();
    for (const auto& n : j.at("nodes")) {
        auto node = node_from_json(n);
        auto name = node.node_name;
        frame.nodes.emplace(std::move(name), std::move(node));
    }
    for (const auto& e : j.at("env"))
        frame.env.push_back({e.at("sensor_id").get<std::string>(), e.at("humidity_pct").get<double>(),
                             e.at("airflow").get<double>(), e.at("temp_c").get<double>(),
                             e.at("timestamp").get<TimestampMs>()});
    return frame;
}

RenderItem item_from_json(const json& j)
{
    RenderItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.node = j.at("node").get<std::string>();
    item.mesh_id = j.at("mesh_id").get<std::string>();
    item.template_id = j.at("template_id").get<std::string>();
    for (const auto& [id, value] : j.at("props").items())
        set_property(item.instance, id, value.get<double>());
    item.transform.position = j.at("position").get<std::array<double, 3>>();
    item.transform.scale = j.at("scale").get<std::array<double, 3>>();
    return item;
}

RenderPropertyUpdate update_from_json(const json& j)
{
    RenderPropertyUpdate u;
    u.item_id = j.at("item_id").get<std::string>();
    u.material_slot = j.at("material_slot").get<int>();
    u.props = j.at("props").get<std::map<std::string, double>>();
    return u;
}

WirePacket packet_from_json(const json& j)
{
    WirePacket p;
    p.seq = j.at("seq").get<std::uint64_t>();
    p.timestamp = j.at("timestamp").get<TimestampMs>();
    const auto type = j.at("type").get<std::string>();
    if (type == "full") {
        p.kind = PacketKind::full;
        for (const auto& item : j.at("items"))
            p.items.push_back(item_from_json(item));
        for (const auto& b : j.at("batches"))
            p.batch_keys.emplace_back(b.at("mesh_id").get<std::string>(), b.at("template_id").get<std::string>());
    } else if (type == "delta") {
        p.kind = PacketKind::delta;
        for (const auto& u : j.at("updates"))
            p.updates.push_back(update_from_json(u));
    } else {
        throw InputError("packet json: unknown type '" + type + "'");
    }
    p.alerts = j.at("alerts");
    p.stats = j.at("stats");
    return p;
}

std::string frame_message(const json& message)
{
    auto body = message.dump();
    return std::to_string(body.size()) + "\n" + body + "\n";
}

bool MessageReader::next(json& out)
{
    auto nl = buffer_.find('\n');
    if (nl == std::string::npos)
        return false;
    std::size_t length = 0;
    auto [ptr, ec] = std::from_chars(buffer_.data(), buffer_.data() + nl, length);
    if (ec != std::errc() || ptr != buffer_.data() + nl)
        throw InputError("live stream: corrupt length prefix");
    if (buffer_.size() < nl + 1 + length + 1)
        return false;
    out = json::parse(buffer_.substr(nl + 1, length));
    buffer_.erase(0, nl + 1 + length + 1);
    return true;
}

void SceneReplica::apply(const WirePacket& packet)
{
    if (packet.kind == PacketKind::full) {
        scene_ = packet.items;
        has_scene_ = true;
        return;
    }
    if (!has_scene_)
        throw InputError("delta packet received before any full scene");
    scene_ = apply_updates(std::move(scene_), packet.updates);
}

} // namespace dtwin
