#include "dtwin/pipeline.hpp"

#include "dtwin/simulator.hpp"

namespace dtwin {

namespace {

bool same_node_set(const SnapshotFrame& a, const SnapshotFrame& b)
{
    if (a.nodes.size() != b.nodes.size())
        return false;
    auto it = b.nodes.begin();
    for (const auto& [name, node] : a.nodes) {
        if (name != it->first || node.kind != it->second.kind)
            return false;
        ++it;
    }
    return true;
}

} // namespace

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {}

TickResult Pipeline::tick(const SnapshotFrame& raw, std::size_t clamp_count, std::size_t row_errors)
{
    TickResult result;
    result.conditioned = condition(raw, config_.rules, previous_raw_ ? &*previous_raw_ : nullptr);

    if (!previous_raw_ || !same_node_set(*previous_raw_, raw))
        layout_ = config_.scene.layout_for(raw);

    // Workers compute everything against locals; the commit below is the only mutation.
    Scene scene = frame_to_scene(result.conditioned.frame, layout_, config_.scene.templates,
                                 config_.scene.palette, config_.workers);
    std::vector<Batch> batches = plan_batches(scene);
    SceneStats stats = scene_stats(batches, config_.scene.meshes);
    stats.clamp_count = static_cast<std::int64_t>(clamp_count);
    stats.row_error_count = static_cast<std::int64_t>(row_errors);

    SceneDiff diff;
    if (last_)
        diff = diff_updates(scene_, scene);
    result.structural_change = !last_ || diff.structural_change;

    FramePacket& packet = result.packet;
    packet.seq = ++seq_;
    packet.timestamp = raw.timestamp;
    packet.alerts = result.conditioned.alerts;
    packet.stats = stats;
    if (result.structural_change) {
        packet.kind = PacketKind::full;
        packet.items = scene;
        packet.batches = batches;
    } else {
        packet.kind = PacketKind::delta;
        packet.updates = std::move(diff.updates);
    }

    // commit
    scene_ = std::move(scene);
    batches_ = std::move(batches);
    stats_ = stats;
    previous_raw_ = raw;
    last_ = result.conditioned;
    return result;
}

FramePacket Pipeline::full_packet() const
{
    FramePacket packet;
    packet.seq = seq_;
    packet.kind = PacketKind::full;
    packet.items = scene_;
    packet.batches = batches_;
    packet.stats = stats_;
    if (last_) {
        packet.timestamp = last_->frame.timestamp;
        packet.alerts = last_->alerts;
    }
    return packet;
}

SceneStats Pipeline::naive() const
{
    return naive_stats(scene_, config_.scene.meshes);
}

SceneReport build_scene_report(const SceneConfig& config)
{
    auto frame = simulate_tick(config.simulator, config.tick);
    auto conditioned = condition(frame, default_rules(), nullptr);
    SceneReport report;
    report.items = frame_to_scene(conditioned.frame, config.layout_for(frame), config.templates, config.palette);
    report.batches = plan_batches(report.items);
    report.naive = naive_stats(report.items, config.meshes);
    report.instanced = scene_stats(report.batches, config.meshes);
    return report;
}

} // namespace dtwin
