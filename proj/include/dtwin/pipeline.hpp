#pragma once

#include "dtwin/alerts.hpp"
#include "dtwin/batch.hpp"
#include "dtwin/config.hpp"
#include "dtwin/scene.hpp"
#include "dtwin/wire.hpp"

#include <optional>

namespace dtwin {

struct PipelineConfig {
    SceneConfig scene;
    std::vector<AlertRule> rules = default_rules();
    int workers = 1;
};

struct TickResult {
    FramePacket packet; ///< full on the first tick and after structural change, otherwise delta
    ConditionedFrame conditioned;
    bool structural_change = false;
};

/// condition -> encode -> plan -> diff, then a single commit of the new scene.
///
/// Not thread-safe; the service serializes ticks.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    TickResult tick(const SnapshotFrame& raw, std::size_t clamp_count = 0, std::size_t row_errors = 0);

    /// Full packet describing the committed scene (what a new subscriber gets).
    FramePacket full_packet() const;

    const Scene& scene() const { return scene_; }
    const std::vector<Batch>& batches() const { return batches_; }
    const SceneStats& stats() const { return stats_; }
    SceneStats naive() const;
    const std::optional<ConditionedFrame>& last() const { return last_; }
    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    std::optional<SnapshotFrame> previous_raw_;
    std::optional<ConditionedFrame> last_;
    LayoutConfig layout_;
    Scene scene_;
    std::vector<Batch> batches_;
    SceneStats stats_;
    std::uint64_t seq_ = 0;
};

/// Encodes and plans one frame offline (what `stats` reports on).
struct SceneReport {
    Scene items;
    std::vector<Batch> batches;
    SceneStats naive;
    SceneStats instanced;
};

SceneReport build_scene_report(const SceneConfig& config);

} // namespace dtwin
