#pragma once

#include "dtwin/alerts.hpp"
#include "dtwin/batch.hpp"
#include "dtwin/scene.hpp"
#include "dtwin/telemetry.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dtwin {

using nlohmann::json;

enum class PacketKind { full, delta };

/// One broadcast unit: everything a subscriber needs for one committed tick.
struct FramePacket {
    std::uint64_t seq = 0;
    TimestampMs timestamp = 0;
    PacketKind kind = PacketKind::full;
    Scene items;                              ///< full packets
    std::vector<Batch> batches;               ///< full packets; wire form carries item ids only
    std::vector<RenderPropertyUpdate> updates; ///< delta packets
    std::vector<Alert> alerts;
    SceneStats stats;
};

json to_json(const GpuTelemetry& gpu);
json to_json(const NodeTelemetry& node);
json to_json(const SnapshotFrame& frame);
json to_json(const Alert& alert);
json to_json(const InstanceProps& props);
json to_json(const RenderItem& item);
json to_json(const RenderPropertyUpdate& update);
json to_json(const SceneStats& stats);
json to_json(const FramePacket& packet);

NodeTelemetry node_from_json(const json& j);
SnapshotFrame frame_from_json(const json& j);
RenderItem item_from_json(const json& j);
RenderPropertyUpdate update_from_json(const json& j);

/// Decoded subscriber view of a packet. Batches keep (mesh, template, item ids).
struct WirePacket {
    std::uint64_t seq = 0;
    TimestampMs timestamp = 0;
    PacketKind kind = PacketKind::full;
    Scene items;
    std::vector<std::pair<std::string, std::string>> batch_keys;
    std::vector<RenderPropertyUpdate> updates;
    json alerts;
    json stats;
};

WirePacket packet_from_json(const json& j);

/// `<decimal byte length>\n<json>\n` framing used on the live stream.
std::string frame_message(const json& message);

/// Incremental decoder for the framing above.
class MessageReader {
public:
    void feed(std::string_view bytes) { buffer_.append(bytes); }
    /// Next complete message, or false when more bytes are needed.
    /// Throws InputError on a corrupt length prefix.
    bool next(json& out);

private:
    std::string buffer_;
};

/// Client-side scene state: full packets replace it, deltas patch it.
class SceneReplica {
public:
    void apply(const WirePacket& packet);
    const Scene& scene() const { return scene_; }
    bool has_scene() const { return has_scene_; }

private:
    Scene scene_;
    bool has_scene_ = false;
};

} // namespace dtwin
