#pragma once

#include "dtwin/encode.hpp"
#include "dtwin/telemetry.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dtwin {

/// Per-instance shader inputs. Anything here may differ inside one batch.
struct InstanceProps {
    double load = 0.0;
    int outline_enabled = 0;
    int idle_flag = 0;
    int off_flag = 0;
    int alert_flag = 0;
    int overload_flag = 0;
    Color color;

    bool operator==(const InstanceProps&) const = default;
};

/// Property ids carried by RenderPropertyUpdate, in declaration order.
inline constexpr std::array<std::string_view, 9> instance_property_ids = {
    "load", "outline_enabled", "idle_flag", "off_flag", "alert_flag", "overload_flag", "color_r", "color_g", "color_b",
};

double get_property(const InstanceProps& props, std::string_view id);
/// Throws InputError for an unknown property id.
void set_property(InstanceProps& props, std::string_view id, double value);

struct Transform {
    std::array<double, 3> position{};
    std::array<double, 3> scale{1.0, 1.0, 1.0};

    bool operator==(const Transform&) const = default;
};

struct RenderItem {
    std::string item_id; ///< `node/<name>/<element>`
    std::string node;
    std::string mesh_id;
    std::string template_id;
    InstanceProps instance;
    Transform transform;

    bool operator==(const RenderItem&) const = default;
};

/// Render items sorted by item_id.
using Scene = std::vector<RenderItem>;

class TemplateRegistry {
public:
    /// Validates and inserts; throws ConfigError on a duplicate id.
    void add(MaterialTemplate tmpl);
    /// Throws ConfigError naming an unknown id.
    const MaterialTemplate& at(std::string_view template_id) const;
    const MaterialTemplate* find(std::string_view template_id) const;
    const std::map<std::string, MaterialTemplate, std::less<>>& all() const { return templates_; }

    /// node_base/gpu, node_base/cpu, gpu_bar, power_bar, outline/node, outline/gpu.
    static TemplateRegistry standard();

private:
    std::map<std::string, MaterialTemplate, std::less<>> templates_;
};

/// Template and mesh ids the scene compiler assigns to each element.
struct ElementBinding {
    std::string gpu_node_base_template = "node_base/gpu";
    std::string cpu_node_base_template = "node_base/cpu";
    std::string gpu_bar_template = "gpu_bar";
    std::string power_bar_template = "power_bar";
    std::string node_outline_template = "outline/node";
    std::string gpu_outline_template = "outline/gpu";

    std::string node_base_mesh = "node_base";
    std::string bar_mesh = "bar";
    std::string node_outline_mesh = "node_outline";
    std::string gpu_outline_mesh = "gpu_outline";
};

struct Placement {
    int rack = 0;
    int slot = 0; ///< vertical position inside the rack, 0 = bottom
};

/// Rack/stack grid: where each node sits and how its sub-elements are offset.
struct LayoutConfig {
    std::map<std::string, Placement, std::less<>> placements;
    double rack_spacing = 1.2;
    double slot_height = 0.1;
    double node_width = 0.9;
    double bar_length = 0.8;
    double bar_height = 0.012;
    double bar_gap = 0.004;
    double gpu_gap = 0.01;
    ElementBinding binding;

    /// Fills racks of `nodes_per_rack` slots in the given name order.
    static LayoutConfig grid(const std::vector<std::string>& node_names, int nodes_per_rack);

    Transform node_transform(const Placement& p) const;
    Transform bar_transform(const Placement& p, int gpu, int bar) const;
    Transform gpu_outline_transform(const Placement& p, int gpu) const;
};

/// Closed-form item count: per node 1 base + 1 outline + 4 items per GPU.
std::size_t expected_item_count(const SnapshotFrame& frame);

/// Compiles a frame into render items. Throws LayoutError naming the first node
/// without a placement and ConfigError for unknown templates. `workers` > 1
/// partitions nodes across threads; output is identical either way.
Scene frame_to_scene(const SnapshotFrame& frame, const LayoutConfig& layout, const TemplateRegistry& templates,
                     const Palette& palette = default_palette(), int workers = 1);

/// Minimal per-item property delta.
struct RenderPropertyUpdate {
    std::string item_id;
    int material_slot = 0;
    std::map<std::string, double> props;

    bool operator==(const RenderPropertyUpdate&) const = default;
};

struct SceneDiff {
    /// Item ids, meshes, templates or transforms differ; a full rebuild is needed.
    bool structural_change = false;
    std::vector<RenderPropertyUpdate> updates;
};

SceneDiff diff_updates(const Scene& prev, const Scene& next);

/// Throws InputError on an unknown item or property id.
Scene apply_updates(Scene scene, const std::vector<RenderPropertyUpdate>& updates);

const RenderItem* find_item(const Scene& scene, std::string_view item_id);

} // namespace dtwin
