#pragma once

#include "dtwin/batch.hpp"
#include "dtwin/encode.hpp"
#include "dtwin/scene.hpp"
#include "dtwin/simulator.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace dtwin {

/// `key = value` lines, `#` comments. Throws ConfigError on a malformed or
/// repeated key.
std::map<std::string, std::string> parse_key_values(std::string_view text);

/// Declarative scene: which nodes exist, how they are laid out, and the
/// mesh/template/palette tables the compiler and planner use.
///
/// Keys: gpu_nodes, gpus_per_node, cpu_nodes, seed, tick, tick_hz,
/// idle_fraction, off_fraction, nodes_per_rack, mesh.<id> = triangles,
/// template.<id>.<param> = value (min_w, max_w, normalized_large,
/// tolerance_c, outline_thickness, outline_proportion, base_texture_id),
/// gradient.node_base.low|high and gradient.gpu_bar.low|high = r,g,b.
struct SceneConfig {
    SimulatorConfig simulator;
    std::int64_t tick = 0;
    int nodes_per_rack = 40;
    MeshLibrary meshes = MeshLibrary::standard();
    TemplateRegistry templates = TemplateRegistry::standard();
    Palette palette;

    static SceneConfig parse(std::string_view text);
    static SceneConfig load(const std::filesystem::path& path);

    /// Grid layout over the frame's nodes, GPU nodes first, each group in name order.
    LayoutConfig layout_for(const SnapshotFrame& frame) const;
};

/// Built-in copy of configs/reference.cfg, used when `stats` gets no --scene.
std::string_view reference_scene_text();

} // namespace dtwin
