#pragma once

#include "dtwin/scene.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dtwin {

class MeshLibrary {
public:
    /// Throws ConfigError unless triangles > 0.
    void add(std::string mesh_id, std::int64_t triangles);
    /// Throws LibraryError naming the mesh.
    std::int64_t triangles(std::string_view mesh_id) const;
    bool contains(std::string_view mesh_id) const { return meshes_.find(mesh_id) != meshes_.end(); }
    const std::map<std::string, std::int64_t, std::less<>>& all() const { return meshes_; }

    /// Triangle counts for the standard element meshes.
    static MeshLibrary standard();

private:
    std::map<std::string, std::int64_t, std::less<>> meshes_;
};

/// One instanced draw: every member shares (mesh_id, template_id).
struct Batch {
    std::string mesh_id;
    std::string template_id;
    std::vector<RenderItem> instances; ///< ordered by item_id

    bool operator==(const Batch&) const = default;
};

/// Groups items by (mesh_id, template_id); batches and instances come out in
/// lexicographic order. Throws SceneError on a duplicate item id.
std::vector<Batch> plan_batches(const Scene& items);

struct SceneStats {
    std::int64_t batch_count = 0;
    std::int64_t potential_draw_calls = 0;
    std::int64_t triangle_count = 0;
    std::int64_t instanced_groups = 0; ///< batches with two or more instances
    std::int64_t clamp_count = 0;
    std::int64_t row_error_count = 0;

    bool operator==(const SceneStats&) const = default;
};

/// Baseline without instancing: every item is its own draw.
SceneStats naive_stats(const Scene& items, const MeshLibrary& meshes);

/// Throws LibraryError for a mesh missing from the library.
SceneStats scene_stats(const std::vector<Batch>& batches, const MeshLibrary& meshes);

struct LegalityViolation {
    std::string item_a;
    std::string item_b;
    std::string parameter;
};

struct LegalityReport {
    std::vector<LegalityViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Checks that no per-material input varies inside the batch: members must
/// match the batch's mesh and template, and their registered templates must
/// agree on every per-material parameter.
LegalityReport validate_batch_legality(const Batch& batch, const TemplateRegistry& templates);

/// Plain-text table: rows Batches / Triangles / Potential draw calls,
/// columns naive / instanced / Multiplier.
std::string format_stats_table(const SceneStats& naive, const SceneStats& instanced);

/// One JSON object per table row.
std::string format_stats_jsonl(const SceneStats& naive, const SceneStats& instanced);

} // namespace dtwin
