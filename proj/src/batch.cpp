#include "dtwin/batch.hpp"

#include "dtwin/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>
#include <tuple>

namespace dtwin {

void MeshLibrary::add(std::string mesh_id, std::int64_t triangles)
{
    if (mesh_id.empty())
        throw ConfigError("mesh library: empty mesh id");
    if (triangles <= 0)
        throw ConfigError("mesh library: mesh '" + mesh_id + "' needs a positive triangle count");
    meshes_[std::move(mesh_id)] = triangles;
}

std::int64_t MeshLibrary::triangles(std::string_view mesh_id) const
{
    auto it = meshes_.find(mesh_id);
    if (it == meshes_.end())
        throw LibraryError("mesh '" + std::string(mesh_id) + "' is not in the mesh library");
    return it->second;
}

MeshLibrary MeshLibrary::standard()
{
    MeshLibrary lib;
    lib.add("node_base", 28);
    lib.add("bar", 12);
    lib.add("node_outline", 24);
    lib.add("gpu_outline", 24);
    return lib;
}

std::vector<Batch> plan_batches(const Scene& items)
{
    std::vector<const RenderItem*> order;
    order.reserve(items.size());
    for (const auto& item : items)
        order.push_back(&item);

    std::sort(order.begin(), order.end(), [](const RenderItem* a, const RenderItem* b) {
        return std::tie(a->mesh_id, a->template_id, a->item_id) < std::tie(b->mesh_id, b->template_id, b->item_id);
    });

    // duplicates sort adjacent only within a group, so check ids separately
    {
        std::vector<const std::string*> ids;
        ids.reserve(items.size());
        for (const auto& item : items)
            ids.push_back(&item.item_id);
        std::sort(ids.begin(), ids.end(), [](auto* a, auto* b) { return *a < *b; });
        auto dup = std::adjacent_find(ids.begin(), ids.end(), [](auto* a, auto* b) { return *a == *b; });
        if (dup != ids.end())
            throw SceneError("duplicate item id '" + **dup + "'");
    }

    std::vector<Batch> batches;
    for (const RenderItem* item : order) {
        if (batches.empty() || batches.back().mesh_id != item->mesh_id ||
            batches.back().template_id != item->template_id)
            batches.push_back({item->mesh_id, item->template_id, {}});
        batches.back().instances.push_back(*item);
    }
    return batches;
}

SceneStats naive_stats(const Scene& items, const MeshLibrary& meshes)
{
    SceneStats stats;
    stats.batch_count = static_cast<std::int64_t>(items.size());
    stats.potential_draw_calls = stats.batch_count;
    for (const auto& item : items)
        stats.triangle_count += meshes.triangles(item.mesh_id);
    return stats;
}

SceneStats scene_stats(const std::vector<Batch>& batches, const MeshLibrary& meshes)
{
    SceneStats stats;
    stats.batch_count = static_cast<std::int64_t>(batches.size());
    for (const auto& batch : batches) {
        const auto n = static_cast<std::int64_t>(batch.instances.size());
        stats.potential_draw_calls += n;
        stats.triangle_count += meshes.triangles(batch.mesh_id) * n;
        if (n >= 2)
            ++stats.instanced_groups;
    }
    return stats;
}

LegalityReport validate_batch_legality(const Batch& batch, const TemplateRegistry& templates)
{
    LegalityReport report;
    if (batch.instances.empty())
        return report;

    const auto& first = batch.instances.front();
    const MaterialTemplate* reference = templates.find(batch.template_id);
    if (!reference)
        report.violations.push_back({first.item_id, first.item_id, "template_id (unregistered '" + batch.template_id + "')"});

    for (const auto& member : batch.instances) {
        if (member.mesh_id != batch.mesh_id)
            report.violations.push_back({first.item_id, member.item_id, "mesh_id"});
        if (member.template_id != batch.template_id)
            report.violations.push_back({first.item_id, member.item_id, "template_id"});

        const MaterialTemplate* mine = templates.find(member.template_id);
        if (!mine) {
            if (member.template_id != batch.template_id)
                report.violations.push_back(
                    {first.item_id, member.item_id, "template_id (unregistered '" + member.template_id + "')"});
            continue;
        }
        if (!reference)
            continue;
        auto check = [&](bool same, const char* param) {
            if (!same)
                report.violations.push_back({first.item_id, member.item_id, param});
        };
        check(mine->shader_kind == reference->shader_kind, "shader_kind");
        check(mine->base_texture_id == reference->base_texture_id, "base_texture_id");
        check(mine->min_w == reference->min_w, "min_w");
        check(mine->max_w == reference->max_w, "max_w");
        check(mine->normalized_large == reference->normalized_large, "normalized_large");
        check(mine->outline_thickness == reference->outline_thickness, "outline_thickness");
        check(mine->outline_proportion == reference->outline_proportion, "outline_proportion");
        check(mine->tolerance_c == reference->tolerance_c, "tolerance_c");
    }
    return report;
}

namespace {

std::string multiplier(std::int64_t naive, std::int64_t instanced)
{
    if (naive == 0)
        return "n/a";
    char buf[32];
    const double ratio = static_cast<double>(instanced) / static_cast<double>(naive);
    if (ratio == 0.0 || ratio >= 0.01)
        std::snprintf(buf, sizeof buf, "x%.2f", ratio);
    else
        std::snprintf(buf, sizeof buf, "x%.2g", ratio);
    return buf;
}

struct Row {
    const char* label;
    std::int64_t naive;
    std::int64_t instanced;
};

std::vector<Row> rows(const SceneStats& naive, const SceneStats& instanced)
{
    return {
        {"Batches", naive.batch_count, instanced.batch_count},
        {"Triangles", naive.triangle_count, instanced.triangle_count},
        {"Potential draw calls", naive.potential_draw_calls, instanced.potential_draw_calls},
    };
}

} // namespace

std::string format_stats_table(const SceneStats& naive, const SceneStats& instanced)
{
    std::string out;
    char line[160];
    const char* rule = "+----------------------+------------+------------+------------+\n";
    out += "Batch and Triangle Counts per Frame\n";
    out += rule;
    std::snprintf(line, sizeof line, "| %-20s | %10s | %10s | %10s |\n", "", "naive", "instanced", "Multiplier");
    out += line;
    out += rule;
    for (const auto& row : rows(naive, instanced)) {
        std::snprintf(line, sizeof line, "| %-20s | %10lld | %10lld | %10s |\n", row.label,
                      static_cast<long long>(row.naive), static_cast<long long>(row.instanced),
                      multiplier(row.naive, row.instanced).c_str());
        out += line;
        out += rule;
    }
    std::snprintf(line, sizeof line, "Instanced groups (>= 2 instances): %lld of %lld batches\n",
                  static_cast<long long>(instanced.instanced_groups), static_cast<long long>(instanced.batch_count));
    out += line;
    return out;
}

std::string format_stats_jsonl(const SceneStats& naive, const SceneStats& instanced)
{
    std::string out;
    for (const auto& row : rows(naive, instanced)) {
        nlohmann::json j = {{"row", row.label}, {"naive", row.naive}, {"instanced", row.instanced},
                            {"multiplier", multiplier(row.naive, row.instanced)}};
        out += j.dump();
        out += '\n';
    }
    nlohmann::json groups = {{"row", "Instanced groups"}, {"instanced", instanced.instanced_groups}};
    out += groups.dump();
    out += '\n';
    return out;
}

} // namespace dtwin
