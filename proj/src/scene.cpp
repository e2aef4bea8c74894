#include "dtwin/scene.hpp"

#include "dtwin/error.hpp"

#include <algorithm>
#include <future>
#include <iterator>

namespace dtwin {

double get_property(const InstanceProps& props, std::string_view id)
{
    if (id == "load") return props.load;
    if (id == "outline_enabled") return props.outline_enabled;
    if (id == "idle_flag") return props.idle_flag;
    if (id == "off_flag") return props.off_flag;
    if (id == "alert_flag") return props.alert_flag;
    if (id == "overload_flag") return props.overload_flag;
    if (id == "color_r") return props.color.r;
    if (id == "color_g") return props.color.g;
    if (id == "color_b") return props.color.b;
    throw InputError("unknown instance property '" + std::string(id) + "'");
}

void set_property(InstanceProps& props, std::string_view id, double value)
{
    auto flag = [&](int& f) { f = value != 0.0 ? 1 : 0; };
    if (id == "load") props.load = value;
    else if (id == "outline_enabled") flag(props.outline_enabled);
    else if (id == "idle_flag") flag(props.idle_flag);
    else if (id == "off_flag") flag(props.off_flag);
    else if (id == "alert_flag") flag(props.alert_flag);
    else if (id == "overload_flag") flag(props.overload_flag);
    else if (id == "color_r") props.color.r = value;
    else if (id == "color_g") props.color.g = value;
    else if (id == "color_b") props.color.b = value;
    else throw InputError("unknown instance property '" + std::string(id) + "'");
}

void TemplateRegistry::add(MaterialTemplate tmpl)
{
    tmpl.validate();
    auto id = tmpl.template_id;
    if (templates_.count(id))
        throw ConfigError("duplicate material template '" + id + "'");
    templates_.emplace(std::move(id), std::move(tmpl));
}

const MaterialTemplate* TemplateRegistry::find(std::string_view template_id) const
{
    auto it = templates_.find(template_id);
    return it == templates_.end() ? nullptr : &it->second;
}

const MaterialTemplate& TemplateRegistry::at(std::string_view template_id) const
{
    if (auto* t = find(template_id))
        return *t;
    throw ConfigError("unknown material template '" + std::string(template_id) + "'");
}

TemplateRegistry TemplateRegistry::standard()
{
    TemplateRegistry reg;
    MaterialTemplate t;

    t = {};
    t.template_id = "node_base/gpu";
    t.shader_kind = ShaderKind::node_base;
    t.base_texture_id = "casing_gpu";
    reg.add(t);

    t = {};
    t.template_id = "node_base/cpu";
    t.shader_kind = ShaderKind::node_base;
    t.base_texture_id = "casing_cpu";
    reg.add(t);

    t = {};
    t.template_id = "gpu_bar";
    t.shader_kind = ShaderKind::gpu_bar;
    reg.add(t);

    t = {};
    t.template_id = "power_bar";
    t.shader_kind = ShaderKind::power_bar;
    t.min_w = 0.0;
    t.max_w = 400.0;
    t.normalized_large = 0.9;
    reg.add(t);

    t = {};
    t.template_id = "outline/node";
    t.shader_kind = ShaderKind::outline;
    t.outline_thickness = 0.02;
    t.outline_proportion = 1.05;
    t.tolerance_c = 75.0;
    reg.add(t);

    t = {};
    t.template_id = "outline/gpu";
    t.shader_kind = ShaderKind::outline;
    t.outline_thickness = 0.01;
    t.outline_proportion = 1.10;
    t.tolerance_c = 85.0;
    reg.add(t);

    return reg;
}

LayoutConfig LayoutConfig::grid(const std::vector<std::string>& node_names, int nodes_per_rack)
{
    if (nodes_per_rack < 1)
        throw ConfigError("layout: nodes_per_rack must be >= 1");
    LayoutConfig layout;
    for (std::size_t i = 0; i < node_names.size(); ++i) {
        const int idx = static_cast<int>(i);
        if (!layout.placements.emplace(node_names[i], Placement{idx / nodes_per_rack, idx % nodes_per_rack}).second)
            throw ConfigError("layout: node '" + node_names[i] + "' placed twice");
    }
    return layout;
}

Transform LayoutConfig::node_transform(const Placement& p) const
{
    Transform t;
    t.position = {p.rack * rack_spacing, p.slot * slot_height, 0.0};
    t.scale = {node_width, slot_height * 0.9, 1.0};
    return t;
}

Transform LayoutConfig::bar_transform(const Placement& p, int gpu, int bar) const
{
    const double gpu_block = 3.0 * (bar_height + bar_gap) + gpu_gap;
    Transform t;
    t.position = {p.rack * rack_spacing,
                  p.slot * slot_height + gpu_gap + gpu * gpu_block + bar * (bar_height + bar_gap), -0.5};
    t.scale = {bar_length, bar_height, 0.01};
    return t;
}

Transform LayoutConfig::gpu_outline_transform(const Placement& p, int gpu) const
{
    const double gpu_block = 3.0 * (bar_height + bar_gap) + gpu_gap;
    Transform t;
    t.position = {p.rack * rack_spacing, p.slot * slot_height + gpu_gap + gpu * gpu_block, -0.5};
    t.scale = {bar_length, 3.0 * (bar_height + bar_gap), 0.01};
    return t;
}

std::size_t expected_item_count(const SnapshotFrame& frame)
{
    std::size_t n = 0;
    for (const auto& [name, node] : frame.nodes)
        n += 1 + 3 * node.gpus.size() + node.gpus.size() + 1;
    return n;
}

namespace {

void encode_node(const NodeTelemetry& node, const Placement& place, const LayoutConfig& layout,
                 const TemplateRegistry& templates, const Palette& palette, std::vector<RenderItem>& out)
{
    const ElementBinding& bind = layout.binding;
    const std::string prefix = "node/" + node.node_name + "/";
    auto push = [&](std::string element, const std::string& mesh, const std::string& tmpl, InstanceProps props,
                    Transform transform) {
        out.push_back({prefix + element, node.node_name, mesh, tmpl, props, transform});
    };

    {
        const auto& tmpl_id =
            node.kind == NodeKind::gpu_accelerated ? bind.gpu_node_base_template : bind.cpu_node_base_template;
        templates.at(tmpl_id);
        auto enc = node_base_encode(node.state, node.cpu_load, !node.alerts.empty(), palette);
        InstanceProps props;
        props.load = node.cpu_load;
        props.idle_flag = node.state == NodeState::idle;
        props.off_flag = node.state == NodeState::off;
        props.alert_flag = enc.alert_strip;
        props.color = enc.base;
        push("base", bind.node_base_mesh, tmpl_id, props, layout.node_transform(place));
    }
    {
        const auto& tmpl = templates.at(bind.node_outline_template);
        InstanceProps props;
        props.outline_enabled = outline_encode(node.node_temp_c, tmpl.tolerance_c);
        props.color = props.outline_enabled ? palette.red : palette.bar_background;
        push("outline", bind.node_outline_mesh, tmpl.template_id, props, layout.node_transform(place));
    }

    const auto& bar_tmpl = templates.at(bind.gpu_bar_template);
    const auto& power_tmpl = templates.at(bind.power_bar_template);
    const auto& gpu_outline_tmpl = templates.at(bind.gpu_outline_template);
    for (const auto& gpu : node.gpus) {
        const std::string g = "gpu" + std::to_string(gpu.gpu_index) + "_";
        const int gi = gpu.gpu_index;

        auto util = gpu_bar_encode(gpu.utilization, palette);
        InstanceProps up;
        up.load = util.fill;
        up.color = util.color;
        push(g + "util", bind.bar_mesh, bar_tmpl.template_id, up, layout.bar_transform(place, gi, 0));

        auto mem = gpu_bar_encode(gpu.mem_fraction(), palette);
        InstanceProps mp;
        mp.load = mem.fill;
        mp.color = mem.color;
        push(g + "mem", bind.bar_mesh, bar_tmpl.template_id, mp, layout.bar_transform(place, gi, 1));

        auto power = power_bar_encode(gpu.power_draw_w, power_tmpl, palette);
        InstanceProps pp;
        pp.load = power.fill;
        pp.overload_flag = power.overload;
        pp.color = power.color;
        push(g + "power", bind.bar_mesh, power_tmpl.template_id, pp, layout.bar_transform(place, gi, 2));

        InstanceProps op;
        op.outline_enabled = outline_encode(gpu.temp_c, gpu_outline_tmpl.tolerance_c);
        op.color = op.outline_enabled ? palette.red : palette.bar_background;
        push(g + "outline", bind.gpu_outline_mesh, gpu_outline_tmpl.template_id, op,
             layout.gpu_outline_transform(place, gi));
    }
}

} // namespace

Scene frame_to_scene(const SnapshotFrame& frame, const LayoutConfig& layout, const TemplateRegistry& templates,
                     const Palette& palette, int workers)
{
    std::vector<std::pair<const NodeTelemetry*, Placement>> work;
    work.reserve(frame.nodes.size());
    for (const auto& [name, node] : frame.nodes) {
        auto it = layout.placements.find(name);
        if (it == layout.placements.end())
            throw LayoutError("node '" + name + "' has no placement in the layout");
        work.emplace_back(&node, it->second);
    }

    Scene scene;
    scene.reserve(expected_item_count(frame));
    workers = std::max(1, std::min(workers, static_cast<int>(work.size())));

    if (workers == 1) {
        for (const auto& [node, place] : work)
            encode_node(*node, place, layout, templates, palette, scene);
    } else {
        const std::size_t chunk = (work.size() + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
        std::vector<std::future<std::vector<RenderItem>>> parts;
        for (std::size_t begin = 0; begin < work.size(); begin += chunk) {
            const std::size_t end = std::min(work.size(), begin + chunk);
            parts.push_back(std::async(std::launch::async, [&, begin, end] {
                std::vector<RenderItem> local;
                for (std::size_t i = begin; i < end; ++i)
                    encode_node(*work[i].first, work[i].second, layout, templates, palette, local);
                return local;
            }));
        }
        for (auto& part : parts) {
            auto items = part.get();
            scene.insert(scene.end(), std::make_move_iterator(items.begin()), std::make_move_iterator(items.end()));
        }
    }

    std::sort(scene.begin(), scene.end(),
              [](const RenderItem& a, const RenderItem& b) { return a.item_id < b.item_id; });
    return scene;
}

SceneDiff diff_updates(const Scene& prev, const Scene& next)
{
    SceneDiff diff;
    if (prev.size() != next.size()) {
        diff.structural_change = true;
        return diff;
    }
    for (std::size_t i = 0; i < prev.size(); ++i) {
        const RenderItem& a = prev[i];
        const RenderItem& b = next[i];
        if (a.item_id != b.item_id || a.mesh_id != b.mesh_id || a.template_id != b.template_id ||
            !(a.transform == b.transform)) {
            diff.structural_change = true;
            diff.updates.clear();
            return diff;
        }
        if (a.instance == b.instance)
            continue;
        RenderPropertyUpdate update;
        update.item_id = b.item_id;
        for (auto id : instance_property_ids) {
            const double before = get_property(a.instance, id);
            const double after = get_property(b.instance, id);
            // bitwise inequality; NaN never appears in encoder output
            if (before != after)
                update.props.emplace(std::string(id), after);
        }
        diff.updates.push_back(std::move(update));
    }
    return diff;
}

const RenderItem* find_item(const Scene& scene, std::string_view item_id)
{
    auto it = std::lower_bound(scene.begin(), scene.end(), item_id,
                               [](const RenderItem& item, std::string_view id) { return item.item_id < id; });
    if (it == scene.end() || it->item_id != item_id)
        return nullptr;
    return &*it;
}

Scene apply_updates(Scene scene, const std::vector<RenderPropertyUpdate>& updates)
{
    for (const auto& update : updates) {
        auto it = std::lower_bound(scene.begin(), scene.end(), update.item_id,
                                   [](const RenderItem& item, const std::string& id) { return item.item_id < id; });
        if (it == scene.end() || it->item_id != update.item_id)
            throw InputError("update references unknown item '" + update.item_id + "'");
        for (const auto& [id, value] : update.props)
            set_property(it->instance, id, value);
    }
    return scene;
}

} // namespace dtwin
