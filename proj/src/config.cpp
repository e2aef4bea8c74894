#include "dtwin/config.hpp"

#include "dtwin/assoc_store.hpp"
#include "dtwin/error.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace dtwin {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double to_double(const std::string& key, std::string_view text)
{
    auto v = Value::from_text(trim(text));
    if (!v.is_number())
        throw ConfigError("config key '" + key + "': expected a number, got '" + std::string(text) + "'");
    return v.number();
}

std::int64_t to_int(const std::string& key, std::string_view text)
{
    text = trim(text);
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("config key '" + key + "': expected an integer, got '" + std::string(text) + "'");
    return out;
}

Color to_color(const std::string& key, std::string_view text)
{
    double c[3];
    for (int i = 0; i < 3; ++i) {
        auto comma = text.find(',');
        if ((comma == std::string_view::npos) != (i == 2))
            throw ConfigError("config key '" + key + "': expected r,g,b");
        c[i] = to_double(key, text.substr(0, comma));
        if (!(c[i] >= 0.0 && c[i] <= 1.0))
            throw ConfigError("config key '" + key + "': color components must lie in [0,1]");
        if (comma != std::string_view::npos)
            text = text.substr(comma + 1);
    }
    return {c[0], c[1], c[2]};
}

} // namespace

std::map<std::string, std::string> parse_key_values(std::string_view text)
{
    std::map<std::string, std::string> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key(trim(line.substr(0, eq)));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (!out.emplace(key, std::string(trim(line.substr(eq + 1)))).second)
            throw ConfigError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
    return out;
}

SceneConfig SceneConfig::parse(std::string_view text)
{
    SceneConfig cfg;
    cfg.simulator.cpu_node_count = 0;
    auto kv = parse_key_values(text);

    MeshLibrary meshes;
    bool custom_meshes = false;
    auto templates = cfg.templates.all();

    for (const auto& [key, value] : kv) {
        if (key == "gpu_nodes") cfg.simulator.node_count = static_cast<int>(to_int(key, value));
        else if (key == "gpus_per_node") cfg.simulator.gpus_per_node = static_cast<int>(to_int(key, value));
        else if (key == "cpu_nodes") cfg.simulator.cpu_node_count = static_cast<int>(to_int(key, value));
        else if (key == "seed") cfg.simulator.seed = static_cast<std::uint64_t>(to_int(key, value));
        else if (key == "tick") cfg.tick = to_int(key, value);
        else if (key == "tick_hz") cfg.simulator.tick_hz = to_double(key, value);
        else if (key == "idle_fraction") cfg.simulator.idle_fraction = to_double(key, value);
        else if (key == "off_fraction") cfg.simulator.off_fraction = to_double(key, value);
        else if (key == "nodes_per_rack") cfg.nodes_per_rack = static_cast<int>(to_int(key, value));
        else if (key.starts_with("mesh.")) {
            custom_meshes = true;
            meshes.add(key.substr(5), to_int(key, value));
        } else if (key.starts_with("template.")) {
            auto rest = std::string_view(key).substr(9);
            auto dot = rest.rfind('.');
            if (dot == std::string_view::npos)
                throw ConfigError("config key '" + key + "': expected template.<id>.<param>");
            auto it = templates.find(rest.substr(0, dot));
            if (it == templates.end())
                throw ConfigError("config key '" + key + "': unknown template '" + std::string(rest.substr(0, dot)) + "'");
            auto param = rest.substr(dot + 1);
            MaterialTemplate& t = it->second;
            if (param == "min_w") t.min_w = to_double(key, value);
            else if (param == "max_w") t.max_w = to_double(key, value);
            else if (param == "normalized_large") t.normalized_large = to_double(key, value);
            else if (param == "tolerance_c") t.tolerance_c = to_double(key, value);
            else if (param == "outline_thickness") t.outline_thickness = to_double(key, value);
            else if (param == "outline_proportion") t.outline_proportion = to_double(key, value);
            else if (param == "base_texture_id") t.base_texture_id = value;
            else throw ConfigError("config key '" + key + "': unknown template parameter");
        } else if (key == "gradient.node_base.low") cfg.palette.node_base.low = to_color(key, value);
        else if (key == "gradient.node_base.high") cfg.palette.node_base.high = to_color(key, value);
        else if (key == "gradient.gpu_bar.low") cfg.palette.gpu_bar.low = to_color(key, value);
        else if (key == "gradient.gpu_bar.high") cfg.palette.gpu_bar.high = to_color(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    }

    if (custom_meshes)
        cfg.meshes = meshes;
    TemplateRegistry registry;
    for (auto& [id, t] : templates)
        registry.add(t);
    cfg.templates = std::move(registry);
    cfg.simulator.validate();
    if (cfg.tick < 0)
        throw ConfigError("config key 'tick' must be >= 0");
    if (cfg.nodes_per_rack < 1)
        throw ConfigError("config key 'nodes_per_rack' must be >= 1");
    return cfg;
}

SceneConfig SceneConfig::load(const std::filesystem::path& path)
{
    return parse(read_file(path));
}

LayoutConfig SceneConfig::layout_for(const SnapshotFrame& frame) const
{
    std::vector<std::string> names;
    for (const auto& [name, node] : frame.nodes)
        if (node.kind == NodeKind::gpu_accelerated)
            names.push_back(name);
    for (const auto& [name, node] : frame.nodes)
        if (node.kind == NodeKind::cpu_only)
            names.push_back(name);
    return LayoutConfig::grid(names, nodes_per_rack);
}

std::string_view reference_scene_text()
{
    return R"cfg(# Reference machine-scale scene: 318 dual-GPU nodes plus cpu-only nodes.
gpu_nodes = 318
gpus_per_node = 2
cpu_nodes = 224
seed = 7
tick = 0
nodes_per_rack = 40

# triangles per mesh
mesh.node_base = 28
mesh.bar = 12
mesh.node_outline = 24
mesh.gpu_outline = 24

template.power_bar.min_w = 0
template.power_bar.max_w = 400
template.power_bar.normalized_large = 0.9
template.outline/node.tolerance_c = 75
template.outline/gpu.tolerance_c = 85

gradient.node_base.low = 0.05,0.10,0.35
gradient.node_base.high = 1.0,0.55,0.10
gradient.gpu_bar.low = 0.20,0.05,0.30
gradient.gpu_bar.high = 1,1,1
)cfg";
}

} // namespace dtwin
