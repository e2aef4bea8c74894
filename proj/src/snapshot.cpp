#include "dtwin/snapshot.hpp"

#include "dtwin/assoc_store.hpp"
#include "dtwin/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>

namespace dtwin {

namespace {

struct FieldName {
    std::string_view name;
    Field field;
    bool per_gpu;
};

constexpr FieldName field_names[] = {
    {"node", Field::node, false},
    {"state", Field::state, false},
    {"cpu_load", Field::cpu_load, false},
    {"node_temp_c", Field::node_temp_c, false},
    {"user", Field::user, false},
    {"job_id", Field::job_id, false},
    {"alerts", Field::alerts, false},
    {"kind", Field::kind, false},
    {"util", Field::gpu_util, true},
    {"mem_used", Field::gpu_mem_used, true},
    {"mem_cap", Field::gpu_mem_cap, true},
    {"power_w", Field::gpu_power_w, true},
    {"temp_c", Field::gpu_temp_c, true},
};

struct UnitName {
    std::string_view name;
    Unit unit;
    double scale;
};

constexpr UnitName unit_names[] = {
    {"", Unit::none, 1.0},
    {"-", Unit::none, 1.0},
    {"fraction", Unit::fraction, 1.0},
    {"percent", Unit::percent, 0.01},
    {"bytes", Unit::bytes, 1.0},
    {"KiB", Unit::kib, 1024.0},
    {"MiB", Unit::mib, 1024.0 * 1024.0},
    {"GiB", Unit::gib, 1024.0 * 1024.0 * 1024.0},
    {"W", Unit::watts, 1.0},
    {"kW", Unit::kilowatts, 1000.0},
    {"C", Unit::celsius, 1.0},
    {"F", Unit::fahrenheit, 1.0},
};

bool is_gpu_field(Field f)
{
    return f >= Field::gpu_util;
}

bool is_required(Field f)
{
    return f == Field::node || f == Field::state || f == Field::cpu_load || f == Field::node_temp_c ||
           is_gpu_field(f);
}

std::string_view field_suffix(Field f)
{
    for (const auto& fn : field_names)
        if (fn.field == f)
            return fn.name;
    return "";
}

double to_base(double value, Unit unit)
{
    if (unit == Unit::fahrenheit)
        return (value - 32.0) * 5.0 / 9.0;
    for (const auto& un : unit_names)
        if (un.unit == unit)
            return value * un.scale;
    return value;
}

double from_base(double value, Unit unit)
{
    if (unit == Unit::fahrenheit)
        return value * 9.0 / 5.0 + 32.0;
    for (const auto& un : unit_names)
        if (un.unit == unit)
            return value / un.scale;
    return value;
}

std::vector<std::string_view> split(std::string_view line, char delim)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delim, start);
        cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return cells;
}

std::optional<double> parse_number(std::string_view cell)
{
    while (!cell.empty() && cell.front() == ' ')
        cell.remove_prefix(1);
    while (!cell.empty() && cell.back() == ' ')
        cell.remove_suffix(1);
    if (!cell.empty() && cell.front() == '+')
        cell.remove_prefix(1);
    if (cell.empty())
        return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

std::string column_label(const ColumnSpec& col)
{
    if (is_gpu_field(col.field))
        return "gpu" + std::to_string(col.gpu) + "_" + std::string(field_suffix(col.field));
    return std::string(field_suffix(col.field));
}

struct RowReject {
    std::string message;
};

double clamp_count(double value, double lo, double hi, std::size_t& clamps)
{
    if (value < lo) {
        ++clamps;
        return lo;
    }
    if (value > hi) {
        ++clamps;
        return hi;
    }
    return value;
}

} // namespace

SnapshotSchema SnapshotSchema::standard(int gpus_per_node, char delimiter)
{
    SnapshotSchema schema;
    schema.delimiter = delimiter;
    schema.columns = {
        {"node", Field::node, -1, Unit::none},
        {"state", Field::state, -1, Unit::none},
        {"cpu_load", Field::cpu_load, -1, Unit::fraction},
        {"node_temp_c", Field::node_temp_c, -1, Unit::celsius},
        {"user", Field::user, -1, Unit::none},
        {"job_id", Field::job_id, -1, Unit::none},
        {"alerts", Field::alerts, -1, Unit::none},
    };
    for (int i = 0; i < gpus_per_node; ++i) {
        const std::string p = "gpu" + std::to_string(i) + "_";
        schema.columns.push_back({p + "util", Field::gpu_util, i, Unit::fraction});
        schema.columns.push_back({p + "mem_used", Field::gpu_mem_used, i, Unit::bytes});
        schema.columns.push_back({p + "mem_cap", Field::gpu_mem_cap, i, Unit::bytes});
        schema.columns.push_back({p + "power_w", Field::gpu_power_w, i, Unit::watts});
        schema.columns.push_back({p + "temp_c", Field::gpu_temp_c, i, Unit::celsius});
    }
    return schema;
}

SnapshotSchema SnapshotSchema::parse(std::string_view text)
{
    SnapshotSchema schema;
    schema.columns.clear();
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty() || line.front() == '#')
            continue;
        const auto where = "schema line " + std::to_string(line_no) + ": ";
        if (line.starts_with("delimiter=")) {
            auto d = line.substr(10);
            if (d == "tab")
                schema.delimiter = '\t';
            else if (d == "comma")
                schema.delimiter = ',';
            else
                throw SchemaError(where + "delimiter must be 'tab' or 'comma'");
            continue;
        }
        auto cells = split(line, '\t');
        if (cells.size() < 2 || cells.size() > 3)
            throw SchemaError(where + "expected column<TAB>field[<TAB>unit]");
        ColumnSpec col;
        col.name = std::string(cells[0]);
        std::string_view field = cells[1];
        if (field.starts_with("gpu")) {
            auto dot = field.find('.');
            int index = -1;
            if (dot != std::string_view::npos) {
                auto [p, ec] = std::from_chars(field.data() + 3, field.data() + dot, index);
                if (ec != std::errc() || p != field.data() + dot)
                    index = -1;
            }
            if (index < 0)
                throw SchemaError(where + "bad gpu field '" + std::string(field) + "'");
            col.gpu = index;
            field = field.substr(dot + 1);
        }
        bool found = false;
        for (const auto& fn : field_names) {
            if (fn.name == field && fn.per_gpu == (col.gpu >= 0)) {
                col.field = fn.field;
                found = true;
            }
        }
        if (!found)
            throw SchemaError(where + "unknown field '" + std::string(cells[1]) + "'");
        std::string_view unit = cells.size() == 3 ? cells[2] : std::string_view();
        found = false;
        for (const auto& un : unit_names) {
            if (un.name == unit) {
                col.unit = un.unit;
                found = true;
            }
        }
        if (!found)
            throw SchemaError(where + "unknown unit '" + std::string(unit) + "'");
        schema.columns.push_back(std::move(col));
    }
    schema.validate();
    return schema;
}

SnapshotSchema SnapshotSchema::load(const std::filesystem::path& path)
{
    return parse(read_file(path));
}

int SnapshotSchema::gpu_count() const
{
    int n = 0;
    for (const auto& col : columns)
        if (is_gpu_field(col.field))
            n = std::max(n, col.gpu + 1);
    return n;
}

void SnapshotSchema::validate() const
{
    std::set<std::string> names;
    std::map<std::pair<Field, int>, int> seen;
    for (const auto& col : columns) {
        if (!names.insert(col.name).second)
            throw SchemaError("duplicate column '" + col.name + "'");
        if (++seen[{col.field, col.gpu}] > 1)
            throw SchemaError("field '" + column_label(col) + "' mapped more than once");
    }
    auto require = [&](Field f, int gpu) {
        if (!seen.count({f, gpu})) {
            ColumnSpec probe{"", f, gpu};
            throw SchemaError("missing required column '" + column_label(probe) + "'");
        }
    };
    require(Field::node, -1);
    require(Field::state, -1);
    require(Field::cpu_load, -1);
    require(Field::node_temp_c, -1);
    for (int i = 0; i < gpu_count(); ++i)
        for (Field f : {Field::gpu_util, Field::gpu_mem_used, Field::gpu_mem_cap, Field::gpu_power_w, Field::gpu_temp_c})
            require(f, i);
}

namespace {

constexpr std::string_view env_marker = "#env";
constexpr std::array<std::string_view, 5> env_columns = {"sensor_id", "humidity_pct", "airflow", "temp_c", "timestamp"};

/// Column positions of the env table that follows the `#env` line.
struct EnvSection {
    bool bound = false;
    std::size_t width = 0;
    std::array<std::optional<std::size_t>, env_columns.size()> index{};

    void bind(std::string_view header, char delim, std::size_t line_no)
    {
        auto cells = split(header, delim);
        width = cells.size();
        for (std::size_t c = 0; c < env_columns.size(); ++c) {
            auto it = std::find(cells.begin(), cells.end(), env_columns[c]);
            if (it != cells.end())
                index[c] = static_cast<std::size_t>(it - cells.begin());
            else if (c != 4) // timestamp defaults to the frame's
                throw SchemaError("line " + std::to_string(line_no) + ": env section missing required column '" +
                                  std::string(env_columns[c]) + "'");
        }
        bound = true;
    }
};

void parse_env_row(std::string_view line, char delim, const EnvSection& env, ParseResult& result)
{
    auto cells = split(line, delim);
    if (cells.size() != env.width)
        throw RowReject{"expected " + std::to_string(env.width) + " cells, found " + std::to_string(cells.size())};
    EnvTelemetry e;
    e.sensor_id = std::string(cells[*env.index[0]]);
    if (e.sensor_id.empty())
        throw RowReject{"empty sensor_id"};
    double* targets[] = {&e.humidity_pct, &e.airflow, &e.temp_c};
    for (std::size_t c = 1; c <= 3; ++c) {
        auto v = parse_number(cells[*env.index[c]]);
        if (!v)
            throw RowReject{"column '" + std::string(env_columns[c]) + "': non-numeric value '" +
                            std::string(cells[*env.index[c]]) + "'"};
        *targets[c - 1] = *v;
    }
    e.timestamp = result.frame.timestamp;
    if (env.index[4]) {
        auto text = cells[*env.index[4]];
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), e.timestamp);
        if (ec != std::errc() || ptr != text.data() + text.size())
            throw RowReject{"column 'timestamp': not an integer '" + std::string(text) + "'"};
    }
    for (const auto& other : result.frame.env)
        if (other.sensor_id == e.sensor_id)
            throw RowReject{"duplicate sensor '" + e.sensor_id + "'"};
    e.humidity_pct = clamp_count(e.humidity_pct, 0.0, 100.0, result.clamp_count);
    result.frame.env.push_back(std::move(e));
}

} // namespace

std::size_t clamp_to_invariants(NodeTelemetry& node)
{
    std::size_t clamps = 0;
    node.cpu_load = clamp_count(node.cpu_load, 0.0, 1.0, clamps);
    for (auto& gpu : node.gpus) {
        gpu.utilization = clamp_count(gpu.utilization, 0.0, 1.0, clamps);
        gpu.mem_capacity_bytes = clamp_count(gpu.mem_capacity_bytes, 0.0, HUGE_VAL, clamps);
        gpu.mem_used_bytes = clamp_count(gpu.mem_used_bytes, 0.0, gpu.mem_capacity_bytes, clamps);
        gpu.power_draw_w = clamp_count(gpu.power_draw_w, 0.0, HUGE_VAL, clamps);
    }
    if (node.state == NodeState::off) {
        if (node.cpu_load != 0.0) {
            node.cpu_load = 0.0;
            ++clamps;
        }
        for (auto& gpu : node.gpus) {
            for (double* v : {&gpu.utilization, &gpu.mem_used_bytes, &gpu.power_draw_w}) {
                if (*v != 0.0) {
                    *v = 0.0;
                    ++clamps;
                }
            }
        }
    }
    return clamps;
}

ParseResult parse_snapshot(std::string_view text, const SnapshotSchema& schema, TimestampMs timestamp)
{
    schema.validate();
    if (text.empty())
        throw SchemaError("empty snapshot document");

    ParseResult result;
    result.frame.timestamp = timestamp;

    auto lines = split(text, '\n');
    std::string_view header = lines.front();
    if (!header.empty() && header.back() == '\r')
        header.remove_suffix(1);

    std::map<std::string_view, std::size_t> header_index;
    auto header_cells = split(header, schema.delimiter);
    for (std::size_t i = 0; i < header_cells.size(); ++i) {
        if (!header_index.emplace(header_cells[i], i).second)
            throw SchemaError("duplicate header column '" + std::string(header_cells[i]) + "'");
    }

    struct Bound {
        const ColumnSpec* spec;
        std::size_t index;
    };
    std::vector<Bound> bound;
    for (const auto& col : schema.columns) {
        auto it = header_index.find(col.name);
        if (it == header_index.end()) {
            if (is_required(col.field))
                throw SchemaError("missing required column '" + col.name + "'");
            continue;
        }
        bound.push_back({&col, it->second});
    }

    const int gpu_slots = schema.gpu_count();
    std::optional<EnvSection> env;

    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::string_view line = lines[li];
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        const std::size_t line_no = li + 1;
        if (line == env_marker) {
            if (env)
                throw SchemaError("line " + std::to_string(line_no) + ": second env section");
            env.emplace();
            continue;
        }
        if (env && !env->bound) {
            env->bind(line, schema.delimiter, line_no);
            continue;
        }
        ++result.data_rows;
        if (env) {
            try {
                parse_env_row(line, schema.delimiter, *env, result);
            } catch (const RowReject& reject) {
                result.row_errors.push_back({line_no, "line " + std::to_string(line_no) + ": " + reject.message});
            }
            continue;
        }

        try {
            auto cells = split(line, schema.delimiter);
            if (cells.size() != header_cells.size())
                throw RowReject{"expected " + std::to_string(header_cells.size()) + " cells, found " +
                                std::to_string(cells.size())};

            NodeTelemetry node;
            std::vector<GpuTelemetry> gpus(static_cast<std::size_t>(gpu_slots));
            std::vector<int> gpu_present(static_cast<std::size_t>(gpu_slots), 0);
            std::vector<int> gpu_blank(static_cast<std::size_t>(gpu_slots), 0);
            std::optional<NodeKind> kind;

            for (const auto& b : bound) {
                std::string_view cell = cells[b.index];
                const ColumnSpec& col = *b.spec;
                auto numeric = [&]() {
                    auto v = parse_number(cell);
                    if (!v)
                        throw RowReject{"column '" + col.name + "': non-numeric value '" + std::string(cell) + "'"};
                    return to_base(*v, col.unit);
                };
                switch (col.field) {
                case Field::node:
                    if (cell.empty())
                        throw RowReject{"empty node name"};
                    node.node_name = std::string(cell);
                    break;
                case Field::state: {
                    auto s = parse_node_state(cell);
                    if (!s)
                        throw RowReject{"column '" + col.name + "': unknown state '" + std::string(cell) + "'"};
                    node.state = *s;
                    break;
                }
                case Field::kind:
                    if (!cell.empty()) {
                        kind = parse_node_kind(cell);
                        if (!kind)
                            throw RowReject{"column '" + col.name + "': unknown kind '" + std::string(cell) + "'"};
                    }
                    break;
                case Field::cpu_load: node.cpu_load = numeric(); break;
                case Field::node_temp_c: node.node_temp_c = numeric(); break;
                case Field::user:
                    if (!cell.empty())
                        node.user = std::string(cell);
                    break;
                case Field::job_id:
                    if (!cell.empty())
                        node.job_id = std::string(cell);
                    break;
                case Field::alerts:
                    for (auto id : split(cell, ';'))
                        if (!id.empty())
                            node.alerts.emplace_back(id);
                    break;
                default: {
                    auto g = static_cast<std::size_t>(col.gpu);
                    if (cell.empty()) {
                        ++gpu_blank[g];
                        break;
                    }
                    ++gpu_present[g];
                    GpuTelemetry& gpu = gpus[g];
                    gpu.gpu_index = col.gpu;
                    double v = numeric();
                    switch (col.field) {
                    case Field::gpu_util: gpu.utilization = v; break;
                    case Field::gpu_mem_used: gpu.mem_used_bytes = v; break;
                    case Field::gpu_mem_cap: gpu.mem_capacity_bytes = v; break;
                    case Field::gpu_power_w: gpu.power_draw_w = v; break;
                    case Field::gpu_temp_c: gpu.temp_c = v; break;
                    default: break;
                    }
                }
                }
            }

            for (int g = 0; g < gpu_slots; ++g) {
                auto i = static_cast<std::size_t>(g);
                if (gpu_present[i] > 0 && gpu_blank[i] > 0)
                    throw RowReject{"gpu" + std::to_string(g) + " columns partially blank"};
                if (gpu_present[i] > 0)
                    node.gpus.push_back(gpus[i]);
            }
            node.kind = node.gpus.empty() ? NodeKind::cpu_only : NodeKind::gpu_accelerated;
            if (kind && *kind != node.kind)
                throw RowReject{"kind '" + std::string(to_string(*kind)) + "' disagrees with gpu columns"};
            if (result.frame.nodes.count(node.node_name))
                throw RowReject{"duplicate node '" + node.node_name + "'"};

            result.clamp_count += clamp_to_invariants(node);
            auto name = node.node_name;
            result.frame.nodes.emplace(std::move(name), std::move(node));
        } catch (const RowReject& reject) {
            result.row_errors.push_back({line_no, "line " + std::to_string(line_no) + ": " + reject.message});
        }
    }
    return result;
}

std::string serialize_snapshot(const SnapshotFrame& frame, const SnapshotSchema& schema)
{
    schema.validate();
    const int gpu_slots = schema.gpu_count();
    std::string out;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
        if (i)
            out.push_back(schema.delimiter);
        out += schema.columns[i].name;
    }
    out.push_back('\n');

    for (const auto& [name, node] : frame.nodes) {
        if (static_cast<int>(node.gpus.size()) > gpu_slots)
            throw SchemaError("node '" + name + "' has more GPUs than the schema holds");
        for (std::size_t i = 0; i < schema.columns.size(); ++i) {
            const ColumnSpec& col = schema.columns[i];
            if (i)
                out.push_back(schema.delimiter);
            auto num = [&](double v) { out += format_number(from_base(v, col.unit)); };
            switch (col.field) {
            case Field::node: out += node.node_name; break;
            case Field::state: out += to_string(node.state); break;
            case Field::kind: out += to_string(node.kind); break;
            case Field::cpu_load: num(node.cpu_load); break;
            case Field::node_temp_c: num(node.node_temp_c); break;
            case Field::user: out += node.user.value_or(""); break;
            case Field::job_id: out += node.job_id.value_or(""); break;
            case Field::alerts:
                for (std::size_t a = 0; a < node.alerts.size(); ++a) {
                    if (a)
                        out.push_back(';');
                    out += node.alerts[a];
                }
                break;
            default: {
                auto it = std::find_if(node.gpus.begin(), node.gpus.end(),
                                       [&](const GpuTelemetry& g) { return g.gpu_index == col.gpu; });
                if (it == node.gpus.end())
                    break;
                switch (col.field) {
                case Field::gpu_util: num(it->utilization); break;
                case Field::gpu_mem_used: num(it->mem_used_bytes); break;
                case Field::gpu_mem_cap: num(it->mem_capacity_bytes); break;
                case Field::gpu_power_w: num(it->power_draw_w); break;
                case Field::gpu_temp_c: num(it->temp_c); break;
                default: break;
                }
            }
            }
        }
        out.push_back('\n');
    }

    if (!frame.env.empty()) {
        const char d = schema.delimiter;
        out += env_marker;
        out += '\n';
        for (std::size_t i = 0; i < env_columns.size(); ++i) {
            if (i)
                out.push_back(d);
            out += env_columns[i];
        }
        out.push_back('\n');
        for (const auto& e : frame.env) {
            out += e.sensor_id;
            for (double v : {e.humidity_pct, e.airflow, e.temp_c}) {
                out.push_back(d);
                out += format_number(v);
            }
            out.push_back(d);
            out += std::to_string(e.timestamp);
            out.push_back('\n');
        }
    }
    return out;
}

} // namespace dtwin
