#include "dtwin/alerts.hpp"

#include "dtwin/assoc_store.hpp"
#include "dtwin/error.hpp"
#include "dtwin/glob.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace dtwin {

namespace {

constexpr std::string_view gpu_fields[] = {"util", "mem_used", "mem_cap", "mem_frac", "power_w", "temp_c"};

double gpu_value(const GpuTelemetry& gpu, std::string_view field)
{
    if (field == "util") return gpu.utilization;
    if (field == "mem_used") return gpu.mem_used_bytes;
    if (field == "mem_cap") return gpu.mem_capacity_bytes;
    if (field == "mem_frac") return gpu.mem_fraction();
    if (field == "power_w") return gpu.power_draw_w;
    return gpu.temp_c;
}

std::vector<std::string_view> split_tabs(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos)
            return out;
        start = pos + 1;
    }
}

std::optional<double> parse_threshold(std::string_view text)
{
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || !std::isfinite(value))
        return std::nullopt;
    std::string_view unit(ptr, static_cast<std::size_t>(last - ptr));
    if (unit.empty() || unit == "C" || unit == "W" || unit == "B")
        return value;
    if (unit == "F")
        return (value - 32.0) * 5.0 / 9.0;
    if (unit == "kW")
        return value * 1000.0;
    if (unit == "%")
        return value / 100.0;
    if (unit == "KiB")
        return value * 1024.0;
    if (unit == "MiB")
        return value * 1024.0 * 1024.0;
    if (unit == "GiB")
        return value * 1024.0 * 1024.0 * 1024.0;
    return std::nullopt;
}

} // namespace

std::string_view to_string(Comparator cmp)
{
    switch (cmp) {
    case Comparator::gt: return "gt";
    case Comparator::ge: return "ge";
    case Comparator::lt: return "lt";
    case Comparator::le: return "le";
    }
    return "gt";
}

std::string_view to_string(Severity severity)
{
    return severity == Severity::warn ? "warn" : "critical";
}

bool compare(Comparator cmp, double value, double threshold)
{
    switch (cmp) {
    case Comparator::gt: return value > threshold;
    case Comparator::ge: return value >= threshold;
    case Comparator::lt: return value < threshold;
    case Comparator::le: return value <= threshold;
    }
    return false;
}

MetricPath::MetricPath(std::string_view path) : text_(path)
{
    if (path == "cpu_load" || path == "node_temp_c") {
        field_ = text_;
        return;
    }
    auto dot = path.find('.');
    if (dot == std::string_view::npos || !path.starts_with("gpu"))
        throw ConfigError("metric path '" + text_ + "' does not resolve to a telemetry field");
    gpu_pattern_ = std::string(path.substr(0, dot));
    field_ = std::string(path.substr(dot + 1));
    if (std::find(std::begin(gpu_fields), std::end(gpu_fields), field_) == std::end(gpu_fields))
        throw ConfigError("metric path '" + text_ + "': unknown gpu field '" + field_ + "'");
    try {
        gpu_glob_.emplace(gpu_pattern_);
        const Glob& g = *gpu_glob_;
        // must be able to select at least one gpu<i> name
        bool any = false;
        for (int i = 0; i < 64 && !any; ++i)
            any = g.matches("gpu" + std::to_string(i));
        if (!any)
            throw ConfigError("metric path '" + text_ + "' selects no gpu");
    } catch (const InputError& e) {
        throw ConfigError("metric path '" + text_ + "': " + e.what());
    }
    per_gpu_ = true;
}

std::vector<double> MetricPath::resolve(const NodeTelemetry& node) const
{
    if (!per_gpu_)
        return {field_ == "cpu_load" ? node.cpu_load : node.node_temp_c};
    std::vector<double> out;
    for (const auto& gpu : node.gpus)
        if (gpu_glob_->matches("gpu" + std::to_string(gpu.gpu_index)))
            out.push_back(gpu_value(gpu, field_));
    return out;
}

std::vector<AlertRule> parse_rules(std::string_view text)
{
    std::vector<AlertRule> rules;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty() || line.front() == '#')
            continue;

        const auto where = "rules line " + std::to_string(line_no) + ": ";
        auto cells = split_tabs(line);
        if (cells.size() != 5)
            throw ConfigError(where + "expected 5 tab-separated fields");
        if (cells[0].empty())
            throw ConfigError(where + "empty rule id");

        std::optional<Comparator> cmp;
        for (auto c : {Comparator::gt, Comparator::ge, Comparator::lt, Comparator::le})
            if (to_string(c) == cells[2])
                cmp = c;
        if (!cmp)
            throw ConfigError(where + "unknown comparator '" + std::string(cells[2]) + "'");

        auto threshold = parse_threshold(cells[3]);
        if (!threshold)
            throw ConfigError(where + "bad threshold '" + std::string(cells[3]) + "'");

        Severity severity;
        if (cells[4] == "warn")
            severity = Severity::warn;
        else if (cells[4] == "critical")
            severity = Severity::critical;
        else
            throw ConfigError(where + "unknown severity '" + std::string(cells[4]) + "'");

        try {
            rules.push_back({std::string(cells[0]), MetricPath(cells[1]), *cmp, *threshold, severity});
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
        for (std::size_t i = 0; i + 1 < rules.size(); ++i)
            if (rules[i].rule_id == rules.back().rule_id)
                throw ConfigError(where + "duplicate rule id '" + rules.back().rule_id + "'");
    }
    return rules;
}

std::vector<AlertRule> load_rules(const std::filesystem::path& path)
{
    return parse_rules(read_file(path));
}

std::vector<AlertRule> default_rules()
{
    return {
        {"gpu_overtemp", MetricPath("gpu*.temp_c"), Comparator::gt, 85.0, Severity::critical},
        {"node_overtemp", MetricPath("node_temp_c"), Comparator::gt, 75.0, Severity::warn},
    };
}

std::vector<Alert> evaluate_alerts(const SnapshotFrame& frame, const std::vector<AlertRule>& rules)
{
    std::vector<const AlertRule*> ordered;
    for (const auto& rule : rules)
        ordered.push_back(&rule);
    std::sort(ordered.begin(), ordered.end(),
              [](const AlertRule* a, const AlertRule* b) { return a->rule_id < b->rule_id; });

    std::vector<Alert> out;
    for (const auto& [name, node] : frame.nodes) {
        for (const AlertRule* rule : ordered) {
            std::optional<double> hit;
            for (double v : rule->metric.resolve(node)) {
                if (!compare(rule->comparator, v, rule->threshold))
                    continue;
                const bool upward = rule->comparator == Comparator::gt || rule->comparator == Comparator::ge;
                if (!hit || (upward ? v > *hit : v < *hit))
                    hit = v;
            }
            if (hit)
                out.push_back({name, rule->rule_id, *hit, frame.timestamp, rule->severity});
        }
    }
    return out;
}

ConditionedFrame condition(const SnapshotFrame& frame, const std::vector<AlertRule>& rules,
                           const SnapshotFrame* previous)
{
    ConditionedFrame out;
    out.frame = frame;
    out.alerts = evaluate_alerts(frame, rules);
    for (const auto& alert : out.alerts) {
        auto& ids = out.frame.nodes.at(alert.node).alerts;
        if (std::find(ids.begin(), ids.end(), alert.rule_id) == ids.end())
            ids.push_back(alert.rule_id);
    }
    for (const auto& [name, node] : frame.nodes) {
        if (!previous) {
            out.changed_nodes.insert(name);
            continue;
        }
        auto it = previous->nodes.find(name);
        if (it == previous->nodes.end() || !(it->second == node))
            out.changed_nodes.insert(name);
    }
    if (previous) {
        for (const auto& [name, node] : previous->nodes)
            if (!frame.nodes.count(name))
                out.changed_nodes.insert(name);
    }
    return out;
}

} // namespace dtwin
