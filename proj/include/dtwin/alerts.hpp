#pragma once

#include "dtwin/glob.hpp"
#include "dtwin/telemetry.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dtwin {

enum class Comparator { gt, ge, lt, le };
enum class Severity { warn, critical };

std::string_view to_string(Comparator cmp);
std::string_view to_string(Severity severity);

bool compare(Comparator cmp, double value, double threshold);

/// A resolved metric path: `cpu_load`, `node_temp_c`, or `<gpu-glob>.<field>`
/// with field one of util, mem_used, mem_cap, mem_frac, power_w, temp_c.
class MetricPath {
public:
    /// Throws ConfigError if the path does not name a telemetry metric.
    explicit MetricPath(std::string_view path);

    const std::string& text() const { return text_; }
    bool per_gpu() const { return per_gpu_; }

    /// All values the path selects on one node (empty when no GPU matches).
    std::vector<double> resolve(const NodeTelemetry& node) const;

private:
    std::string text_;
    bool per_gpu_ = false;
    std::string gpu_pattern_;
    std::optional<Glob> gpu_glob_;
    std::string field_;
};

struct AlertRule {
    std::string rule_id;
    MetricPath metric;
    Comparator comparator = Comparator::gt;
    double threshold = 0.0; ///< in the metric's base unit
    Severity severity = Severity::warn;
};

struct Alert {
    std::string node;
    std::string rule_id;
    double value = 0.0;
    TimestampMs timestamp = 0;
    Severity severity = Severity::warn;

    bool operator==(const Alert&) const = default;
};

/// `rule_id<TAB>metric_path<TAB>comparator<TAB>threshold<TAB>severity` per
/// line; `#` comments. Thresholds take an optional unit suffix
/// (C, F, W, kW, %, B, KiB, MiB, GiB). Throws ConfigError with the line number.
std::vector<AlertRule> parse_rules(std::string_view text);
std::vector<AlertRule> load_rules(const std::filesystem::path& path);

/// gpu temperature > 85 C (critical) and node temperature > 75 C (warn).
std::vector<AlertRule> default_rules();

/// One alert per (node, rule) whose metric satisfies the comparator, ordered
/// by (node, rule_id). For GPU wildcards the reported value is the most
/// extreme satisfying reading.
std::vector<Alert> evaluate_alerts(const SnapshotFrame& frame, const std::vector<AlertRule>& rules);

struct ConditionedFrame {
    SnapshotFrame frame; ///< input frame with fired rule ids merged into each node's alerts
    std::vector<Alert> alerts;
    std::set<std::string> changed_nodes;
};

/// Attaches alerts and the set of nodes whose telemetry differs from `previous`
/// (every node when there is no previous frame; removed nodes count as changed).
ConditionedFrame condition(const SnapshotFrame& frame, const std::vector<AlertRule>& rules,
                           const SnapshotFrame* previous);

} // namespace dtwin
