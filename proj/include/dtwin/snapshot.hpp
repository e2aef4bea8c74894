#pragma once

#include "dtwin/telemetry.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dtwin {

enum class Field {
    node,
    state,
    cpu_load,
    node_temp_c,
    user,
    job_id,
    alerts,
    kind,
    gpu_util,
    gpu_mem_used,
    gpu_mem_cap,
    gpu_power_w,
    gpu_temp_c,
};

/// Unit of a numeric column; values are converted to the model's base unit
/// (fraction, bytes, watts, degrees Celsius) on parse.
enum class Unit { none, fraction, percent, bytes, kib, mib, gib, watts, kilowatts, celsius, fahrenheit };

struct ColumnSpec {
    std::string name;
    Field field = Field::node;
    int gpu = -1; ///< GPU index for gpu_* fields
    Unit unit = Unit::none;
};

/// Column layout of a delimited snapshot document.
struct SnapshotSchema {
    char delimiter = '\t';
    std::vector<ColumnSpec> columns;

    /// node, state, cpu_load, node_temp_c, user, job_id, alerts and one
    /// gpu{i}_util/_mem_used/_mem_cap/_power_w/_temp_c group per GPU.
    static SnapshotSchema standard(int gpus_per_node, char delimiter = '\t');

    /// Line format: `delimiter=tab|comma` once, then `column<TAB>field<TAB>unit`
    /// where field is e.g. `cpu_load` or `gpu1.power_w`. Throws SchemaError.
    static SnapshotSchema parse(std::string_view text);
    static SnapshotSchema load(const std::filesystem::path& path);

    int gpu_count() const;
    /// Throws SchemaError naming the first missing or duplicated required column.
    void validate() const;
};

struct RowError {
    std::size_t line = 0; ///< 1-based line number in the document
    std::string message;
};

struct ParseResult {
    SnapshotFrame frame;
    std::vector<RowError> row_errors;
    std::size_t data_rows = 0;
    std::size_t clamp_count = 0;
};

/// Parses one snapshot document. Malformed rows are skipped and reported;
/// a header that does not satisfy the schema throws SchemaError.
///
/// Node rows may be followed by a `#env` line, an env header
/// (sensor_id, humidity_pct, airflow, temp_c and optionally timestamp) and
/// one row per facility sensor. data_rows counts node and env rows.
ParseResult parse_snapshot(std::string_view text, const SnapshotSchema& schema, TimestampMs timestamp);

/// Writes a document `parse_snapshot` reads back to the same frame.
std::string serialize_snapshot(const SnapshotFrame& frame, const SnapshotSchema& schema);

/// Clamps to type invariants (ranges, off-node readings); returns the number of corrections.
std::size_t clamp_to_invariants(NodeTelemetry& node);

} // namespace dtwin
