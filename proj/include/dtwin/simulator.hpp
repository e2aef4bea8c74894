#pragma once

#include "dtwin/telemetry.hpp"

#include <cstdint>
#include <string>

namespace dtwin {

/// Per-metric random-walk step sizes (in the metric's base unit).
struct DriftModel {
    double cpu_load = 0.04;
    double gpu_util = 0.05;
    double gpu_mem = 0.03;
    double power_w = 12.0;
    double temp_c = 1.5;
};

struct SimulatorConfig {
    int node_count = 318;  ///< GPU-accelerated nodes (or cpu-only when gpus_per_node = 0)
    int gpus_per_node = 2;
    int cpu_node_count = 0; ///< additional cpu-only nodes
    double tick_hz = 1.0;
    std::uint64_t seed = 1;
    double idle_fraction = 0.10;
    double off_fraction = 0.03;
    double mem_capacity_bytes = 94.0 * 1024 * 1024 * 1024;
    TimestampMs start_ms = 1'700'000'000'000;
    DriftModel drift;

    /// Throws InputError when counts or rates are out of range.
    void validate() const;
};

/// Synthetic collector output for tick `t`: a pure function of (config, t).
SnapshotFrame simulate_tick(const SimulatorConfig& config, std::int64_t t);

/// Name of the i-th simulated GPU node (0-based), e.g. "node-001".
std::string simulated_node_name(const SimulatorConfig& config, int index);
std::string simulated_cpu_node_name(const SimulatorConfig& config, int index);

} // namespace dtwin
