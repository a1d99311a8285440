#pragma once

#include <hexpert/harness/metrics.hpp>
#include <hexpert/supervised/model.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hexpert::harness {

struct RateUtilityRow {
    std::size_t experts = 0;
    std::size_t seeds = 0;
    double mi_bits = 0.0;
    double metric_mean = 0.0;
    /// Sample standard deviation over seeds; 0 for a single seed.
    double metric_std = 0.0;
    /// Metric better than the row with the next smaller M (true for the first row).
    bool improves = true;
};

struct RateUtility {
    std::vector<RateUtilityRow> rows; // ascending M
    /// Run directories without a readable summary.csv.
    std::vector<std::filesystem::path> missing;
};

/// Aggregates <dir>/summary.csv over seeds, one row per M. lower_is_better
/// selects the direction of the improvement column (MSE vs accuracy/return).
RateUtility rate_utility(const std::vector<std::filesystem::path>& run_dirs, bool lower_is_better);
void write_rate_utility(std::ostream& out, const RateUtility& table);

struct PartitionCell {
    double amplitude = 0.0;
    double phase = 0.0;
    std::size_t expert = 0;
    std::vector<double> posterior;
};

struct Partition {
    std::size_t rows = 0; // amplitude cells
    std::size_t cols = 0; // phase cells
    std::vector<PartitionCell> cells; // row-major
};

/// Cell centres over amplitude [0.1, 5] x phase [0, 2 pi]; each cell samples
/// one K-point dataset from stream (seed, row, col), embeds it and records
/// the selector posterior. Regression models only.
Partition export_partition(const supervised::HierarchicalModel& model, std::size_t rows, std::size_t cols,
                           std::size_t k, std::uint64_t seed);
void write_partition(std::ostream& out, const Partition& partition);

/// Per expert: cells owned and share of them in the largest 4-connected
/// component. With wrap_phase the phase axis is treated as a circle.
struct OwnershipStats {
    std::size_t cells = 0;
    double largest_component_share = 0.0;
};
std::vector<OwnershipStats> ownership(const Partition& partition, std::size_t experts, bool wrap_phase);

} // namespace hexpert::harness
