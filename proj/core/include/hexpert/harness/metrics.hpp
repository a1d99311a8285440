#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hexpert::harness {

inline constexpr int kMetricsSchemaVersion = 1;

/// One row per meta-batch (supervised) or meta-update (RL). utility is the
/// mean free energy (supervised) or mean normalized training return (RL);
/// metric is validation MSE, validation accuracy or mean normalized
/// validation return.
struct MetricsRow {
    std::size_t episode = 0;
    std::uint64_t seed = 0;
    std::size_t experts = 0;
    double utility = 0.0;
    double metric = 0.0;
    double mi_bits = 0.0;
    double expert_kl = 0.0;
    double selector_entropy = 0.0;
};

std::string metrics_header(const std::string& kind);
std::string format_row(const MetricsRow& row);

/// Appends rows to <dir>/metrics.csv, writing the header when the file is
/// created.
class MetricsWriter {
public:
    MetricsWriter(const std::filesystem::path& path, const std::string& kind);
    void write(const MetricsRow& row);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

/// Reads a metrics file; ConfigError on an unknown schema version.
std::vector<MetricsRow> read_metrics(const std::filesystem::path& path);

/// Wall-clock times, kept apart from metrics.csv so that file stays
/// byte-reproducible.
class TimingWriter {
public:
    explicit TimingWriter(const std::filesystem::path& path);
    void write(std::size_t episode, std::uint64_t seed, double wall_ms);

private:
    std::ofstream out_;
};

/// Final evaluation of one seed.
struct SummaryRow {
    std::uint64_t seed = 0;
    std::size_t experts = 0;
    std::string pool;
    std::size_t episodes = 0;
    std::size_t adapt_steps = 0;
    double metric_mean = 0.0;
    double metric_std = 0.0;
    double mi_bits = 0.0;
    std::vector<std::size_t> expert_counts;
};

void write_summary(const std::filesystem::path& path, const std::string& kind, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_double(double v);

} // namespace hexpert::harness
