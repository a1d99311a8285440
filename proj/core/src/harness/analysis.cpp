#include <hexpert/harness/analysis.hpp>

#include <hexpert/errors.hpp>
#include <hexpert/supervised/selector.hpp>
#include <hexpert/tasks/episodes.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

namespace hexpert::harness {

namespace {

constexpr std::uint64_t kPartitionStream = 40;

} // namespace

RateUtility rate_utility(const std::vector<std::filesystem::path>& run_dirs, bool lower_is_better)
{
    RateUtility table;
    struct Acc {
        std::vector<double> metric;
        std::vector<double> mi;
    };
    std::map<std::size_t, Acc> by_m;
    for (const auto& dir : run_dirs) {
        std::vector<SummaryRow> rows;
        try {
            rows = read_summary(dir / "summary.csv");
        } catch (const ConfigError&) {
            table.missing.push_back(dir);
            continue;
        }
        if (rows.empty()) {
            table.missing.push_back(dir);
            continue;
        }
        for (const auto& r : rows) {
            by_m[r.experts].metric.push_back(r.metric_mean);
            by_m[r.experts].mi.push_back(r.experts > 1 ? r.mi_bits : 0.0);
        }
    }
    for (const auto& [m, acc] : by_m) {
        RateUtilityRow row;
        row.experts = m;
        row.seeds = acc.metric.size();
        const double n = static_cast<double>(row.seeds);
        for (std::size_t i = 0; i < acc.metric.size(); ++i) {
            row.metric_mean += acc.metric[i] / n;
            row.mi_bits += acc.mi[i] / n;
        }
        if (row.seeds > 1) {
            double ss = 0.0;
            for (double v : acc.metric)
                ss += (v - row.metric_mean) * (v - row.metric_mean);
            row.metric_std = std::sqrt(ss / (n - 1.0));
        }
        if (!table.rows.empty()) {
            const double prev = table.rows.back().metric_mean;
            row.improves = lower_is_better ? row.metric_mean < prev : row.metric_mean > prev;
        }
        table.rows.push_back(row);
    }
    return table;
}

void write_rate_utility(std::ostream& out, const RateUtility& table)
{
    out << "# hexpert rate-utility v" << kMetricsSchemaVersion << '\n';
    out << "experts,seeds,mi_bits,metric_mean,metric_std,improves\n";
    for (const auto& r : table.rows)
        out << r.experts << ',' << r.seeds << ',' << format_double(r.mi_bits) << ',' << format_double(r.metric_mean)
            << ',' << format_double(r.metric_std) << ',' << (r.improves ? "pass" : "fail") << '\n';
    for (const auto& m : table.missing)
        out << "# missing " << m.string() << '\n';
}

Partition export_partition(const supervised::HierarchicalModel& model, std::size_t rows, std::size_t cols,
                           std::size_t k, std::uint64_t seed)
{
    if (model.spec.kind != supervised::TaskKind::Regression)
        throw ContractViolation("export_partition needs a regression model");
    if (rows == 0 || cols == 0)
        throw ContractViolation("export_partition needs a non-empty grid");
    Partition p;
    p.rows = rows;
    p.cols = cols;
    const double da = (tasks::kAmplitudeMax - tasks::kAmplitudeMin) / static_cast<double>(rows);
    const double db = (tasks::kPhaseMax - tasks::kPhaseMin) / static_cast<double>(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            PartitionCell cell;
            cell.amplitude = tasks::kAmplitudeMin + (static_cast<double>(i) + 0.5) * da;
            cell.phase = tasks::kPhaseMin + (static_cast<double>(j) + 0.5) * db;
            Rng rng = stream_rng(seed, {kPartitionStream, i, j});
            const auto episode = tasks::build_sinusoid_episode({cell.amplitude, cell.phase}, k, rng);
            const auto z = supervised::embed_task(model, episode);
            const auto post = model.selector.posterior(z);
            cell.posterior.assign(post.probs().begin(), post.probs().end());
            cell.expert = post.argmax();
            p.cells.push_back(std::move(cell));
        }
    }
    return p;
}

void write_partition(std::ostream& out, const Partition& partition)
{
    const std::size_t m = partition.cells.empty() ? 0 : partition.cells.front().posterior.size();
    out << "# hexpert partition v" << kMetricsSchemaVersion << '\n' << "amplitude,phase,expert";
    for (std::size_t e = 0; e < m; ++e)
        out << ",p" << e;
    out << '\n';
    for (const auto& c : partition.cells) {
        out << format_double(c.amplitude) << ',' << format_double(c.phase) << ',' << c.expert;
        for (double v : c.posterior)
            out << ',' << format_double(v);
        out << '\n';
    }
}

std::vector<OwnershipStats> ownership(const Partition& p, std::size_t experts, bool wrap_phase)
{
    std::vector<OwnershipStats> stats(experts);
    std::vector<std::size_t> largest(experts, 0);
    std::vector<bool> seen(p.cells.size(), false);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < p.cells.size(); ++start) {
        const std::size_t owner = p.cells[start].expert;
        if (owner >= experts)
            throw ContractViolation("partition cell owned by an unknown expert");
        ++stats[owner].cells;
        if (seen[start])
            continue;
        std::size_t size = 0;
        stack.assign(1, start);
        seen[start] = true;
        while (!stack.empty()) {
            const std::size_t c = stack.back();
            stack.pop_back();
            ++size;
            const std::size_t r = c / p.cols, q = c % p.cols;
            std::vector<std::size_t> next;
            if (r > 0)
                next.push_back(c - p.cols);
            if (r + 1 < p.rows)
                next.push_back(c + p.cols);
            if (q > 0)
                next.push_back(c - 1);
            else if (wrap_phase && p.cols > 1)
                next.push_back(c + p.cols - 1);
            if (q + 1 < p.cols)
                next.push_back(c + 1);
            else if (wrap_phase && p.cols > 1)
                next.push_back(c + 1 - p.cols);
            for (std::size_t n : next)
                if (!seen[n] && p.cells[n].expert == owner) {
                    seen[n] = true;
                    stack.push_back(n);
                }
        }
        largest[owner] = std::max(largest[owner], size);
    }
    for (std::size_t e = 0; e < experts; ++e)
        stats[e].largest_component_share =
            stats[e].cells ? static_cast<double>(largest[e]) / static_cast<double>(stats[e].cells) : 0.0;
    return stats;
}

} // namespace hexpert::harness
