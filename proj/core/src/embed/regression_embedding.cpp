#include <hexpert/embed/regression_embedding.hpp>

#include <hexpert/errors.hpp>

#include <algorithm>
#include <cmath>

namespace hexpert::embed {

RegressionEmbedding embed_regression(std::span<const tasks::Point> points, std::size_t n_bins,
                                     BinRange range)
{
    if (n_bins == 0)
        throw ContractViolation("embed_regression: n_bins must be at least 1");
    if (!(range.hi > range.lo))
        throw ContractViolation("embed_regression: degenerate bin range");

    RegressionEmbedding out;
    out.range = range;
    out.bin_values.assign(n_bins, 0.0);
    out.empty_input = points.empty();

    std::vector<std::vector<double>> bins(n_bins);
    const double width = (range.hi - range.lo) / static_cast<double>(n_bins);
    for (const auto& p : points) {
        const double pos = std::floor((p.x - range.lo) / width);
        const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n_bins - 1)));
        bins[idx].push_back(p.y);
    }
    for (std::size_t b = 0; b < n_bins; ++b) {
        auto& ys = bins[b];
        if (ys.empty())
            continue;
        // Fixed summation order keeps the mean independent of input order.
        std::sort(ys.begin(), ys.end());
        double s = 0.0;
        for (double y : ys)
            s += y;
        out.bin_values[b] = s / static_cast<double>(ys.size());
    }
    return out;
}

} // namespace hexpert::embed
