#pragma once

#include <hexpert/tasks/sinusoid.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace hexpert::embed {

struct BinRange {
    double lo = tasks::kInputMin;
    double hi = tasks::kInputMax;
};

struct RegressionEmbedding {
    std::vector<double> bin_values;
    BinRange range;
    /// Set when the embedding was built from an empty point list.
    bool empty_input = false;
};

/// Equal-width bins over `range`; each bin holds the mean y of its points,
/// empty bins hold 0, x outside the range lands in the edge bins. The result
/// does not depend on point order (bitwise).
RegressionEmbedding embed_regression(std::span<const tasks::Point> points, std::size_t n_bins,
                                     BinRange range = {});

} // namespace hexpert::embed
