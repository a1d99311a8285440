#include <hexpert/br/information.hpp>

#include <hexpert/errors.hpp>

#include <algorithm>
#include <cmath>

namespace hexpert::br {

double mutual_information_bits(const nn::Tensor& joint)
{
    if (joint.rank() != 2)
        throw DomainError("mutual information needs an M x T joint matrix");
    const std::size_t rows = joint.dim(0), cols = joint.dim(1);
    double total = 0.0;
    for (double v : joint.values()) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw DomainError("joint weights must be finite and non-negative");
        total += v;
    }
    if (!(total > 0.0))
        throw DomainError("joint weights are all zero");
    if (rows == 1 || cols == 1)
        return 0.0;

    std::vector<double> pr(rows, 0.0), pc(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            pr[i] += joint[i * cols + j] / total;
            pc[j] += joint[i * cols + j] / total;
        }
    double mi = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double p = joint[i * cols + j] / total;
            if (p > 0.0)
                mi += p * std::log2(p / (pr[i] * pc[j]));
        }
    return std::max(mi, 0.0);
}

double mutual_information_bits(std::span<const Categorical> posteriors)
{
    if (posteriors.empty())
        throw DomainError("mutual information of an empty batch");
    const std::size_t m = posteriors.front().size();
    nn::Tensor joint({m, posteriors.size()});
    for (std::size_t t = 0; t < posteriors.size(); ++t) {
        if (posteriors[t].size() != m)
            throw DomainError("posteriors have different support sizes");
        for (std::size_t i = 0; i < m; ++i)
            joint[i * posteriors.size() + t] = posteriors[t][i];
    }
    return mutual_information_bits(joint);
}

Categorical update_marginal_prior(const Categorical& prior, std::span<const Categorical> posteriors,
                                  double rate)
{
    if (!(rate > 0.0 && rate <= 1.0))
        throw DomainError("prior update rate must lie in (0, 1]");
    if (posteriors.empty())
        return prior;
    const std::size_t m = prior.size();
    std::vector<double> mean(m, 0.0);
    for (const auto& p : posteriors) {
        if (p.size() != m)
            throw DomainError("posterior support does not match the prior");
        for (std::size_t i = 0; i < m; ++i)
            mean[i] += p[i];
    }
    std::vector<double> out(m);
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = (1.0 - rate) * prior[i] + rate * mean[i] / static_cast<double>(posteriors.size());
        s += out[i];
    }
    for (auto& v : out)
        v /= s;
    return Categorical(std::move(out));
}

} // namespace hexpert::br
