#include <hexpert/supervised/selector.hpp>

#include <hexpert/br/information.hpp>
#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>

#include <cmath>

namespace hexpert::supervised {

Selector::Selector(const SelectorSpec& spec, double beta1_, double prior_rate_, nn::AdamConfig adam_config,
                   Rng& rng, const std::string& name)
    : prior(br::Categorical::uniform(spec.experts)), beta1(beta1_), prior_rate(prior_rate_),
      adam(adam_config)
{
    if (spec.experts == 0)
        throw ContractViolation("selector needs at least one expert");
    if (!(beta1 > 0.0))
        throw DomainError("beta1 must be positive");
    std::size_t in = spec.input_dim;
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        auto layer = nn::LayerParams::dense(name + ".h" + std::to_string(i), in, spec.hidden[i],
                                            spec.activation, rng);
        layer.dropout = spec.dropout;
        layers.push_back(std::move(layer));
        in = spec.hidden[i];
    }
    layers.push_back(nn::LayerParams::dense(name + ".out", in, spec.experts, nn::Activation::Identity, rng));
}

nn::Var Selector::logits(nn::Var z, Rng* dropout_rng) const
{
    return nn::forward(layers, z, nn::ForwardOptions{dropout_rng});
}

br::Categorical Selector::posterior(std::span<const double> z) const
{
    nn::Tape tape;
    nn::Var l = logits(tape.constant(nn::Tensor({1, z.size()}, std::vector<double>(z.begin(), z.end()))));
    return br::Categorical::from_logits(l.value().values());
}

std::vector<nn::Parameter*> Selector::parameters()
{
    return nn::parameters_of(std::span<nn::LayerParams>(layers));
}

std::vector<const nn::Parameter*> Selector::parameters() const
{
    return nn::parameters_of(std::span<const nn::LayerParams>(layers));
}

Selection select_expert(const Selector& selector, std::span<const double> z, SelectMode mode, Rng& rng)
{
    for (double v : z)
        if (!std::isfinite(v))
            throw DomainError("select_expert: task embedding is not finite");
    Selection s;
    s.posterior = selector.posterior(z);
    if (mode == SelectMode::Argmax) {
        s.expert = s.posterior.argmax();
    } else {
        const auto p = s.posterior.probs();
        s.expert = std::discrete_distribution<std::size_t>(p.begin(), p.end())(rng);
    }
    s.log_prob = std::log(s.posterior[s.expert]);
    return s;
}

SelectorUpdateStats update_selector(Selector& selector, std::span<const SelectorSample> batch,
                                    Rng* dropout_rng)
{
    if (batch.empty())
        throw ContractViolation("update_selector: empty batch");
    const std::size_t n = batch.size(), d = selector.input_dim(), m = selector.experts();

    nn::Tensor z({n, d});
    double weight_sum = 0.0, baseline = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (batch[i].z.size() != d)
            throw DimensionError("update_selector: embedding size mismatch");
        if (batch[i].expert >= m)
            throw ContractViolation("update_selector: expert index out of range");
        std::copy(batch[i].z.begin(), batch[i].z.end(), z.data() + i * d);
        weight_sum += batch[i].weight;
        baseline += batch[i].weight * batch[i].utility;
    }
    if (!(weight_sum > 0.0))
        throw ContractViolation("update_selector: batch weights sum to zero");
    baseline /= weight_sum;

    nn::Tape tape;
    nn::Var log_probs = nn::log_softmax_rows(selector.logits(tape.constant(std::move(z)), dropout_rng));
    const nn::Tensor& lp = log_probs.value();

    std::vector<std::size_t> chosen(n);
    nn::Tensor advantage({n});
    std::vector<br::Categorical> posteriors;
    posteriors.reserve(n);
    SelectorUpdateStats stats;
    for (std::size_t i = 0; i < n; ++i) {
        chosen[i] = batch[i].expert;
        const double log_ratio = lp[i * m + chosen[i]] - std::log(selector.prior[chosen[i]]);
        advantage[i] = -(batch[i].weight / weight_sum) *
                       (batch[i].utility - baseline - log_ratio / selector.beta1);
        posteriors.emplace_back(br::Categorical::from_logits(std::span<const double>(lp.data() + i * m, m)));
        stats.mean_entropy += posteriors.back().entropy_nats();
        stats.mean_kl += br::kl(posteriors.back(), selector.prior);
    }
    stats.mean_entropy /= static_cast<double>(n);
    stats.mean_kl /= static_cast<double>(n);

    nn::Var loss = nn::sum(nn::pick(log_probs, chosen) * tape.constant(std::move(advantage)));
    auto grads = tape.backward(loss);
    auto params = selector.parameters();
    nn::adam_step(params, grads, selector.adam);
    selector.prior = br::update_marginal_prior(selector.prior, posteriors, selector.prior_rate);
    return stats;
}

} // namespace hexpert::supervised
