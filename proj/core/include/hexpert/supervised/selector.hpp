#pragma once

#include <hexpert/br/distributions.hpp>
#include <hexpert/nn/adam.hpp>
#include <hexpert/nn/layers.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hexpert::supervised {

struct SelectorSpec {
    std::size_t input_dim = 10;
    std::size_t experts = 4;
    std::vector<std::size_t> hidden{16, 16};
    nn::Activation activation = nn::Activation::Tanh;
    /// Dropout after each hidden layer during updates; 0 disables it.
    double dropout = 0.0;
};

/// Selection policy p(m|z) with its marginal prior p(m).
struct Selector {
    Selector() = default;
    Selector(const SelectorSpec& spec, double beta1, double prior_rate, nn::AdamConfig adam, Rng& rng,
             const std::string& name = "selector");

    /// z [n, input_dim] -> logits [n, experts].
    nn::Var logits(nn::Var z, Rng* dropout_rng = nullptr) const;
    br::Categorical posterior(std::span<const double> z) const;

    std::size_t experts() const { return layers.back().output_size(); }
    std::size_t input_dim() const { return layers.front().input_size(); }

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

    std::vector<nn::LayerParams> layers;
    br::Categorical prior;
    double beta1 = 1.0;
    double prior_rate = 0.01;
    nn::AdamState adam;
};

enum class SelectMode { Sample, Argmax };

struct Selection {
    std::size_t expert = 0;
    double log_prob = 0.0;
    br::Categorical posterior;
};

Selection select_expert(const Selector& selector, std::span<const double> z, SelectMode mode, Rng& rng);

/// One scored (task, expert) pair. `weight` scales the entry's share of the
/// batch gradient: 1 for sampled experts, p(m|z) when every expert of a task
/// is scored.
struct SelectorSample {
    std::vector<double> z;
    std::size_t expert = 0;
    double utility = 0.0;
    double weight = 1.0;
};

struct SelectorUpdateStats {
    double mean_kl = 0.0;      // KL(p(m|z) || p(m)), nats, before the step
    double mean_entropy = 0.0; // nats
};

/// One Adam step on the score-function estimate of
///   E_p(m|z)[ f - (1/beta1) log p(m|z)/p(m) ]
/// with the weighted batch mean of f as baseline; then the prior moves toward
/// the batch posteriors. ContractViolation on an empty batch.
SelectorUpdateStats update_selector(Selector& selector, std::span<const SelectorSample> batch,
                                    Rng* dropout_rng = nullptr);

} // namespace hexpert::supervised
