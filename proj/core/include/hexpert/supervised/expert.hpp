#pragma once

#include <hexpert/br/distributions.hpp>
#include <hexpert/nn/adam.hpp>
#include <hexpert/nn/layers.hpp>
#include <hexpert/tasks/episodes.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hexpert::supervised {

enum class TaskKind { Regression, Classification };

struct ExpertSpec {
    TaskKind kind = TaskKind::Regression;
    /// Regression hidden width.
    std::size_t hidden = 40;
    /// Classification: image side and convolution filters.
    std::size_t side = 28;
    std::size_t filters = 32;
    double huber_delta = 1.0;
};

/// Expert m with posterior p(y|x,m) and output prior p(y|m).
///  Regression: x -> (mean, log std) of a Gaussian; prior N(mean_prior, 1).
///  Classification: image -> 2 logits; prior is a Categorical.
struct Expert {
    Expert() = default;
    Expert(std::size_t id, const ExpertSpec& spec, double beta2, double prior_rate, nn::AdamConfig adam,
           Rng& rng);

    /// inputs [n,1] or [n,side,side,1] -> [n,2].
    nn::Var outputs(nn::Var inputs) const;

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

    std::size_t id = 0;
    ExpertSpec spec;
    std::vector<nn::LayerParams> layers;
    double beta2 = 1.0;
    double prior_rate = 0.01;
    br::Categorical class_prior = br::Categorical::uniform(2);
    double mean_prior = 0.0;
    nn::AdamState adam;
};

struct ExpertScore {
    double free_energy = 0.0;
    double loss = 0.0;     // mean cross-entropy, or mean Huber at the predictive mean
    double kl = 0.0;       // mean KL(posterior || prior), nats
    double mse = 0.0;      // regression: squared error of the predictive mean
    double accuracy = 0.0; // classification
};

/// Mean over `data` of -loss - (1/beta2) KL(posterior || prior).
ExpertScore score_expert(const Expert& expert, const tasks::LabeledSet& data);
double expert_free_energy(const Expert& expert, const tasks::LabeledSet& data);

/// Training objective mean loss + (1/beta2) mean KL. Regression draws the
/// prediction by reparameterisation with noise from `rng`. Optionally
/// reports the mean KL and the raw network outputs.
nn::Var expert_objective(const Expert& expert, nn::Tape& tape, const tasks::LabeledSet& data, Rng& rng,
                         double* mean_kl = nullptr, nn::Tensor* raw_outputs = nullptr);

struct ExpertUpdateStats {
    double objective = 0.0;
    double kl = 0.0;
};

/// One Adam step on expert_objective, then the output prior moves toward the
/// pre-step mean prediction on the batch (unless update_prior is false).
ExpertUpdateStats update_expert(Expert& expert, const tasks::LabeledSet& data, Rng& rng,
                                bool update_prior = true);

/// Rows of several sets stacked in order.
tasks::LabeledSet concat_sets(std::span<const tasks::LabeledSet* const> sets);

} // namespace hexpert::supervised
