#pragma once

#include <hexpert/embed/autoencoder.hpp>
#include <hexpert/supervised/expert.hpp>
#include <hexpert/supervised/selector.hpp>

#include <cstddef>
#include <filesystem>
#include <vector>

namespace hexpert::supervised {

struct ModelSpec {
    TaskKind kind = TaskKind::Regression;
    std::size_t experts = 4;
    double beta1 = 10.0;
    double beta2 = 10.0;
    double prior_rate = 0.01;
    /// Regression embedding bins over the sinusoid input range.
    std::size_t n_bins = 10;
    /// Empty means the default for the task kind (16-16 tanh, 32-32 relu).
    std::vector<std::size_t> selector_hidden;
    double selector_dropout = 0.0;
    std::size_t expert_hidden = 40;
    std::size_t expert_filters = 32;
    std::size_t side = 28;
    std::vector<std::size_t> ae_channels{16, 16, 4};
    embed::Pooling pooling = embed::Pooling::Max;
    nn::AdamConfig selector_adam{1e-3};
    nn::AdamConfig expert_adam{1e-3};
    nn::AdamConfig ae_adam{1e-3};
};

struct HierarchicalModel {
    ModelSpec spec;
    Selector selector;
    std::vector<Expert> experts;
    /// Classification only.
    embed::ConvAutoencoder autoencoder;
    nn::AdamState ae_adam;

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;
};

HierarchicalModel make_model(const ModelSpec& spec, Rng& rng);

/// z(D_train): binned y means (regression) or pooled autoencoder latents of
/// the positive training samples (classification).
std::vector<double> embed_task(const HierarchicalModel& model, const tasks::SupervisedEpisode& episode);
std::size_t embedding_dim(const ModelSpec& spec);

/// Parameters plus priors and the structural spec, so a checkpoint alone
/// rebuilds the model. Optimiser moments are not stored.
void save_model(const HierarchicalModel& model, const std::filesystem::path& path);
HierarchicalModel load_model(const std::filesystem::path& path);

} // namespace hexpert::supervised
