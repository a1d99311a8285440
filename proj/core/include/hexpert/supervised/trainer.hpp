#pragma once

#include <hexpert/supervised/model.hpp>
#include <hexpert/tasks/episodes.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace hexpert::supervised {

class TaskSource {
public:
    virtual ~TaskSource() = default;
    virtual tasks::SupervisedEpisode sample(Rng& rng) const = 0;
};

class SinusoidSource final : public TaskSource {
public:
    explicit SinusoidSource(std::size_t k) : k_(k) {}
    tasks::SupervisedEpisode sample(Rng& rng) const override;

private:
    std::size_t k_;
};

/// Few-shot binary episodes whose target class is drawn uniformly from one
/// class pool of the dataset.
class GlyphSource final : public TaskSource {
public:
    GlyphSource(const tasks::GlyphDataset& data, std::size_t k, tasks::ClassPool pool);
    tasks::SupervisedEpisode sample(Rng& rng) const override;
    tasks::ClassPool pool() const noexcept { return pool_; }

private:
    const tasks::GlyphDataset* data_;
    std::size_t k_;
    tasks::ClassPool pool_;
    std::vector<std::uint32_t> classes_;
};

enum class SelectorGradient {
    /// Score only the sampled expert of each task.
    Sampled,
    /// Score every expert of each task, weighting entries by p(m|z).
    Enumerate,
};

struct TrainConfig {
    std::size_t batches = 2000;
    std::size_t meta_batch = 16;
    std::size_t expert_steps = 1;
    SelectorGradient selector_gradient = SelectorGradient::Enumerate;
    /// Positive images per autoencoder step (0 = all positives of the batch).
    std::size_t ae_batch = 16;
};

struct BatchMetrics {
    std::size_t batch = 0;
    double utility = 0.0;          // mean free energy of the sampled experts
    double metric = 0.0;           // mean val MSE (regression) or accuracy
    double mi_bits = 0.0;          // I(X;M) over the batch posteriors
    double expert_kl = 0.0;        // nats
    double selector_entropy = 0.0; // nats
    double selector_kl = 0.0;      // nats
    double ae_loss = 0.0;
};

using BatchCallback = std::function<void(const BatchMetrics&)>;

/// Meta-training loop: per batch sample tasks, embed D_train, select experts,
/// score them on D_val, then update selector, autoencoder and experts in that
/// order. Randomness is drawn from streams keyed by (seed, batch, task).
std::vector<BatchMetrics> meta_train(HierarchicalModel& model, const TaskSource& source,
                                     const TrainConfig& config, std::uint64_t seed,
                                     const BatchCallback& on_batch = {});

struct EpisodeEval {
    std::size_t expert = 0;
    br::Categorical posterior;
    /// MSE (regression) or accuracy (classification) on D_val.
    double metric = 0.0;
    double free_energy = 0.0;
};

/// Argmax selection, then n_steps Adam updates (fresh moments, rate lr) of a
/// copy of the chosen expert on D_train; metric on D_val. The model is left
/// untouched.
EpisodeEval adapt_and_evaluate(const HierarchicalModel& model, const tasks::SupervisedEpisode& episode,
                               std::size_t n_steps, double lr, std::uint64_t seed);

struct EvalSummary {
    std::size_t episodes = 0;
    double metric_mean = 0.0;
    double metric_std = 0.0;
    double mi_bits = 0.0;
    std::vector<std::size_t> expert_counts;
    std::vector<EpisodeEval> details;
};

EvalSummary evaluate_model(const HierarchicalModel& model, const TaskSource& source, std::size_t episodes,
                           std::size_t n_steps, double lr, std::uint64_t seed);

} // namespace hexpert::supervised
