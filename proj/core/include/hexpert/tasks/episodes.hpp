#pragma once

#include <hexpert/nn/tensor.hpp>
#include <hexpert/random.hpp>
#include <hexpert/tasks/glyphs.hpp>
#include <hexpert/tasks/sinusoid.hpp>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hexpert::tasks {

/// Inputs with scalar targets. Regression: inputs [n,1], targets y.
/// Classification: inputs [n,side,side,1], targets 1 (positive) or 0.
struct LabeledSet {
    nn::Tensor inputs;
    std::vector<double> targets;
    /// Dataset image indices (classification only); identifies samples.
    std::vector<std::size_t> sample_ids;

    std::size_t size() const noexcept { return targets.size(); }
};

/// One meta-learning unit: the selector sees `train`, experts are scored on
/// `val`.
struct SupervisedEpisode {
    LabeledSet train;
    LabeledSet val;
    /// Regression task parameters (regression episodes only).
    SinusoidTask sinusoid;
    /// Target class (classification episodes only).
    std::uint32_t target_class = 0;
    std::vector<Point> train_points;
};

struct FewShotEpisodeSpec {
    std::uint32_t target_class = 0;
    std::size_t k = 5;
    ClassPool pool = ClassPool::Train;
};

/// K positives and K negatives for training plus 2K fresh samples (K of each)
/// for validation. Negatives come from other classes of the same pool.
/// EpisodeError when the target class has fewer than 2K samples or the pool
/// lacks 2K negatives.
SupervisedEpisode build_episode(const GlyphDataset& data, const FewShotEpisodeSpec& spec, Rng& rng);

/// K training points and 2K validation points from one sinusoid.
SupervisedEpisode build_sinusoid_episode(const SinusoidTask& task, std::size_t k, Rng& rng);

/// Stacks images into an [n,side,side,1] tensor.
nn::Tensor stack_images(const GlyphDataset& data, const std::vector<std::size_t>& ids);

} // namespace hexpert::tasks
