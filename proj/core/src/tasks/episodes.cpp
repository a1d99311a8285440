#include <hexpert/tasks/episodes.hpp>

#include <hexpert/errors.hpp>

#include <algorithm>

namespace hexpert::tasks {

namespace {

LabeledSet make_set(const GlyphDataset& data, const std::vector<std::size_t>& pos,
                    const std::vector<std::size_t>& neg)
{
    LabeledSet set;
    set.sample_ids = pos;
    set.sample_ids.insert(set.sample_ids.end(), neg.begin(), neg.end());
    set.targets.assign(pos.size(), 1.0);
    set.targets.insert(set.targets.end(), neg.size(), 0.0);
    set.inputs = stack_images(data, set.sample_ids);
    return set;
}

LabeledSet make_regression_set(const std::vector<Point>& pts)
{
    LabeledSet set;
    set.inputs = nn::Tensor({pts.size(), 1});
    for (std::size_t i = 0; i < pts.size(); ++i) {
        set.inputs[i] = pts[i].x;
        set.targets.push_back(pts[i].y);
    }
    return set;
}

} // namespace

nn::Tensor stack_images(const GlyphDataset& data, const std::vector<std::size_t>& ids)
{
    const std::size_t px = data.pixels_per_image();
    nn::Tensor t({ids.size(), data.side, data.side, 1});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto img = data.image(ids[i]);
        std::copy(img.begin(), img.end(), t.data() + i * px);
    }
    return t;
}

SupervisedEpisode build_episode(const GlyphDataset& data, const FewShotEpisodeSpec& spec, Rng& rng)
{
    if (spec.k == 0)
        throw EpisodeError("episode needs k >= 1");
    if (spec.target_class >= data.num_classes() || data.class_pool[spec.target_class] != spec.pool)
        throw EpisodeError("target class " + std::to_string(spec.target_class) +
                           " is not in the requested pool");

    std::vector<std::size_t> positives = data.samples_of(spec.target_class);
    if (positives.size() < 2 * spec.k)
        throw EpisodeError("class " + std::to_string(spec.target_class) + " has " +
                           std::to_string(positives.size()) + " samples, need " +
                           std::to_string(2 * spec.k));

    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto cls = data.labels[i];
        if (cls != spec.target_class && data.class_pool[cls] == spec.pool)
            negatives.push_back(i);
    }
    if (negatives.size() < 2 * spec.k)
        throw EpisodeError("pool has only " + std::to_string(negatives.size()) +
                           " negative samples, need " + std::to_string(2 * spec.k));

    // Partial Fisher-Yates: the first 2K entries become a uniform sample
    // without replacement.
    auto draw = [&rng](std::vector<std::size_t>& v, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
            std::swap(v[i], v[pick(rng)]);
        }
    };
    draw(positives, 2 * spec.k);
    draw(negatives, 2 * spec.k);

    const auto k = static_cast<std::ptrdiff_t>(spec.k);
    std::vector<std::size_t> train_pos(positives.begin(), positives.begin() + k);
    std::vector<std::size_t> val_pos(positives.begin() + k, positives.begin() + 2 * k);
    std::vector<std::size_t> train_neg(negatives.begin(), negatives.begin() + k);
    std::vector<std::size_t> val_neg(negatives.begin() + k, negatives.begin() + 2 * k);

    SupervisedEpisode ep;
    ep.target_class = spec.target_class;
    ep.train = make_set(data, train_pos, train_neg);
    ep.val = make_set(data, val_pos, val_neg);
    return ep;
}

SupervisedEpisode build_sinusoid_episode(const SinusoidTask& task, std::size_t k, Rng& rng)
{
    SupervisedEpisode ep;
    ep.sinusoid = task;
    ep.train_points = sample_points(task, k, rng);
    ep.train = make_regression_set(ep.train_points);
    ep.val = make_regression_set(sample_points(task, 2 * k, rng));
    return ep;
}

} // namespace hexpert::tasks
