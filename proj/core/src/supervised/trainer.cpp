#include <hexpert/supervised/trainer.hpp>

#include <hexpert/br/information.hpp>
#include <hexpert/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hexpert::supervised {

namespace {

enum Stream : std::uint64_t { kTask = 1, kSelect = 2, kExpertNoise = 3, kAutoencoder = 4, kDropout = 5, kAdapt = 6 };

double metric_of(const ExpertScore& s, TaskKind kind)
{
    return kind == TaskKind::Regression ? s.mse : s.accuracy;
}

} // namespace

tasks::SupervisedEpisode SinusoidSource::sample(Rng& rng) const
{
    const auto task = tasks::sample_sinusoid(rng);
    return tasks::build_sinusoid_episode(task, k_, rng);
}

GlyphSource::GlyphSource(const tasks::GlyphDataset& data, std::size_t k, tasks::ClassPool pool)
    : data_(&data), k_(k), pool_(pool), classes_(data.classes_in(pool))
{
    if (classes_.empty())
        throw EpisodeError("glyph source: no classes in the requested pool");
}

tasks::SupervisedEpisode GlyphSource::sample(Rng& rng) const
{
    std::uniform_int_distribution<std::size_t> pick(0, classes_.size() - 1);
    tasks::FewShotEpisodeSpec spec{classes_[pick(rng)], k_, pool_};
    return tasks::build_episode(*data_, spec, rng);
}

std::vector<BatchMetrics> meta_train(HierarchicalModel& model, const TaskSource& source,
                                     const TrainConfig& config, std::uint64_t seed,
                                     const BatchCallback& on_batch)
{
    if (config.meta_batch == 0)
        throw ContractViolation("meta_train: meta batch must be positive");
    const TaskKind kind = model.spec.kind;
    const std::size_t n_experts = model.experts.size();
    std::vector<BatchMetrics> history;
    history.reserve(config.batches);

    for (std::size_t b = 0; b < config.batches; ++b) {
        BatchMetrics row;
        row.batch = b;
        std::vector<tasks::SupervisedEpisode> episodes;
        std::vector<std::vector<double>> z;
        std::vector<br::Categorical> posteriors;
        std::vector<std::size_t> chosen;
        std::vector<SelectorSample> samples;

        for (std::size_t i = 0; i < config.meta_batch; ++i) {
            Rng task_rng = stream_rng(seed, {kTask, b, i});
            episodes.push_back(source.sample(task_rng));
            z.push_back(embed_task(model, episodes.back()));
            Rng select_rng = stream_rng(seed, {kSelect, b, i});
            const Selection sel = select_expert(model.selector, z.back(), SelectMode::Sample, select_rng);
            posteriors.push_back(sel.posterior);
            chosen.push_back(sel.expert);

            if (config.selector_gradient == SelectorGradient::Enumerate) {
                for (std::size_t m = 0; m < n_experts; ++m) {
                    const ExpertScore s = score_expert(model.experts[m], episodes.back().val);
                    samples.push_back({z.back(), m, s.free_energy, sel.posterior[m]});
                    if (m == sel.expert) {
                        row.utility += s.free_energy;
                        row.metric += metric_of(s, kind);
                        row.expert_kl += s.kl;
                    }
                }
            } else {
                const ExpertScore s = score_expert(model.experts[sel.expert], episodes.back().val);
                samples.push_back({z.back(), sel.expert, s.free_energy, 1.0});
                row.utility += s.free_energy;
                row.metric += metric_of(s, kind);
                row.expert_kl += s.kl;
            }
        }
        const double inv = 1.0 / static_cast<double>(config.meta_batch);
        row.utility *= inv;
        row.metric *= inv;
        row.expert_kl *= inv;
        row.mi_bits = br::mutual_information_bits(posteriors);

        Rng dropout_rng = stream_rng(seed, {kDropout, b});
        const auto sel_stats = update_selector(model.selector, samples,
                                               model.spec.selector_dropout > 0.0 ? &dropout_rng : nullptr);
        row.selector_entropy = sel_stats.mean_entropy;
        row.selector_kl = sel_stats.mean_kl;

        if (kind == TaskKind::Classification) {
            const std::size_t per = model.spec.side * model.spec.side;
            std::vector<const double*> positives;
            for (const auto& ep : episodes)
                for (std::size_t i = 0; i < ep.train.size(); ++i)
                    if (ep.train.targets[i] > 0.5)
                        positives.push_back(ep.train.inputs.data() + i * per);
            Rng ae_rng = stream_rng(seed, {kAutoencoder, b});
            std::shuffle(positives.begin(), positives.end(), ae_rng);
            if (config.ae_batch > 0 && positives.size() > config.ae_batch)
                positives.resize(config.ae_batch);
            std::vector<double> pixels;
            pixels.reserve(positives.size() * per);
            for (const double* p : positives)
                pixels.insert(pixels.end(), p, p + per);
            nn::Tensor images({positives.size(), model.spec.side, model.spec.side, 1}, std::move(pixels));
            row.ae_loss = embed::train_autoencoder_step(model.autoencoder, images, model.ae_adam);
        }

        for (std::size_t m = 0; m < n_experts; ++m) {
            std::vector<const tasks::LabeledSet*> assigned;
            for (std::size_t i = 0; i < episodes.size(); ++i)
                if (chosen[i] == m)
                    assigned.push_back(&episodes[i].train);
            if (assigned.empty())
                continue;
            const tasks::LabeledSet data = concat_sets(assigned);
            for (std::size_t step = 0; step < config.expert_steps; ++step) {
                Rng noise = stream_rng(seed, {kExpertNoise, b, m, step});
                update_expert(model.experts[m], data, noise);
            }
        }

        history.push_back(row);
        if (on_batch)
            on_batch(row);
    }
    return history;
}

EpisodeEval adapt_and_evaluate(const HierarchicalModel& model, const tasks::SupervisedEpisode& episode,
                               std::size_t n_steps, double lr, std::uint64_t seed)
{
    EpisodeEval out;
    const auto z = embed_task(model, episode);
    Rng unused(0);
    const Selection sel = select_expert(model.selector, z, SelectMode::Argmax, unused);
    out.expert = sel.expert;
    out.posterior = sel.posterior;

    Expert expert = model.experts[sel.expert];
    expert.adam = nn::AdamState(nn::AdamConfig{lr});
    for (std::size_t step = 0; step < n_steps; ++step) {
        Rng noise = stream_rng(seed, {kAdapt, step});
        update_expert(expert, episode.train, noise, false);
    }
    const ExpertScore s = score_expert(expert, episode.val);
    out.metric = metric_of(s, model.spec.kind);
    out.free_energy = s.free_energy;
    return out;
}

EvalSummary evaluate_model(const HierarchicalModel& model, const TaskSource& source, std::size_t episodes,
                           std::size_t n_steps, double lr, std::uint64_t seed)
{
    if (episodes == 0)
        throw ContractViolation("evaluate_model: no episodes requested");
    EvalSummary summary;
    summary.episodes = episodes;
    summary.expert_counts.assign(model.experts.size(), 0);
    std::vector<br::Categorical> posteriors;
    for (std::size_t i = 0; i < episodes; ++i) {
        Rng task_rng = stream_rng(seed, {kTask, i});
        const auto episode = source.sample(task_rng);
        auto e = adapt_and_evaluate(model, episode, n_steps, lr, mix_seed(seed ^ (i + 1)));
        summary.metric_mean += e.metric;
        summary.expert_counts[e.expert] += 1;
        posteriors.push_back(e.posterior);
        summary.details.push_back(std::move(e));
    }
    summary.metric_mean /= static_cast<double>(episodes);
    double var = 0.0;
    for (const auto& d : summary.details)
        var += (d.metric - summary.metric_mean) * (d.metric - summary.metric_mean);
    summary.metric_std = episodes > 1 ? std::sqrt(var / static_cast<double>(episodes - 1)) : 0.0;
    summary.mi_bits = br::mutual_information_bits(posteriors);
    return summary;
}

} // namespace hexpert::supervised
