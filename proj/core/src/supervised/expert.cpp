#include <hexpert/supervised/expert.hpp>

#include <hexpert/br/information.hpp>
#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>

#include <cmath>

namespace hexpert::supervised {

namespace {

std::vector<std::size_t> class_labels(const tasks::LabeledSet& data)
{
    std::vector<std::size_t> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        labels[i] = data.targets[i] > 0.5 ? 1 : 0;
    return labels;
}

void check_nonempty(const tasks::LabeledSet& data, const char* where)
{
    if (data.size() == 0)
        throw ContractViolation(std::string(where) + ": empty dataset");
}

} // namespace

Expert::Expert(std::size_t id_, const ExpertSpec& spec_, double beta2_, double prior_rate_,
               nn::AdamConfig adam_config, Rng& rng)
    : id(id_), spec(spec_), beta2(beta2_), prior_rate(prior_rate_), adam(adam_config)
{
    if (!(beta2 > 0.0))
        throw DomainError("beta2 must be positive");
    const std::string name = "expert" + std::to_string(id);
    if (spec.kind == TaskKind::Regression) {
        layers.push_back(nn::LayerParams::dense(name + ".h", 1, spec.hidden, nn::Activation::Relu, rng));
        layers.push_back(nn::LayerParams::dense(name + ".out", spec.hidden, 2, nn::Activation::Identity, rng));
    } else {
        const std::size_t s = (spec.side - 3) / 2 + 1;
        layers.push_back(nn::LayerParams::conv3x3(name + ".conv", 1, spec.filters, 2, nn::Activation::Relu, rng));
        layers.push_back(nn::LayerParams::dense(name + ".out", s * s * spec.filters, 2,
                                                nn::Activation::Identity, rng));
    }
}

nn::Var Expert::outputs(nn::Var inputs) const
{
    return nn::forward(layers, inputs);
}

std::vector<nn::Parameter*> Expert::parameters()
{
    return nn::parameters_of(std::span<nn::LayerParams>(layers));
}

std::vector<const nn::Parameter*> Expert::parameters() const
{
    return nn::parameters_of(std::span<const nn::LayerParams>(layers));
}

ExpertScore score_expert(const Expert& expert, const tasks::LabeledSet& data)
{
    check_nonempty(data, "score_expert");
    const std::size_t n = data.size();
    nn::Tape tape;
    nn::Var out = expert.outputs(tape.constant(data.inputs));
    const nn::Tensor& o = out.value();
    ExpertScore s;
    if (expert.spec.kind == TaskKind::Regression) {
        const br::DiagGaussian prior({expert.mean_prior}, {0.0});
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = o[2 * i], log_std = o[2 * i + 1];
            const double e = mu - data.targets[i];
            const double ae = std::abs(e), delta = expert.spec.huber_delta;
            s.loss += ae <= delta ? 0.5 * e * e : delta * (ae - 0.5 * delta);
            s.mse += e * e;
            s.kl += br::kl(br::DiagGaussian({mu}, {log_std}), prior);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = br::Categorical::from_logits(std::span<const double>(o.data() + 2 * i, 2));
            const std::size_t label = data.targets[i] > 0.5 ? 1 : 0;
            s.loss -= std::log(std::max(p[label], 1e-300));
            s.kl += br::kl(p, expert.class_prior);
            s.accuracy += p.argmax() == label ? 1.0 : 0.0;
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    s.loss *= inv;
    s.kl *= inv;
    s.mse *= inv;
    s.accuracy *= inv;
    s.free_energy = -s.loss - s.kl / expert.beta2;
    return s;
}

double expert_free_energy(const Expert& expert, const tasks::LabeledSet& data)
{
    return score_expert(expert, data).free_energy;
}

nn::Var expert_objective(const Expert& expert, nn::Tape& tape, const tasks::LabeledSet& data, Rng& rng,
                         double* mean_kl, nn::Tensor* raw_outputs)
{
    check_nonempty(data, "expert_objective");
    const std::size_t n = data.size();
    nn::Var out = expert.outputs(tape.constant(data.inputs));
    nn::Var loss, kl;
    if (expert.spec.kind == TaskKind::Regression) {
        nn::Var mu = nn::slice_cols(out, 0, 1);
        nn::Var log_std = nn::slice_cols(out, 1, 2);
        nn::Tensor noise({n, 1});
        for (auto& v : noise.values())
            v = standard_normal(rng);
        auto sample = br::sample_reparam(mu, log_std, noise);
        loss = nn::mean(nn::huber(sample.action, nn::Tensor({n, 1}, data.targets), expert.spec.huber_delta));
        kl = nn::mean(br::gaussian_kl_rows(mu, log_std, br::DiagGaussian({expert.mean_prior}, {0.0})));
    } else {
        nn::Var log_probs = nn::log_softmax_rows(out);
        const auto labels = class_labels(data);
        loss = nn::neg(nn::mean(nn::pick(log_probs, labels)));
        kl = nn::mean(br::categorical_kl_rows(log_probs, expert.class_prior));
    }
    if (mean_kl)
        *mean_kl = kl.item();
    if (raw_outputs)
        *raw_outputs = out.value();
    return loss + nn::scale(kl, 1.0 / expert.beta2);
}

ExpertUpdateStats update_expert(Expert& expert, const tasks::LabeledSet& data, Rng& rng, bool update_prior)
{
    ExpertUpdateStats stats;
    nn::Tape tape;
    nn::Tensor o;
    nn::Var objective = expert_objective(expert, tape, data, rng, &stats.kl, &o);
    stats.objective = objective.item();
    if (!std::isfinite(stats.objective))
        throw DivergenceError("expert " + std::to_string(expert.id) + ": objective is not finite");

    auto grads = tape.backward(objective);
    auto params = expert.parameters();
    nn::adam_step(params, grads, expert.adam);

    if (update_prior) {
        const std::size_t n = data.size();
        if (expert.spec.kind == TaskKind::Regression) {
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                mean += o[2 * i];
            mean /= static_cast<double>(n);
            expert.mean_prior = (1.0 - expert.prior_rate) * expert.mean_prior + expert.prior_rate * mean;
        } else {
            std::vector<br::Categorical> post;
            post.reserve(n);
            for (std::size_t i = 0; i < n; ++i)
                post.push_back(br::Categorical::from_logits(std::span<const double>(o.data() + 2 * i, 2)));
            expert.class_prior = br::update_marginal_prior(expert.class_prior, post, expert.prior_rate);
        }
    }
    return stats;
}

tasks::LabeledSet concat_sets(std::span<const tasks::LabeledSet* const> sets)
{
    tasks::LabeledSet out;
    if (sets.empty())
        return out;
    nn::Shape shape = sets.front()->inputs.shape();
    std::size_t rows = 0;
    for (const auto* s : sets)
        rows += s->size();
    shape[0] = rows;
    std::vector<double> values;
    values.reserve(nn::shape_size(shape));
    for (const auto* s : sets) {
        values.insert(values.end(), s->inputs.values().begin(), s->inputs.values().end());
        out.targets.insert(out.targets.end(), s->targets.begin(), s->targets.end());
        out.sample_ids.insert(out.sample_ids.end(), s->sample_ids.begin(), s->sample_ids.end());
    }
    out.inputs = nn::Tensor(std::move(shape), std::move(values));
    return out;
}

} // namespace hexpert::supervised
