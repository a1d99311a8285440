#include <hexpert/supervised/model.hpp>

#include <hexpert/embed/regression_embedding.hpp>
#include <hexpert/errors.hpp>
#include <hexpert/nn/checkpoint.hpp>

#include <map>

namespace hexpert::supervised {

namespace {

SelectorSpec selector_spec(const ModelSpec& spec)
{
    SelectorSpec s;
    s.input_dim = embedding_dim(spec);
    s.experts = spec.experts;
    s.dropout = spec.selector_dropout;
    if (spec.kind == TaskKind::Regression) {
        s.hidden = spec.selector_hidden.empty() ? std::vector<std::size_t>{16, 16} : spec.selector_hidden;
        s.activation = nn::Activation::Tanh;
    } else {
        s.hidden = spec.selector_hidden.empty() ? std::vector<std::size_t>{32, 32} : spec.selector_hidden;
        s.activation = nn::Activation::Relu;
    }
    return s;
}

ExpertSpec expert_spec(const ModelSpec& spec)
{
    ExpertSpec e;
    e.kind = spec.kind;
    e.hidden = spec.expert_hidden;
    e.side = spec.side;
    e.filters = spec.expert_filters;
    return e;
}

embed::AutoencoderConfig ae_config(const ModelSpec& spec)
{
    return {spec.side, spec.ae_channels};
}

nn::Parameter scalar_param(const std::string& name, double v)
{
    return {name, nn::Tensor::vector({v})};
}

nn::Parameter list_param(const std::string& name, std::span<const double> values)
{
    return {name, nn::Tensor({values.size()}, std::vector<double>(values.begin(), values.end()))};
}

} // namespace

std::size_t embedding_dim(const ModelSpec& spec)
{
    if (spec.kind == TaskKind::Regression)
        return spec.n_bins;
    std::size_t s = spec.side;
    for (std::size_t i = 0; i < spec.ae_channels.size(); ++i)
        s = (s - 3) / 2 + 1;
    return s * s * spec.ae_channels.back();
}

std::vector<nn::Parameter*> HierarchicalModel::parameters()
{
    auto out = selector.parameters();
    for (auto& e : experts) {
        auto p = e.parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    if (spec.kind == TaskKind::Classification) {
        auto p = autoencoder.parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

std::vector<const nn::Parameter*> HierarchicalModel::parameters() const
{
    auto out = selector.parameters();
    for (const auto& e : experts) {
        auto p = e.parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    if (spec.kind == TaskKind::Classification) {
        auto p = autoencoder.parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

HierarchicalModel make_model(const ModelSpec& spec, Rng& rng)
{
    if (spec.experts == 0)
        throw ContractViolation("model needs at least one expert");
    HierarchicalModel m;
    m.spec = spec;
    if (spec.kind == TaskKind::Classification) {
        m.autoencoder = embed::ConvAutoencoder(ae_config(spec), rng);
        m.ae_adam = nn::AdamState(spec.ae_adam);
    }
    m.selector = Selector(selector_spec(spec), spec.beta1, spec.prior_rate, spec.selector_adam, rng);
    for (std::size_t i = 0; i < spec.experts; ++i)
        m.experts.emplace_back(i, expert_spec(spec), spec.beta2, spec.prior_rate, spec.expert_adam, rng);
    return m;
}

std::vector<double> embed_task(const HierarchicalModel& model, const tasks::SupervisedEpisode& episode)
{
    if (model.spec.kind == TaskKind::Regression)
        return embed::embed_regression(episode.train_points, model.spec.n_bins).bin_values;

    const auto& train = episode.train;
    const std::size_t per = model.spec.side * model.spec.side;
    std::vector<double> pixels;
    std::size_t count = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train.targets[i] < 0.5)
            continue;
        pixels.insert(pixels.end(), train.inputs.data() + i * per, train.inputs.data() + (i + 1) * per);
        ++count;
    }
    nn::Tensor images({count, model.spec.side, model.spec.side, 1}, std::move(pixels));
    return embed::embed_images(model.autoencoder, images, model.spec.pooling).latent;
}

void save_model(const HierarchicalModel& model, const std::filesystem::path& path)
{
    const ModelSpec& s = model.spec;
    std::vector<nn::Parameter> meta;
    meta.push_back(scalar_param("meta.kind", s.kind == TaskKind::Regression ? 0.0 : 1.0));
    meta.push_back(scalar_param("meta.experts", static_cast<double>(s.experts)));
    meta.push_back(scalar_param("meta.beta1", s.beta1));
    meta.push_back(scalar_param("meta.beta2", s.beta2));
    meta.push_back(scalar_param("meta.prior_rate", s.prior_rate));
    meta.push_back(scalar_param("meta.n_bins", static_cast<double>(s.n_bins)));
    meta.push_back(scalar_param("meta.selector_dropout", s.selector_dropout));
    meta.push_back(scalar_param("meta.expert_hidden", static_cast<double>(s.expert_hidden)));
    meta.push_back(scalar_param("meta.expert_filters", static_cast<double>(s.expert_filters)));
    meta.push_back(scalar_param("meta.side", static_cast<double>(s.side)));
    meta.push_back(scalar_param("meta.pooling", static_cast<double>(s.pooling)));
    const auto hidden = selector_spec(s).hidden;
    meta.push_back(list_param("meta.selector_hidden", std::vector<double>(hidden.begin(), hidden.end())));
    meta.push_back(list_param("meta.ae_channels", std::vector<double>(s.ae_channels.begin(), s.ae_channels.end())));
    meta.push_back(list_param("selector.prior", model.selector.prior.probs()));
    for (const auto& e : model.experts) {
        const std::string name = "expert" + std::to_string(e.id) + ".prior";
        if (s.kind == TaskKind::Regression)
            meta.push_back(scalar_param(name, e.mean_prior));
        else
            meta.push_back(list_param(name, e.class_prior.probs()));
    }

    std::vector<const nn::Parameter*> all;
    for (const auto& p : meta)
        all.push_back(&p);
    for (const auto* p : model.parameters())
        all.push_back(p);
    nn::write_checkpoint(path, all);
}

HierarchicalModel load_model(const std::filesystem::path& path)
{
    std::map<std::string, nn::Tensor> records;
    for (auto& p : nn::read_checkpoint(path))
        records[p.name] = std::move(p.value);
    auto get = [&](const std::string& name) -> const nn::Tensor& {
        auto it = records.find(name);
        if (it == records.end())
            throw CheckpointError("checkpoint " + path.string() + " lacks record '" + name + "'");
        return it->second;
    };
    auto scalar = [&](const std::string& name) { return get(name).item(); };
    auto sizes = [&](const std::string& name) {
        std::vector<std::size_t> out;
        for (double v : get(name).values())
            out.push_back(static_cast<std::size_t>(v));
        return out;
    };

    ModelSpec s;
    s.kind = scalar("meta.kind") == 0.0 ? TaskKind::Regression : TaskKind::Classification;
    s.experts = static_cast<std::size_t>(scalar("meta.experts"));
    s.beta1 = scalar("meta.beta1");
    s.beta2 = scalar("meta.beta2");
    s.prior_rate = scalar("meta.prior_rate");
    s.n_bins = static_cast<std::size_t>(scalar("meta.n_bins"));
    s.selector_dropout = scalar("meta.selector_dropout");
    s.expert_hidden = static_cast<std::size_t>(scalar("meta.expert_hidden"));
    s.expert_filters = static_cast<std::size_t>(scalar("meta.expert_filters"));
    s.side = static_cast<std::size_t>(scalar("meta.side"));
    s.pooling = static_cast<embed::Pooling>(static_cast<int>(scalar("meta.pooling")));
    s.selector_hidden = sizes("meta.selector_hidden");
    s.ae_channels = sizes("meta.ae_channels");

    Rng rng(0);
    HierarchicalModel model = make_model(s, rng);
    for (nn::Parameter* p : model.parameters()) {
        const nn::Tensor& t = get(p->name);
        if (t.shape() != p->value.shape())
            throw CheckpointError("checkpoint record '" + p->name + "' has shape " + nn::to_string(t.shape()) +
                                  ", model expects " + nn::to_string(p->value.shape()));
        p->value = t;
    }
    const auto& prior = get("selector.prior");
    model.selector.prior = br::Categorical(std::vector<double>(prior.values().begin(), prior.values().end()));
    for (auto& e : model.experts) {
        const auto& t = get("expert" + std::to_string(e.id) + ".prior");
        if (s.kind == TaskKind::Regression)
            e.mean_prior = t.item();
        else
            e.class_prior = br::Categorical(std::vector<double>(t.values().begin(), t.values().end()));
    }
    return model;
}

} // namespace hexpert::supervised
