#include <hexpert/rl/actor_critic.hpp>

#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>

#include <cmath>
#include <numbers>

namespace hexpert::rl {

namespace {

std::vector<nn::LayerParams> mlp(const std::string& name, std::size_t in, const std::vector<std::size_t>& hidden,
                                 std::size_t out, Rng& rng)
{
    std::vector<nn::LayerParams> layers;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        layers.push_back(nn::LayerParams::dense(name + ".h" + std::to_string(i), in, hidden[i],
                                                nn::Activation::Relu, rng));
        in = hidden[i];
    }
    layers.push_back(nn::LayerParams::dense(name + ".out", in, out, nn::Activation::Identity, rng));
    return layers;
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double gaussian_log_pdf(double x, double mean, double log_std)
{
    const double z = (x - mean) * std::exp(-log_std);
    return -0.5 * z * z - log_std - kHalfLog2Pi;
}

} // namespace

ExpertAC::ExpertAC(std::size_t id_, const PolicySpec& spec_, double beta2_, double prior_rate_,
                   nn::AdamConfig actor_config, nn::AdamConfig critic_config, Rng& rng)
    : id(id_), spec(spec_), beta2(beta2_), prior_rate(prior_rate_), actor_adam(actor_config),
      critic_adam(critic_config)
{
    if (!(beta2 > 0.0))
        throw DomainError("beta2 must be positive");
    if (!(spec.log_std_max > spec.log_std_min))
        throw ContractViolation("log-std bounds are empty");
    const std::string name = "expert" + std::to_string(id);
    actor = mlp(name + ".actor", spec.state_dim, spec.hidden, 2, rng);
    critic = mlp(name + ".critic", spec.state_dim, spec.hidden, 1, rng);
}

ExpertAC::PolicyVars ExpertAC::policy(nn::Var states) const
{
    nn::Var out = nn::forward(actor, states);
    // log std = lo + (hi - lo) * sigmoid(raw + shift), with the shift putting
    // raw = 0 at log std = 0.
    const double lo = spec.log_std_min, hi = spec.log_std_max;
    const double shift = lo < 0.0 && hi > 0.0 ? std::log(-lo / hi) : 0.0;
    nn::Var raw = nn::add_scalar(nn::slice_cols(out, 1, 2), shift);
    nn::Var log_std = nn::add_scalar(nn::scale(nn::sigmoid(raw), hi - lo), lo);
    return {nn::slice_cols(out, 0, 1), log_std};
}

nn::Var ExpertAC::value(nn::Var states) const
{
    return nn::scale(nn::forward(critic, states), spec.value_scale);
}

ActionSample ExpertAC::act(const State& state, double noise) const
{
    nn::Tape tape;
    auto p = policy(tape.constant(nn::Tensor({1, state.size()}, state)));
    ActionSample a;
    a.mean = p.mean.item();
    a.log_std = p.log_std.item();
    a.pre_squash = a.mean + std::exp(a.log_std) * noise;
    a.action = std::tanh(a.pre_squash);
    a.log_prob = gaussian_log_pdf(a.pre_squash, a.mean, a.log_std);
    return a;
}

std::vector<double> ExpertAC::values(const nn::Tensor& states) const
{
    nn::Tape tape;
    const nn::Tensor& v = value(tape.constant(states)).value();
    return {v.values().begin(), v.values().end()};
}

double ExpertAC::log_ratio(const ActionSample& a) const
{
    return a.log_prob - gaussian_log_pdf(a.pre_squash, prior.mean()[0], prior.log_std()[0]);
}

std::vector<nn::Parameter*> ExpertAC::parameters()
{
    auto out = nn::parameters_of(std::span<nn::LayerParams>(actor));
    auto c = nn::parameters_of(std::span<nn::LayerParams>(critic));
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

std::vector<const nn::Parameter*> ExpertAC::parameters() const
{
    auto out = nn::parameters_of(std::span<const nn::LayerParams>(actor));
    auto c = nn::parameters_of(std::span<const nn::LayerParams>(critic));
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

std::vector<double> step_tuple(const State& state, double action, double reward, std::size_t t,
                               std::size_t horizon)
{
    std::vector<double> out(state.begin(), state.end());
    out.push_back(action);
    out.push_back(reward);
    out.push_back(static_cast<double>(t) / static_cast<double>(horizon));
    return out;
}

SelectorAC::SelectorAC(std::size_t experts, std::size_t tuple_dim, std::size_t hidden, double beta1_,
                       double prior_rate_, double value_scale_, nn::AdamConfig actor_config,
                       nn::AdamConfig critic_config, Rng& rng)
    : actor(tuple_dim, hidden, experts, rng, "selector.actor"),
      critic(tuple_dim, hidden, 1, rng, "selector.critic"), prior(br::Categorical::uniform(experts)),
      beta1(beta1_), prior_rate(prior_rate_), value_scale(value_scale_), actor_adam(actor_config),
      critic_adam(critic_config)
{
    if (!(beta1 > 0.0))
        throw DomainError("beta1 must be positive");
}

br::Categorical SelectorAC::posterior(const nn::Tensor& prefix) const
{
    if (prefix.empty() || prefix.dim(0) == 0)
        return prior;
    nn::Tape tape;
    return br::Categorical::from_logits(embed::embed_trajectory(actor, tape, prefix).value().values());
}

double SelectorAC::value(const nn::Tensor& prefix) const
{
    if (prefix.empty() || prefix.dim(0) == 0)
        return 0.0;
    nn::Tape tape;
    return embed::embed_trajectory(critic, tape, prefix).item() * value_scale;
}

std::vector<nn::Parameter*> SelectorAC::parameters()
{
    auto out = actor.parameters();
    auto c = critic.parameters();
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

std::vector<const nn::Parameter*> SelectorAC::parameters() const
{
    auto out = actor.parameters();
    auto c = critic.parameters();
    out.insert(out.end(), c.begin(), c.end());
    return out;
}

} // namespace hexpert::rl
