#include <hexpert/rl/trainer.hpp>

#include <hexpert/br/information.hpp>
#include <hexpert/errors.hpp>
#include <hexpert/nn/checkpoint.hpp>
#include <hexpert/nn/ops.hpp>
#include <hexpert/rl/bandit.hpp>
#include <hexpert/rl/free_energy.hpp>
#include <hexpert/rl/pendulum.hpp>

#include <cmath>
#include <map>
#include <numeric>

namespace hexpert::rl {

namespace {

enum Stream : std::uint64_t {
    kInit = 10,
    kTrainEnv = 11,
    kTrainSelect = 12,
    kTrainActions = 13,
    kValEnv = 14,
    kValSelect = 15,
    kValActions = 16,
    kEvalEnv = 17,
    kEvalSelect = 18,
    kEvalActions = 19,
};

constexpr std::uint64_t kSelectorInit = 1u << 20;
constexpr double kHalfLogTwoPiE = 1.4189385332046727418;

PolicySpec policy_spec(const RlConfig& c, std::size_t state_dim)
{
    PolicySpec p;
    p.state_dim = state_dim;
    p.hidden = c.expert_hidden;
    p.value_scale = 1.0 / (1.0 - c.gamma);
    return p;
}

void validate(const RlConfig& c)
{
    if (c.experts == 0)
        throw ContractViolation("meta-rl needs at least one expert");
    if (!(c.gamma >= 0.0 && c.gamma < 1.0))
        throw DomainError("gamma must lie in [0, 1)");
    if (!(c.beta1 > 0.0) || !(c.beta2 > 0.0))
        throw DomainError("beta1 and beta2 must be positive");
    if (c.envs_per_update == 0 || c.rollouts_per_env == 0)
        throw ContractViolation("empty rollout batch");
}

double mean_of(std::span<const double> v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void check_finite(double v, const char* what)
{
    if (!std::isfinite(v))
        throw DivergenceError(std::string(what) + " is not finite");
}

void update_action_prior(ExpertAC& e, const nn::Tensor& means, const nn::Tensor& log_stds)
{
    const std::size_t n = means.size();
    double m = 0.0, second = 0.0, var_of_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        m += means.values()[i];
    m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = means.values()[i] - m;
        var_of_mean += d * d;
        second += std::exp(2.0 * log_stds.values()[i]);
    }
    const double var = (second + var_of_mean) / static_cast<double>(n);
    if (!e.prior_initialized) {
        e.prior = br::DiagGaussian({m}, {0.5 * std::log(var)});
        e.prior_initialized = true;
        return;
    }
    const double r = e.prior_rate;
    const double old_mean = e.prior.mean()[0];
    const double old_var = std::exp(2.0 * e.prior.log_std()[0]);
    const double new_mean = (1.0 - r) * old_mean + r * m;
    const double new_var = (1.0 - r) * old_var + r * var;
    e.prior = br::DiagGaussian({new_mean}, {0.5 * std::log(new_var)});
}

/// Sets the prior of every uninitialized expert that acted in the batch to
/// the marginal of its policy over the visited states. True if any changed.
bool initialize_priors(std::span<ExpertAC> experts, std::span<const Trajectory> batch)
{
    bool changed = false;
    for (auto& e : experts) {
        if (e.prior_initialized)
            continue;
        std::vector<double> states;
        for (const auto& traj : batch)
            for (const auto& s : traj.steps)
                if (s.expert == e.id)
                    states.insert(states.end(), s.state.begin(), s.state.end());
        if (states.empty())
            continue;
        const std::size_t n = states.size() / e.spec.state_dim;
        nn::Tape tape;
        auto pol = e.policy(tape.constant(nn::Tensor({n, e.spec.state_dim}, std::move(states))));
        update_action_prior(e, pol.mean.value(), pol.log_std.value());
        changed = true;
    }
    return changed;
}

struct Collected {
    std::vector<Trajectory> trajectories;
    double mean_return = 0.0;
};

template <class RolloutFn>
Collected collect(const EnvSampler& sampler, std::size_t envs, std::size_t per_env, std::uint64_t seed,
                  std::uint64_t update, Stream env_stream, Stream select_stream, Stream action_stream,
                  RolloutFn&& run)
{
    Collected out;
    out.trajectories.reserve(envs * per_env);
    for (std::size_t e = 0; e < envs; ++e) {
        Rng env_rng = stream_rng(seed, {env_stream, update, e});
        auto env = sampler(env_rng);
        for (std::size_t k = 0; k < per_env; ++k) {
            Rng select_rng = stream_rng(seed, {select_stream, update, e, k});
            Rng action_rng = stream_rng(seed, {action_stream, update, e, k});
            out.trajectories.push_back(run(*env, select_rng, action_rng));
            out.mean_return += out.trajectories.back().normalized_return();
        }
    }
    if (!out.trajectories.empty())
        out.mean_return /= static_cast<double>(out.trajectories.size());
    return out;
}

struct CollectedGroups {
    std::vector<BranchedRollout> groups;
    double mean_return = 0.0;
};

CollectedGroups collect_groups(const EnvSampler& sampler, const RlSystem& system, const RolloutOptions& opts,
                               std::size_t envs, std::size_t per_env, std::uint64_t seed, std::uint64_t update)
{
    CollectedGroups out;
    for (std::size_t e = 0; e < envs; ++e) {
        Rng env_rng = stream_rng(seed, {kValEnv, update, e});
        auto env = sampler(env_rng);
        for (std::size_t k = 0; k < per_env; ++k) {
            Rng select_rng = stream_rng(seed, {kValSelect, update, e, k});
            Rng action_rng = stream_rng(seed, {kValActions, update, e, k});
            out.groups.push_back(rollout_branches(*env, system.selector, system.experts, opts, select_rng, action_rng));
            const auto& g = out.groups.back();
            out.mean_return += g.branches[g.chosen].normalized_return();
        }
    }
    if (!out.groups.empty())
        out.mean_return /= static_cast<double>(out.groups.size());
    return out;
}

/// Discounted free energy from the selection step on.
double selection_free_energy(const Trajectory& traj, const ExpertAC& expert, double gamma)
{
    double f = 0.0;
    for (std::size_t t = traj.steps.size(); t-- > traj.selection_step;) {
        const Step& s = traj.steps[t];
        f = s.reward - s.log_ratio / expert.beta2 + gamma * f;
    }
    return f;
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

EnvSampler pendulum_family(const tasks::EnvDistribution& dist, std::size_t horizon)
{
    return [dist, horizon](Rng& rng) -> std::unique_ptr<Environment> {
        return std::make_unique<PendulumEnv>(tasks::sample_env_params(dist, rng), horizon);
    };
}

EnvSampler fixed_environment(std::function<std::unique_ptr<Environment>()> make)
{
    return [make = std::move(make)](Rng&) { return make(); };
}

RlSystem make_rl_system(const RlConfig& config, std::uint64_t seed, std::size_t state_dim)
{
    validate(config);
    RlSystem s;
    s.config = config;
    const PolicySpec spec = policy_spec(config, state_dim);
    for (std::size_t m = 0; m < config.experts; ++m) {
        Rng rng = stream_rng(seed, {kInit, m});
        s.experts.emplace_back(m, spec, config.beta2, config.prior_rate, config.actor_adam, config.critic_adam, rng);
    }
    Rng rng = stream_rng(seed, {kInit, kSelectorInit});
    s.selector = SelectorAC(config.experts, state_dim + 3, config.selector_hidden, config.beta1, config.prior_rate,
                            spec.value_scale, config.selector_actor_adam, config.selector_critic_adam, rng);
    return s;
}

ExpertUpdateStats update_experts(std::span<ExpertAC> experts, std::span<const Trajectory> input, double gamma,
                                 double huber_delta)
{
    ExpertUpdateStats stats;
    std::vector<Trajectory> rescored;
    std::span<const Trajectory> batch = input;
    if (initialize_priors(experts, input)) {
        rescored.assign(input.begin(), input.end());
        for (auto& traj : rescored)
            for (auto& s : traj.steps) {
                ActionSample a;
                a.pre_squash = s.pre_squash;
                a.log_prob = s.log_prob;
                s.log_ratio = experts[s.expert].log_ratio(a);
            }
        batch = rescored;
    }
    std::vector<TrajectoryAdvantages> adv;
    adv.reserve(batch.size());
    for (const auto& traj : batch)
        adv.push_back(expert_advantages(traj, experts, gamma));

    double kl_sum = 0.0, ratio_sum = 0.0, entropy_sum = 0.0, actor_sum = 0.0, critic_sum = 0.0;
    for (auto& expert : experts) {
        std::vector<double> states, actions, a, targets;
        std::size_t dim = expert.spec.state_dim;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const auto& steps = batch[i].steps;
            for (std::size_t t = 0; t < steps.size(); ++t) {
                if (steps[t].expert != expert.id)
                    continue;
                states.insert(states.end(), steps[t].state.begin(), steps[t].state.end());
                actions.push_back(steps[t].pre_squash);
                a.push_back(adv[i].expert[t]);
                targets.push_back(adv[i].free_energy[t]);
                ratio_sum += steps[t].log_ratio;
            }
        }
        const std::size_t n = actions.size();
        if (n == 0)
            continue;
        stats.steps += n;

        nn::Tape tape;
        nn::Var x = tape.constant(nn::Tensor({n, dim}, std::move(states)));
        auto pol = expert.policy(x);
        nn::Var logp = br::gaussian_log_density(pol.mean, pol.log_std, nn::Tensor({n, 1}, std::move(actions)));
        nn::Var actor_loss = nn::neg(nn::mean(nn::mul(logp, tape.constant(nn::Tensor({n}, std::move(a))))));
        nn::Var critic_loss = nn::mean(nn::huber(expert.value(x), nn::Tensor({n, 1}, std::move(targets)), huber_delta));
        nn::Var total = nn::add(actor_loss, critic_loss);
        check_finite(total.item(), "expert loss");
        for (double k : br::gaussian_kl_rows(pol.mean, pol.log_std, expert.prior).value().values())
            kl_sum += k;
        for (double ls : pol.log_std.value().values())
            entropy_sum += ls + kHalfLogTwoPiE;
        actor_sum += actor_loss.item() * static_cast<double>(n);
        critic_sum += critic_loss.item() * static_cast<double>(n);

        const nn::Tensor means = pol.mean.value();
        const nn::Tensor log_stds = pol.log_std.value();
        nn::Gradients grads = tape.backward(total);
        auto actor_params = nn::parameters_of(std::span<nn::LayerParams>(expert.actor));
        auto critic_params = nn::parameters_of(std::span<nn::LayerParams>(expert.critic));
        nn::adam_step(actor_params, grads, expert.actor_adam);
        nn::adam_step(critic_params, grads, expert.critic_adam);
        update_action_prior(expert, means, log_stds);
    }
    if (stats.steps > 0) {
        const double n = static_cast<double>(stats.steps);
        stats.kl = kl_sum / n;
        stats.log_ratio = ratio_sum / n;
        stats.entropy = entropy_sum / n;
        stats.actor_loss = actor_sum / n;
        stats.critic_loss = critic_sum / n;
    }
    return stats;
}

SelectorUpdateStats update_selector(SelectorAC& selector, std::span<const ExpertAC> experts,
                                    std::span<const Trajectory> batch, double gamma, double huber_delta)
{
    SelectorUpdateStats stats;
    std::vector<br::Categorical> posteriors;
    nn::Tape tape;
    std::vector<nn::Var> actor_terms, critic_terms;
    double kl_sum = 0.0, entropy_sum = 0.0;
    for (const auto& traj : batch) {
        posteriors.push_back(traj.selection_posterior);
        if (traj.prefix.empty() || traj.prefix.dim(0) == 0)
            continue;
        const TrajectoryAdvantages adv = advantages(traj, experts, selector, gamma);
        const std::size_t m = traj.expert;
        nn::Var logits = embed::embed_trajectory(selector.actor, tape, traj.prefix);
        nn::Var logp = nn::pick(nn::log_softmax_rows(logits), std::span<const std::size_t>(&m, 1));
        actor_terms.push_back(nn::reshape(nn::scale(logp, -adv.selector), {1, 1}));
        nn::Var v = nn::scale(embed::embed_trajectory(selector.critic, tape, traj.prefix), selector.value_scale);
        critic_terms.push_back(nn::huber(v, nn::Tensor({1, 1}, {adv.selector_target}), huber_delta));
        kl_sum += br::kl(traj.selection_posterior, selector.prior);
        entropy_sum += traj.selection_posterior.entropy_nats();
    }
    stats.selections = actor_terms.size();
    if (stats.selections > 0) {
        const double n = static_cast<double>(stats.selections);
        nn::Var actor_loss = nn::scale(nn::sum(nn::concat_cols(actor_terms)), 1.0 / n);
        std::vector<nn::Var> flat;
        for (auto& c : critic_terms)
            flat.push_back(nn::reshape(c, {1, 1}));
        nn::Var critic_loss = nn::scale(nn::sum(nn::concat_cols(flat)), 1.0 / n);
        nn::Var total = nn::add(actor_loss, critic_loss);
        check_finite(total.item(), "selector loss");
        stats.actor_loss = actor_loss.item();
        stats.critic_loss = critic_loss.item();
        nn::Gradients grads = tape.backward(total);
        auto actor_params = selector.actor.parameters();
        auto critic_params = selector.critic.parameters();
        nn::adam_step(actor_params, grads, selector.actor_adam);
        nn::adam_step(critic_params, grads, selector.critic_adam);
        stats.kl = kl_sum / n;
        stats.entropy = entropy_sum / n;
    }
    if (!posteriors.empty()) {
        stats.mi_bits = selector.experts() > 1 ? br::mutual_information_bits(posteriors) : 0.0;
        selector.prior = br::update_marginal_prior(selector.prior, posteriors, selector.prior_rate);
    }
    return stats;
}

SelectorUpdateStats update_selector(SelectorAC& selector, std::span<const ExpertAC> experts,
                                    std::span<const BranchedRollout> groups, double gamma, double huber_delta)
{
    SelectorUpdateStats stats;
    std::vector<br::Categorical> posteriors;
    nn::Tape tape;
    std::vector<nn::Var> actor_terms, critic_terms;
    double kl_sum = 0.0, entropy_sum = 0.0;
    const std::size_t m_count = selector.experts();
    for (const auto& g : groups) {
        if (g.branches.size() != m_count)
            throw ContractViolation("update_selector: group needs one branch per expert");
        const Trajectory& first = g.branches.front();
        const br::Categorical& post = first.selection_posterior;
        posteriors.push_back(post);
        if (first.prefix.empty() || first.prefix.dim(0) == 0)
            continue;
        std::vector<double> bracket(m_count);
        double baseline = 0.0, target = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
            const double f = selection_free_energy(g.branches[m], experts[m], gamma);
            bracket[m] = f - (std::log(post[m]) - std::log(selector.prior[m])) / selector.beta1;
            baseline += post[m] * bracket[m];
            target += post[m] * f;
        }
        nn::Tensor weights({m_count});
        for (std::size_t m = 0; m < m_count; ++m)
            weights[m] = -post[m] * (bracket[m] - baseline);
        nn::Var logp = nn::log_softmax_rows(embed::embed_trajectory(selector.actor, tape, first.prefix));
        actor_terms.push_back(nn::reshape(nn::sum(nn::mul(nn::reshape(logp, {m_count}), tape.constant(weights))), {1, 1}));
        nn::Var v = nn::scale(embed::embed_trajectory(selector.critic, tape, first.prefix), selector.value_scale);
        critic_terms.push_back(nn::reshape(nn::huber(v, nn::Tensor({1, 1}, {target}), huber_delta), {1, 1}));
        kl_sum += br::kl(post, selector.prior);
        entropy_sum += post.entropy_nats();
    }
    stats.selections = actor_terms.size();
    if (stats.selections > 0) {
        const double n = static_cast<double>(stats.selections);
        nn::Var actor_loss = nn::scale(nn::sum(nn::concat_cols(actor_terms)), 1.0 / n);
        nn::Var critic_loss = nn::scale(nn::sum(nn::concat_cols(critic_terms)), 1.0 / n);
        nn::Var total = nn::add(actor_loss, critic_loss);
        check_finite(total.item(), "selector loss");
        stats.actor_loss = actor_loss.item();
        stats.critic_loss = critic_loss.item();
        nn::Gradients grads = tape.backward(total);
        auto actor_params = selector.actor.parameters();
        auto critic_params = selector.critic.parameters();
        nn::adam_step(actor_params, grads, selector.actor_adam);
        nn::adam_step(critic_params, grads, selector.critic_adam);
        stats.kl = kl_sum / n;
        stats.entropy = entropy_sum / n;
    }
    if (!posteriors.empty()) {
        stats.mi_bits = m_count > 1 ? br::mutual_information_bits(posteriors) : 0.0;
        selector.prior = br::update_marginal_prior(selector.prior, posteriors, selector.prior_rate);
    }
    return stats;
}

std::vector<RlMetrics> meta_train_rl(RlSystem& system, const EnvSampler& train, const EnvSampler& validation,
                                     std::uint64_t seed, const RlCallback& on_update,
                                     const TrajectoryCallback& on_trajectory)
{
    const RlConfig& c = system.config;
    validate(c);
    RolloutOptions opts;
    opts.prefix_length = c.prefix_length;
    const bool enumerate =
        c.selector_gradient == SelectorGradient::Enumerate && c.experts > 1 && c.prefix_length > 0;
    std::vector<RlMetrics> out;
    for (std::size_t u = 0; u < c.updates; ++u) {
        auto run = [&](Environment& env, Rng& select_rng, Rng& action_rng) {
            return rollout(env, system.selector, system.experts, opts, select_rng, action_rng);
        };
        Collected tr = collect(train, c.envs_per_update, c.rollouts_per_env, seed, u, kTrainEnv, kTrainSelect,
                               kTrainActions, run);
        if (on_trajectory)
            for (const auto& t : tr.trajectories)
                on_trajectory(u, t);

        SelectorUpdateStats sel;
        double val_return = 0.0;
        if (enumerate) {
            CollectedGroups val =
                collect_groups(validation, system, opts, c.val_envs, c.val_rollouts_per_env, seed, u);
            val_return = val.mean_return;
            sel = update_selector(system.selector, system.experts, val.groups, c.gamma, c.huber_delta);
        } else {
            Collected val = collect(validation, c.val_envs, c.val_rollouts_per_env, seed, u, kValEnv, kValSelect,
                                    kValActions, run);
            val_return = val.mean_return;
            std::vector<Trajectory> selector_batch;
            if (c.selector_uses_train)
                selector_batch = tr.trajectories;
            selector_batch.insert(selector_batch.end(), val.trajectories.begin(), val.trajectories.end());
            sel = update_selector(system.selector, system.experts, selector_batch, c.gamma, c.huber_delta);
        }
        const ExpertUpdateStats ex = update_experts(system.experts, tr.trajectories, c.gamma, c.huber_delta);

        RlMetrics m;
        m.update = u;
        m.train_return = tr.mean_return;
        m.val_return = val_return;
        m.selector_mi_bits = sel.mi_bits;
        m.expert_kl = ex.kl;
        m.expert_entropy = ex.entropy;
        m.selector_kl = sel.kl;
        m.selector_entropy = sel.entropy;
        m.critic_loss = ex.critic_loss;
        out.push_back(m);
        if (on_update)
            on_update(m);
    }
    return out;
}

FlatRun train_flat(const RlConfig& config, const EnvSampler& train, const EnvSampler& validation,
                   std::uint64_t seed, std::size_t state_dim)
{
    validate(config);
    FlatRun run;
    {
        Rng rng = stream_rng(seed, {kInit, 0});
        run.expert = ExpertAC(0, policy_spec(config, state_dim), config.beta2, config.prior_rate,
                              config.actor_adam, config.critic_adam, rng);
    }
    std::span<ExpertAC> experts(&run.expert, 1);
    for (std::size_t u = 0; u < config.updates; ++u) {
        auto act = [&](Environment& env, Rng&, Rng& action_rng) {
            return rollout_flat(env, run.expert, ActionMode::Sample, action_rng);
        };
        Collected tr = collect(train, config.envs_per_update, config.rollouts_per_env, seed, u, kTrainEnv,
                               kTrainSelect, kTrainActions, act);
        Collected val = collect(validation, config.val_envs, config.val_rollouts_per_env, seed, u, kValEnv,
                                kValSelect, kValActions, act);
        const ExpertUpdateStats ex = update_experts(experts, tr.trajectories, config.gamma, config.huber_delta);
        RlMetrics m;
        m.update = u;
        m.train_return = tr.mean_return;
        m.val_return = val.mean_return;
        m.expert_kl = ex.kl;
        m.expert_entropy = ex.entropy;
        m.critic_loss = ex.critic_loss;
        run.metrics.push_back(m);
        for (auto& t : tr.trajectories)
            run.trajectories.push_back(std::move(t));
    }
    return run;
}

RlEvalSummary evaluate_rl(const RlSystem& system, const EnvSampler& envs, std::size_t episodes, std::uint64_t seed)
{
    RlEvalSummary s;
    s.episodes = episodes;
    s.expert_counts.assign(system.experts.size(), 0);
    RolloutOptions opts;
    opts.prefix_length = system.config.prefix_length;
    opts.actions = ActionMode::Mean;
    std::vector<double> returns;
    std::vector<br::Categorical> posteriors;
    for (std::size_t e = 0; e < episodes; ++e) {
        Rng env_rng = stream_rng(seed, {kEvalEnv, e});
        Rng select_rng = stream_rng(seed, {kEvalSelect, e});
        Rng action_rng = stream_rng(seed, {kEvalActions, e});
        auto env = envs(env_rng);
        Trajectory t = rollout(*env, system.selector, system.experts, opts, select_rng, action_rng);
        returns.push_back(t.normalized_return());
        posteriors.push_back(t.selection_posterior);
        ++s.expert_counts[t.expert];
    }
    s.return_mean = mean_of(returns);
    double var = 0.0;
    for (double r : returns)
        var += (r - s.return_mean) * (r - s.return_mean);
    s.return_std = returns.size() > 1 ? std::sqrt(var / static_cast<double>(returns.size() - 1)) : 0.0;
    s.mi_bits = !posteriors.empty() && system.experts.size() > 1 ? br::mutual_information_bits(posteriors) : 0.0;
    return s;
}

void save_rl_system(const RlSystem& system, const std::filesystem::path& path)
{
    const RlConfig& c = system.config;
    std::vector<nn::Parameter> meta;
    meta.push_back(scalar_param("meta.experts", static_cast<double>(c.experts)));
    meta.push_back(scalar_param("meta.state_dim", static_cast<double>(system.experts.front().spec.state_dim)));
    meta.push_back(scalar_param("meta.prefix_length", static_cast<double>(c.prefix_length)));
    meta.push_back(scalar_param("meta.horizon", static_cast<double>(c.horizon)));
    meta.push_back(scalar_param("meta.beta1", c.beta1));
    meta.push_back(scalar_param("meta.beta2", c.beta2));
    meta.push_back(scalar_param("meta.gamma", c.gamma));
    meta.push_back(scalar_param("meta.prior_rate", c.prior_rate));
    meta.push_back(scalar_param("meta.selector_hidden", static_cast<double>(c.selector_hidden)));
    meta.push_back(list_param("meta.expert_hidden",
                              std::vector<double>(c.expert_hidden.begin(), c.expert_hidden.end())));
    meta.push_back(list_param("selector.prior", system.selector.prior.probs()));
    for (const auto& e : system.experts) {
        const std::string name = "expert" + std::to_string(e.id) + ".prior";
        meta.push_back(list_param(name, std::vector<double>{e.prior.mean()[0], e.prior.log_std()[0],
                                                            e.prior_initialized ? 1.0 : 0.0}));
    }
    std::vector<const nn::Parameter*> all;
    for (const auto& p : meta)
        all.push_back(&p);
    for (const auto* p : system.selector.parameters())
        all.push_back(p);
    for (const auto& e : system.experts)
        for (const auto* p : e.parameters())
            all.push_back(p);
    nn::write_checkpoint(path, all);
}

RlSystem load_rl_system(const std::filesystem::path& path)
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
    auto count = [&](const std::string& name) { return static_cast<std::size_t>(get(name).item()); };

    RlConfig c;
    c.experts = count("meta.experts");
    c.prefix_length = count("meta.prefix_length");
    c.horizon = count("meta.horizon");
    c.beta1 = get("meta.beta1").item();
    c.beta2 = get("meta.beta2").item();
    c.gamma = get("meta.gamma").item();
    c.prior_rate = get("meta.prior_rate").item();
    c.selector_hidden = count("meta.selector_hidden");
    c.expert_hidden.clear();
    for (double v : get("meta.expert_hidden").values())
        c.expert_hidden.push_back(static_cast<std::size_t>(v));

    RlSystem system = make_rl_system(c, 0, count("meta.state_dim"));
    auto assign = [&](nn::Parameter* p) {
        const nn::Tensor& t = get(p->name);
        if (t.shape() != p->value.shape())
            throw CheckpointError("checkpoint record '" + p->name + "' has shape " + nn::to_string(t.shape()) +
                                  ", model expects " + nn::to_string(p->value.shape()));
        p->value = t;
    };
    for (auto* p : system.selector.parameters())
        assign(p);
    const auto& prior = get("selector.prior");
    system.selector.prior = br::Categorical(std::vector<double>(prior.values().begin(), prior.values().end()));
    for (auto& e : system.experts) {
        for (auto* p : e.parameters())
            assign(p);
        const auto& t = get("expert" + std::to_string(e.id) + ".prior");
        if (t.size() != 3)
            throw CheckpointError("checkpoint record for the action prior of expert " + std::to_string(e.id) +
                                  " is malformed");
        e.prior = br::DiagGaussian({t.values()[0]}, {t.values()[1]});
        e.prior_initialized = t.values()[2] != 0.0;
    }
    return system;
}

} // namespace hexpert::rl
