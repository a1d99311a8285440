#include <hexpert/rl/rollout.hpp>

#include <hexpert/errors.hpp>

#include <ostream>

namespace hexpert::rl {

namespace {

std::size_t draw(const br::Categorical& p, Choice choice, Rng& rng)
{
    if (choice == Choice::Argmax)
        return p.argmax();
    return std::discrete_distribution<std::size_t>(p.probs().begin(), p.probs().end())(rng);
}

bool take_step(Environment& env, const ExpertAC& expert, ActionMode mode, Rng& action_rng, State& state,
               Trajectory& traj)
{
    const double noise = standard_normal(action_rng);
    const ActionSample a = expert.act(state, mode == ActionMode::Sample ? noise : 0.0);
    StepOutcome o = env.step(state, a.action);
    Step s;
    s.state = std::move(state);
    s.action = a.action;
    s.pre_squash = a.pre_squash;
    s.reward = o.reward;
    s.raw_reward = o.raw_reward;
    s.log_prob = a.log_prob;
    s.log_ratio = expert.log_ratio(a);
    s.expert = expert.id;
    s.terminal = o.terminal;
    traj.steps.push_back(std::move(s));
    state = std::move(o.next);
    return o.terminal;
}

} // namespace

double Trajectory::normalized_return() const
{
    double s = 0.0;
    for (const auto& step : steps)
        s += step.reward;
    return horizon > 0 ? s / static_cast<double>(horizon) : 0.0;
}

namespace {

struct Prefix {
    Trajectory traj;
    State state;
    bool done = false;
};

Prefix play_prefix(Environment& env, const SelectorAC& selector, std::span<const ExpertAC> experts,
                   const RolloutOptions& options, Rng& select_rng, Rng& action_rng)
{
    if (experts.size() != selector.experts())
        throw ContractViolation("rollout: selector and expert counts differ");
    const std::size_t horizon = env.horizon();
    if (options.prefix_length >= horizon)
        throw ContractViolation("rollout: prefix length must be below the horizon");

    Prefix p;
    Trajectory& traj = p.traj;
    traj.horizon = horizon;
    traj.steps.reserve(horizon);
    p.state = env.reset();

    traj.prefix_expert = draw(selector.prior, Choice::Sample, select_rng);
    std::vector<double> tuples;
    std::size_t t = 0;
    for (; t < options.prefix_length && !p.done; ++t) {
        p.done = take_step(env, experts[traj.prefix_expert], options.actions, action_rng, p.state, traj);
        const Step& s = traj.steps.back();
        const auto tup = step_tuple(s.state, s.action, s.reward, t, horizon);
        tuples.insert(tuples.end(), tup.begin(), tup.end());
    }
    traj.selection_step = t;
    if (t > 0) {
        const std::size_t width = tuples.size() / t;
        traj.prefix = nn::Tensor({t, width}, std::move(tuples));
    }
    traj.selection_posterior = selector.posterior(traj.prefix);
    traj.expert = t == 0 ? traj.prefix_expert : draw(traj.selection_posterior, options.selection, select_rng);
    return p;
}

void finish(Environment& env, const ExpertAC& expert, ActionMode actions, Rng& action_rng, Prefix& p)
{
    for (std::size_t t = p.traj.selection_step; t < p.traj.horizon && !p.done; ++t)
        p.done = take_step(env, expert, actions, action_rng, p.state, p.traj);
    p.traj.final_state = std::move(p.state);
}

} // namespace

Trajectory rollout(Environment& env, const SelectorAC& selector, std::span<const ExpertAC> experts,
                   const RolloutOptions& options, Rng& select_rng, Rng& action_rng)
{
    Prefix p = play_prefix(env, selector, experts, options, select_rng, action_rng);
    finish(env, experts[p.traj.expert], options.actions, action_rng, p);
    return std::move(p.traj);
}

BranchedRollout rollout_branches(Environment& env, const SelectorAC& selector, std::span<const ExpertAC> experts,
                                 const RolloutOptions& options, Rng& select_rng, Rng& action_rng)
{
    const Prefix shared = play_prefix(env, selector, experts, options, select_rng, action_rng);
    BranchedRollout out;
    out.chosen = shared.traj.expert;
    out.branches.reserve(experts.size());
    for (std::size_t m = 0; m < experts.size(); ++m) {
        Prefix p = shared;
        p.traj.expert = m;
        Rng noise = action_rng;
        finish(env, experts[m], options.actions, noise, p);
        out.branches.push_back(std::move(p.traj));
    }
    return out;
}

Trajectory rollout_flat(Environment& env, const ExpertAC& expert, ActionMode actions, Rng& action_rng)
{
    Trajectory traj;
    traj.horizon = env.horizon();
    traj.prefix_expert = traj.expert = expert.id;
    traj.selection_posterior = br::Categorical({1.0});
    State state = env.reset();
    bool done = false;
    for (std::size_t t = 0; t < traj.horizon && !done; ++t)
        done = take_step(env, expert, actions, action_rng, state, traj);
    traj.final_state = std::move(state);
    return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj)
{
    const std::size_t dim = traj.steps.empty() ? 0 : traj.steps.front().state.size();
    out << "step";
    for (std::size_t i = 0; i < dim; ++i)
        out << ",s" << i;
    out << ",action,reward,m,logp\n";
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const Step& s = traj.steps[t];
        out << t;
        for (double v : s.state)
            out << ',' << v;
        out << ',' << s.action << ',' << s.reward << ',' << s.expert << ',' << s.log_prob << '\n';
    }
}

} // namespace hexpert::rl
