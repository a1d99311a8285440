#pragma once

#include <hexpert/rl/actor_critic.hpp>
#include <hexpert/rl/environment.hpp>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace hexpert::rl {

struct Step {
    State state;
    double action = 0.0;
    double pre_squash = 0.0;
    double reward = 0.0;
    double raw_reward = 0.0;
    double log_prob = 0.0;
    /// log p(a|x,m) - log p(a|m) under the policy and prior at rollout time.
    double log_ratio = 0.0;
    std::size_t expert = 0;
    bool terminal = false;
};

struct Trajectory {
    std::vector<Step> steps;
    /// State after the last step.
    State final_state;
    std::size_t horizon = 0;
    std::size_t prefix_expert = 0;
    /// Index of the first step taken by the selected expert.
    std::size_t selection_step = 0;
    std::size_t expert = 0;
    br::Categorical selection_posterior;
    /// Tuples seen by the selector, [selection_step, tuple_dim]; empty when
    /// the choice came from the prior.
    nn::Tensor prefix;

    /// (1/T) * sum of rewards.
    double normalized_return() const;
};

enum class ActionMode { Sample, Mean };
enum class Choice { Sample, Argmax };

struct RolloutOptions {
    std::size_t prefix_length = 10;
    ActionMode actions = ActionMode::Sample;
    Choice selection = Choice::Sample;
};

/// Steps [0, L) follow an expert drawn from p(m); at step L the selector reads
/// the prefix and the chosen expert acts until the horizon or failure. Expert
/// draws use select_rng, action noise uses action_rng (one normal per step).
Trajectory rollout(Environment& env, const SelectorAC& selector, std::span<const ExpertAC> experts,
                   const RolloutOptions& options, Rng& select_rng, Rng& action_rng);

/// One shared prefix continued by every expert from the same state with the
/// same action noise. branches[m] was played by expert m after the prefix;
/// `chosen` is the expert rollout() picks from the same streams, so
/// branches[chosen] equals that rollout.
struct BranchedRollout {
    std::vector<Trajectory> branches;
    std::size_t chosen = 0;
};

BranchedRollout rollout_branches(Environment& env, const SelectorAC& selector, std::span<const ExpertAC> experts,
                                 const RolloutOptions& options, Rng& select_rng, Rng& action_rng);

/// Single-policy rollout with the same per-step noise consumption.
Trajectory rollout_flat(Environment& env, const ExpertAC& expert, ActionMode actions, Rng& action_rng);

/// step, state..., action, reward, m, logp
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

} // namespace hexpert::rl
