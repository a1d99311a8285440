#pragma once

#include <hexpert/br/distributions.hpp>
#include <hexpert/embed/trajectory_encoder.hpp>
#include <hexpert/nn/adam.hpp>
#include <hexpert/nn/layers.hpp>
#include <hexpert/rl/environment.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace hexpert::rl {

struct PolicySpec {
    std::size_t state_dim = 4;
    std::vector<std::size_t> hidden{64, 64};
    double log_std_min = -5.0;
    double log_std_max = 1.0;
    /// Critic outputs are multiplied by this (1 / (1 - gamma) keeps the raw
    /// head near unit scale).
    double value_scale = 1.0;
};

struct ActionSample {
    double action = 0.0;     // tanh(pre_squash), in [-1, 1]
    double pre_squash = 0.0; // Gaussian draw
    double log_prob = 0.0;   // log N(pre_squash; mean, std)
    double mean = 0.0;
    double log_std = 0.0;
};

/// Expert m: Gaussian actor with tanh squashing, state-value critic and a
/// Gaussian action prior p(a|m) (on the pre-squash variable, where the squash
/// Jacobian cancels in log-ratios).
struct ExpertAC {
    ExpertAC() = default;
    ExpertAC(std::size_t id, const PolicySpec& spec, double beta2, double prior_rate, nn::AdamConfig actor_adam,
             nn::AdamConfig critic_adam, Rng& rng);

    struct PolicyVars {
        nn::Var mean;    // [n,1]
        nn::Var log_std; // [n,1]
    };
    PolicyVars policy(nn::Var states) const;
    /// [n,1], already scaled.
    nn::Var value(nn::Var states) const;

    /// noise = 0 gives the deterministic action tanh(mean).
    ActionSample act(const State& state, double noise) const;
    /// Batched critic values of states [n, state_dim].
    std::vector<double> values(const nn::Tensor& states) const;
    /// log N(u; mean, std) - log p(u | m).
    double log_ratio(const ActionSample& a) const;

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

    std::size_t id = 0;
    PolicySpec spec;
    std::vector<nn::LayerParams> actor;
    std::vector<nn::LayerParams> critic;
    double beta2 = 1.0;
    double prior_rate = 0.01;
    br::DiagGaussian prior{{0.0}, {0.0}};
    /// False until the first update sets the prior to that batch's marginal.
    bool prior_initialized = false;
    nn::AdamState actor_adam;
    nn::AdamState critic_adam;
};

/// Step features fed to the recurrent selector: state, action, reward, t / T.
std::vector<double> step_tuple(const State& state, double action, double reward, std::size_t t,
                               std::size_t horizon);

/// Recurrent selection policy p(m|tau) with critic V(tau) and prior p(m).
struct SelectorAC {
    SelectorAC() = default;
    SelectorAC(std::size_t experts, std::size_t tuple_dim, std::size_t hidden, double beta1, double prior_rate,
               double value_scale, nn::AdamConfig actor_adam, nn::AdamConfig critic_adam, Rng& rng);

    /// Posterior over experts for a prefix [L, tuple_dim]; the prior when the
    /// prefix is empty.
    br::Categorical posterior(const nn::Tensor& prefix) const;
    double value(const nn::Tensor& prefix) const;

    std::size_t experts() const { return actor.outputs(); }

    std::vector<nn::Parameter*> parameters();
    std::vector<const nn::Parameter*> parameters() const;

    embed::TrajectoryEncoder actor;
    embed::TrajectoryEncoder critic;
    br::Categorical prior;
    double beta1 = 1.0;
    double prior_rate = 0.01;
    double value_scale = 1.0;
    nn::AdamState actor_adam;
    nn::AdamState critic_adam;
};

} // namespace hexpert::rl
