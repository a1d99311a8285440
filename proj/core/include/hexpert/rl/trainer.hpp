#pragma once

#include <hexpert/rl/actor_critic.hpp>
#include <hexpert/rl/environment.hpp>
#include <hexpert/rl/pendulum.hpp>
#include <hexpert/rl/rollout.hpp>
#include <hexpert/tasks/env_params.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace hexpert::rl {

/// Draws one environment instance.
using EnvSampler = std::function<std::unique_ptr<Environment>(Rng&)>;

EnvSampler pendulum_family(const tasks::EnvDistribution& dist, std::size_t horizon = kHorizon);
/// Always the same environment (copied per draw).
EnvSampler fixed_environment(std::function<std::unique_ptr<Environment>()> make);

enum class SelectorGradient {
    /// Score-function step on the single sampled expert per prefix.
    Sampled,
    /// Every expert continues each validation prefix under common action
    /// noise; the step takes the expectation over p(m|tau).
    Enumerate,
};

struct RlConfig {
    std::size_t experts = 4;
    std::size_t updates = 300;
    std::size_t envs_per_update = 16;
    std::size_t rollouts_per_env = 4;
    std::size_t val_envs = 16;
    std::size_t val_rollouts_per_env = 1;
    std::size_t prefix_length = 10;
    std::size_t horizon = kHorizon;
    double beta1 = 10.0;
    double beta2 = 10.0;
    double gamma = 0.9;
    double prior_rate = 0.01;
    double huber_delta = 1.0;
    /// Selector updates also use the training rollouts (rewarded by the
    /// training environment) next to the validation rollouts.
    bool selector_uses_train = true;
    /// Enumerate applies only with more than one expert and a non-empty prefix.
    SelectorGradient selector_gradient = SelectorGradient::Enumerate;
    std::vector<std::size_t> expert_hidden{64, 64};
    std::size_t selector_hidden = 64;
    nn::AdamConfig actor_adam{3e-4};
    nn::AdamConfig critic_adam{1e-3};
    nn::AdamConfig selector_actor_adam{1e-3};
    nn::AdamConfig selector_critic_adam{1e-3};
    tasks::EnvDistribution train_envs = tasks::EnvDistribution::train();
    tasks::EnvDistribution val_envs_dist = tasks::EnvDistribution::validation();
};

struct RlSystem {
    RlConfig config;
    SelectorAC selector;
    std::vector<ExpertAC> experts;
};

/// state_dim defaults to the pendulum's.
RlSystem make_rl_system(const RlConfig& config, std::uint64_t seed, std::size_t state_dim = 4);

struct ExpertUpdateStats {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    /// Mean KL(p(a|x,m) || p(a|m)) over the visited states before the step, nats.
    double kl = 0.0;
    /// Sample mean of the recorded log-ratios.
    double log_ratio = 0.0;
    double entropy = 0.0;
    std::size_t steps = 0;
};

/// One actor and one critic step per expert on the steps it took, then the
/// moment-matched prior update. Experts without steps are left untouched.
ExpertUpdateStats update_experts(std::span<ExpertAC> experts, std::span<const Trajectory> batch, double gamma,
                                 double huber_delta);

struct SelectorUpdateStats {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double kl = 0.0;
    double entropy = 0.0;
    double mi_bits = 0.0;
    std::size_t selections = 0;
};

/// Score-function step on trajectories whose expert was chosen from a
/// non-empty prefix, critic step towards the selector free energy, then the
/// prior moves towards the mean posterior. Trajectories with an empty prefix
/// only contribute to the prior.
SelectorUpdateStats update_selector(SelectorAC& selector, std::span<const ExpertAC> experts,
                                    std::span<const Trajectory> batch, double gamma, double huber_delta);

/// Enumerated variant: per prefix the step follows
///   sum_m p(m|tau) grad log p(m|tau) (F_m - (1/beta1) log p(m|tau)/p(m) - b)
/// with b the posterior mean of the bracket; the critic regresses the
/// posterior mean of F_m.
SelectorUpdateStats update_selector(SelectorAC& selector, std::span<const ExpertAC> experts,
                                    std::span<const BranchedRollout> groups, double gamma, double huber_delta);

struct RlMetrics {
    std::size_t update = 0;
    double train_return = 0.0;
    double val_return = 0.0;
    double selector_mi_bits = 0.0;
    double expert_kl = 0.0;
    double expert_entropy = 0.0;
    double selector_kl = 0.0;
    double selector_entropy = 0.0;
    double critic_loss = 0.0;
};

using RlCallback = std::function<void(const RlMetrics&)>;
using TrajectoryCallback = std::function<void(std::size_t update, const Trajectory&)>;

/// Per update: rollouts in envs_per_update environments from the training
/// sampler update the experts, paired rollouts in val_envs validation
/// environments update the selector. All draws come from streams keyed by
/// (seed, update, environment, rollout).
std::vector<RlMetrics> meta_train_rl(RlSystem& system, const EnvSampler& train, const EnvSampler& validation,
                                     std::uint64_t seed, const RlCallback& on_update = {},
                                     const TrajectoryCallback& on_trajectory = {});

/// Single KL-regularized actor-critic with the same rollout schedule and
/// random streams as meta_train_rl on an M=1, L=0 system. Returns every
/// training trajectory in order.
struct FlatRun {
    ExpertAC expert;
    std::vector<Trajectory> trajectories;
    std::vector<RlMetrics> metrics;
};
FlatRun train_flat(const RlConfig& config, const EnvSampler& train, const EnvSampler& validation,
                   std::uint64_t seed, std::size_t state_dim = 4);

struct RlEvalSummary {
    std::size_t episodes = 0;
    double return_mean = 0.0;
    double return_std = 0.0;
    double mi_bits = 0.0;
    std::vector<std::size_t> expert_counts;
};

/// Sampled selection, mean actions.
RlEvalSummary evaluate_rl(const RlSystem& system, const EnvSampler& envs, std::size_t episodes, std::uint64_t seed);

void save_rl_system(const RlSystem& system, const std::filesystem::path& path);
RlSystem load_rl_system(const std::filesystem::path& path);

} // namespace hexpert::rl
