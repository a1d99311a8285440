#pragma once

#include <hexpert/rl/actor_critic.hpp>
#include <hexpert/rl/rollout.hpp>

#include <span>
#include <vector>

namespace hexpert::rl {

/// f_t = r_t - (1/beta2) * log-ratio_t.
std::vector<double> step_free_energy(std::span<const double> rewards, std::span<const double> log_ratios,
                                     double beta2);

/// F_t = f_t + gamma * F_{t+1}, F_T = 0.
std::vector<double> discounted_free_energy(std::span<const double> rewards, std::span<const double> log_ratios,
                                           double beta2, double gamma);
std::vector<double> discounted_free_energy(const Trajectory& traj, double beta2, double gamma);

/// A_t = f_t + gamma * v_next_t - v_t. Callers pass v_next = 0 after a
/// terminal step or at the end of the trajectory.
std::vector<double> td_advantages(std::span<const double> f, std::span<const double> v,
                                  std::span<const double> v_next, double gamma);

struct TrajectoryAdvantages {
    std::vector<double> f;           // per-step free energy terms
    std::vector<double> free_energy; // F_t
    std::vector<double> expert;      // A_m per step, critic of the acting expert
    /// F at the selection step minus V(prefix) minus (1/beta1) log p(m|tau)/p(m);
    /// meaningful only when has_selector.
    double selector = 0.0;
    double selector_target = 0.0;
    bool has_selector = false;
};

/// Expert terms only (f, F, A_m); selector fields stay empty.
TrajectoryAdvantages expert_advantages(const Trajectory& traj, std::span<const ExpertAC> experts, double gamma);

/// f_t uses the beta2 of the expert that acted at step t.
TrajectoryAdvantages advantages(const Trajectory& traj, std::span<const ExpertAC> experts,
                                const SelectorAC& selector, double gamma);

} // namespace hexpert::rl
