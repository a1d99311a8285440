#include <hexpert/rl/free_energy.hpp>

#include <hexpert/errors.hpp>

#include <cmath>

namespace hexpert::rl {

std::vector<double> step_free_energy(std::span<const double> rewards, std::span<const double> log_ratios,
                                     double beta2)
{
    if (rewards.size() != log_ratios.size())
        throw DimensionError("step_free_energy: rewards and log-ratios differ in length");
    if (!(beta2 > 0.0))
        throw DomainError("beta2 must be positive");
    std::vector<double> f(rewards.size());
    for (std::size_t t = 0; t < f.size(); ++t)
        f[t] = rewards[t] - log_ratios[t] / beta2;
    return f;
}

std::vector<double> discounted_free_energy(std::span<const double> rewards, std::span<const double> log_ratios,
                                           double beta2, double gamma)
{
    std::vector<double> out = step_free_energy(rewards, log_ratios, beta2);
    for (std::size_t t = out.size(); t-- > 1;)
        out[t - 1] += gamma * out[t];
    return out;
}

std::vector<double> discounted_free_energy(const Trajectory& traj, double beta2, double gamma)
{
    std::vector<double> r, lr;
    r.reserve(traj.steps.size());
    lr.reserve(traj.steps.size());
    for (const auto& s : traj.steps) {
        r.push_back(s.reward);
        lr.push_back(s.log_ratio);
    }
    return discounted_free_energy(r, lr, beta2, gamma);
}

std::vector<double> td_advantages(std::span<const double> f, std::span<const double> v,
                                  std::span<const double> v_next, double gamma)
{
    if (f.size() != v.size() || f.size() != v_next.size())
        throw DimensionError("td_advantages: length mismatch");
    std::vector<double> a(f.size());
    for (std::size_t t = 0; t < a.size(); ++t)
        a[t] = f[t] + gamma * v_next[t] - v[t];
    return a;
}

TrajectoryAdvantages expert_advantages(const Trajectory& traj, std::span<const ExpertAC> experts, double gamma)
{
    TrajectoryAdvantages out;
    const std::size_t n = traj.steps.size();
    out.f.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const Step& s = traj.steps[t];
        if (s.expert >= experts.size())
            throw ContractViolation("advantages: step expert out of range");
        out.f[t] = s.reward - s.log_ratio / experts[s.expert].beta2;
    }
    out.free_energy = out.f;
    for (std::size_t t = n; t-- > 1;)
        out.free_energy[t - 1] += gamma * out.free_energy[t];

    // Critic values of x_t and x_{t+1} under the acting expert, batched per expert.
    std::vector<double> v(n, 0.0), v_next(n, 0.0);
    if (n > 0) {
        const std::size_t dim = traj.steps.front().state.size();
        for (const auto& expert : experts) {
            std::vector<std::size_t> idx;
            for (std::size_t t = 0; t < n; ++t)
                if (traj.steps[t].expert == expert.id)
                    idx.push_back(t);
            if (idx.empty())
                continue;
            nn::Tensor states({2 * idx.size(), dim});
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const std::size_t t = idx[k];
                const State& next = t + 1 < n ? traj.steps[t + 1].state : traj.final_state;
                std::copy(traj.steps[t].state.begin(), traj.steps[t].state.end(), states.data() + 2 * k * dim);
                std::copy(next.begin(), next.end(), states.data() + (2 * k + 1) * dim);
            }
            const auto values = expert.values(states);
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const std::size_t t = idx[k];
                v[t] = values[2 * k];
                const bool last = t + 1 == n || traj.steps[t].terminal;
                v_next[t] = last ? 0.0 : values[2 * k + 1];
            }
        }
    }
    out.expert = td_advantages(out.f, v, v_next, gamma);
    return out;
}

TrajectoryAdvantages advantages(const Trajectory& traj, std::span<const ExpertAC> experts,
                                const SelectorAC& selector, double gamma)
{
    TrajectoryAdvantages out = expert_advantages(traj, experts, gamma);
    const std::size_t n = traj.steps.size();
    if (traj.prefix.size() > 0) {
        out.has_selector = true;
        out.selector_target = traj.selection_step < n ? out.free_energy[traj.selection_step] : 0.0;
        const double log_ratio = std::log(traj.selection_posterior[traj.expert]) -
                                 std::log(selector.prior[traj.expert]);
        out.selector = out.selector_target - selector.value(traj.prefix) - log_ratio / selector.beta1;
    }
    return out;
}

} // namespace hexpert::rl
