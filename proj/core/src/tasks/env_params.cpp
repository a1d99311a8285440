#include <hexpert/tasks/env_params.hpp>

#include <algorithm>
#include <cmath>

namespace hexpert::tasks {

EnvDistribution EnvDistribution::train()
{
    EnvDistribution d;
    d.distance_penalty = {1e-3, 1e-1};
    d.goal_position = {0.3, 0.4};
    d.start_position = {-0.15, 0.15};
    d.motor_torque_scale = {0.0, 5.0};
    d.inverted_probability = 0.5;
    d.gravity = {0.01, 4.9};
    d.motor_actuation = {185.0, 215.0};
    return d;
}

EnvDistribution EnvDistribution::validation()
{
    EnvDistribution d;
    d.distance_penalty = {1e-3, 1e-2};
    d.goal_position = {0.0, 3.0};
    d.start_position = {-0.25, 0.25};
    d.motor_torque_scale = {0.0, 3.0};
    d.inverted_probability = 0.5;
    d.gravity = {4.9, 9.8};
    d.motor_actuation = {175.0, 225.0};
    return d;
}

bool EnvDistribution::contains(const EnvParams& p) const noexcept
{
    return distance_penalty.contains(p.distance_penalty) && goal_position.contains(p.goal_position) &&
           start_position.contains(p.start_position) &&
           motor_torque_scale.contains(p.motor_torque_scale) && gravity.contains(p.gravity) &&
           motor_actuation.contains(p.motor_actuation);
}

EnvParams sample_env_params(const EnvDistribution& dist, Rng& rng)
{
    EnvParams p;
    const double log_lo = std::log(dist.distance_penalty.lo);
    const double log_hi = std::log(dist.distance_penalty.hi);
    p.distance_penalty = std::clamp(std::exp(uniform(rng, log_lo, log_hi)),
                                    dist.distance_penalty.lo, dist.distance_penalty.hi);
    p.goal_position = uniform(rng, dist.goal_position.lo, dist.goal_position.hi);
    p.start_position = uniform(rng, dist.start_position.lo, dist.start_position.hi);
    p.motor_torque_scale = uniform(rng, dist.motor_torque_scale.lo, dist.motor_torque_scale.hi);
    p.inverted_control = std::bernoulli_distribution(dist.inverted_probability)(rng);
    p.gravity = uniform(rng, dist.gravity.lo, dist.gravity.hi);
    p.motor_actuation = uniform(rng, dist.motor_actuation.lo, dist.motor_actuation.hi);
    return p;
}

} // namespace hexpert::tasks
