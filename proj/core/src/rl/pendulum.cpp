#include <hexpert/rl/pendulum.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hexpert::rl {

PendulumEnv::PendulumEnv(const tasks::EnvParams& params, std::size_t horizon)
    : params_(params), horizon_(horizon)
{
}

State PendulumEnv::reset() const
{
    return {0.0, 0.0, params_.start_position, 0.0};
}

double PendulumEnv::reward_min() const noexcept
{
    const double reach = kTrackLimit + std::abs(params_.goal_position);
    return -params_.distance_penalty * reach * reach;
}

double PendulumEnv::normalize(double raw) const noexcept
{
    const double lo = reward_min();
    return std::clamp((raw - lo) / (reward_max() - lo), 0.0, 1.0);
}

double PendulumEnv::force(double action) const noexcept
{
    const double sign = params_.inverted_control ? -1.0 : 1.0;
    const double limit = params_.motor_actuation * kActuationUnit;
    return std::clamp(action * params_.motor_torque_scale * sign, -limit, limit);
}

StepOutcome PendulumEnv::step(const State& s, double action)
{
    if (action < -1.0 || action > 1.0) {
        ++clipped_;
        action = std::clamp(action, -1.0, 1.0);
    }
    const double f = force(action);
    double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];

    const double total = kCartMass + kPoleMass;
    const double sin_t = std::sin(theta), cos_t = std::cos(theta);
    const double temp = (f + kPoleMass * kPoleHalfLength * theta_dot * theta_dot * sin_t) / total;
    const double theta_acc = (params_.gravity * sin_t - cos_t * temp) /
                             (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total));
    const double x_acc = temp - kPoleMass * kPoleHalfLength * theta_acc * cos_t / total;

    x_dot += kTimeStep * x_acc;
    x += kTimeStep * x_dot;
    theta_dot += kTimeStep * theta_acc;
    theta += kTimeStep * theta_dot;
    if (x > kTrackLimit || x < -kTrackLimit) {
        x = std::clamp(x, -kTrackLimit, kTrackLimit);
        x_dot = 0.0;
    }

    StepOutcome out;
    out.next = {x, x_dot, theta, theta_dot};
    const double d = x - params_.goal_position;
    out.raw_reward = std::cos(theta) - params_.distance_penalty * d * d;
    out.terminal = std::abs(theta) > std::numbers::pi / 2.0;
    out.reward = out.terminal ? 0.0 : normalize(out.raw_reward);
    return out;
}

tasks::EnvParams invert(tasks::EnvParams params)
{
    params.inverted_control = !params.inverted_control;
    return params;
}

} // namespace hexpert::rl
