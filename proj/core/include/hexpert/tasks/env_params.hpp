#pragma once

#include <hexpert/random.hpp>

namespace hexpert::tasks {

/// Physical and reward parameters of one pendulum-on-cart task.
struct EnvParams {
    double distance_penalty = 1e-2;
    double goal_position = 0.35;
    /// Initial pole angle offset from upright, radians.
    double start_position = 0.0;
    /// Force per unit action.
    double motor_torque_scale = 2.5;
    bool inverted_control = false;
    double gravity = 2.45;
    /// Actuator limit; the applied force is clamped to actuation * kActuationUnit.
    double motor_actuation = 200.0;

    bool operator==(const EnvParams&) const = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

/// Sampling box for EnvParams. The distance penalty spans two decades and is
/// drawn log-uniformly; everything else is uniform.
struct EnvDistribution {
    Interval distance_penalty;
    Interval goal_position;
    Interval start_position;
    Interval motor_torque_scale;
    double inverted_probability = 0.5;
    Interval gravity;
    Interval motor_actuation;

    /// Training distribution T.
    static EnvDistribution train();
    /// Validation distribution T'.
    static EnvDistribution validation();

    bool contains(const EnvParams& p) const noexcept;
};

EnvParams sample_env_params(const EnvDistribution& dist, Rng& rng);

} // namespace hexpert::tasks
