#pragma once

#include <hexpert/rl/environment.hpp>
#include <hexpert/tasks/env_params.hpp>

namespace hexpert::rl {

inline constexpr double kTimeStep = 0.05;
inline constexpr std::size_t kHorizon = 100;
/// Newtons per unit of motor actuation.
inline constexpr double kActuationUnit = 0.02;
inline constexpr double kCartMass = 1.0;
inline constexpr double kPoleMass = 0.1;
inline constexpr double kPoleHalfLength = 0.5;
inline constexpr double kTrackLimit = 4.0;

/// Single pole on a cart. State (x, x_dot, theta, theta_dot), theta = 0 is
/// upright. Raw reward cos(theta) - distance_penalty * (x - goal)^2; the
/// episode fails once |theta| > pi/2.
class PendulumEnv final : public Environment {
public:
    explicit PendulumEnv(const tasks::EnvParams& params, std::size_t horizon = kHorizon);

    std::size_t state_dim() const override { return 4; }
    std::size_t horizon() const override { return horizon_; }
    State reset() const override;
    StepOutcome step(const State& state, double action) override;
    std::size_t clipped_actions() const override { return clipped_; }

    const tasks::EnvParams& params() const noexcept { return params_; }
    /// Bounds of the raw reward over the reachable state box.
    double reward_min() const noexcept;
    double reward_max() const noexcept { return 1.0; }
    double normalize(double raw) const noexcept;
    /// Force applied for an action after sign flip and actuator clamp.
    double force(double action) const noexcept;

private:
    tasks::EnvParams params_;
    std::size_t horizon_;
    std::size_t clipped_ = 0;
};

/// Toggles inverted_control.
tasks::EnvParams invert(tasks::EnvParams params);

} // namespace hexpert::rl
