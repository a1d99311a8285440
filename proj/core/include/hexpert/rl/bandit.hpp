#pragma once

#include <hexpert/rl/environment.hpp>

#include <array>

namespace hexpert::rl {

/// One-step task with a constant unit state.
///  TwoArmed:  arm 1 when action >= 0, else arm 0; reward = that arm's mean.
///  Quadratic: reward = -(action - target)^2.
class BanditEnv final : public Environment {
public:
    enum class Kind { TwoArmed, Quadratic };

    static BanditEnv two_armed(double arm0, double arm1);
    static BanditEnv quadratic(double target);

    std::size_t state_dim() const override { return 1; }
    std::size_t horizon() const override { return 1; }
    State reset() const override { return {1.0}; }
    StepOutcome step(const State& state, double action) override;
    std::size_t clipped_actions() const override { return clipped_; }

    Kind kind() const noexcept { return kind_; }
    double best_reward() const noexcept;
    /// Expected reward when arm 1 is chosen with probability p1.
    double expected_reward(double p1) const noexcept { return (1.0 - p1) * arms_[0] + p1 * arms_[1]; }

private:
    Kind kind_ = Kind::TwoArmed;
    std::array<double, 2> arms_{0.0, 0.0};
    double target_ = 0.0;
    std::size_t clipped_ = 0;
};

} // namespace hexpert::rl
