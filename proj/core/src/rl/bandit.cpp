#include <hexpert/rl/bandit.hpp>

#include <algorithm>

namespace hexpert::rl {

BanditEnv BanditEnv::two_armed(double arm0, double arm1)
{
    BanditEnv b;
    b.kind_ = Kind::TwoArmed;
    b.arms_ = {arm0, arm1};
    return b;
}

BanditEnv BanditEnv::quadratic(double target)
{
    BanditEnv b;
    b.kind_ = Kind::Quadratic;
    b.target_ = target;
    return b;
}

double BanditEnv::best_reward() const noexcept
{
    return kind_ == Kind::TwoArmed ? std::max(arms_[0], arms_[1]) : 0.0;
}

StepOutcome BanditEnv::step(const State& state, double action)
{
    if (action < -1.0 || action > 1.0) {
        ++clipped_;
        action = std::clamp(action, -1.0, 1.0);
    }
    StepOutcome out;
    out.next = state;
    if (kind_ == Kind::TwoArmed) {
        out.raw_reward = action >= 0.0 ? arms_[1] : arms_[0];
    } else {
        const double d = action - target_;
        out.raw_reward = -d * d;
    }
    out.reward = out.raw_reward;
    out.terminal = true;
    return out;
}

} // namespace hexpert::rl
