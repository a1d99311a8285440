#pragma once

#include <cstddef>
#include <vector>

namespace hexpert::rl {

using State = std::vector<double>;

struct StepOutcome {
    State next;
    /// Reward before normalisation.
    double raw_reward = 0.0;
    /// Reward used for learning; within [0,1] for normalised environments.
    double reward = 0.0;
    /// True when the task failed or ended before the horizon.
    bool terminal = false;
};

/// Episodic continuous-control task with scalar actions in [-1, 1].
class Environment {
public:
    virtual ~Environment() = default;
    virtual std::size_t state_dim() const = 0;
    virtual std::size_t horizon() const = 0;
    virtual State reset() const = 0;
    /// Actions outside [-1, 1] are clipped and counted.
    virtual StepOutcome step(const State& state, double action) = 0;
    virtual std::size_t clipped_actions() const = 0;
};

} // namespace hexpert::rl
