#pragma once

#include <hexpert/nn/tape.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <string>

namespace hexpert::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moments per parameter name plus the shared step counter.
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(AdamConfig config) : config_(config) {}

    const AdamConfig& config() const noexcept { return config_; }
    void set_learning_rate(double lr) noexcept { config_.learning_rate = lr; }
    std::uint64_t step() const noexcept { return step_; }

private:
    friend void adam_step(std::span<Parameter* const>, const Gradients&, AdamState&);

    struct Moments {
        Tensor first;
        Tensor second;
    };

    AdamConfig config_;
    std::uint64_t step_ = 0;
    std::map<std::string, Moments> moments_;
};

/// One bias-corrected Adam update. All gradients are validated before any
/// parameter is touched; a non-finite entry throws DivergenceError naming the
/// parameter and leaves the parameters and state unchanged.
void adam_step(std::span<Parameter* const> params, const Gradients& grads, AdamState& state);

} // namespace hexpert::nn
