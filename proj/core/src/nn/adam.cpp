#include <hexpert/nn/adam.hpp>

#include <hexpert/errors.hpp>

#include <cmath>

namespace hexpert::nn {

void adam_step(std::span<Parameter* const> params, const Gradients& grads, AdamState& state)
{
    for (const Parameter* p : params) {
        const Tensor* g = grads.find(p->name);
        if (!g)
            continue;
        if (g->shape() != p->value.shape())
            throw DimensionError("gradient for '" + p->name + "' has shape " +
                                 to_string(g->shape()) + ", parameter " +
                                 to_string(p->value.shape()));
        for (std::size_t i = 0; i < g->size(); ++i)
            if (!std::isfinite((*g)[i]))
                throw DivergenceError("non-finite gradient " + std::to_string((*g)[i]) +
                                      " in parameter '" + p->name + "' at index " +
                                      std::to_string(i));
    }

    const AdamConfig& c = state.config_;
    ++state.step_;
    const double t = static_cast<double>(state.step_);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);

    for (Parameter* p : params) {
        const Tensor* g = grads.find(p->name);
        if (!g)
            continue;
        auto& mom = state.moments_[p->name];
        if (mom.first.shape() != p->value.shape()) {
            mom.first = Tensor(p->value.shape());
            mom.second = Tensor(p->value.shape());
        }
        for (std::size_t i = 0; i < g->size(); ++i) {
            const double gi = (*g)[i];
            mom.first[i] = c.beta1 * mom.first[i] + (1.0 - c.beta1) * gi;
            mom.second[i] = c.beta2 * mom.second[i] + (1.0 - c.beta2) * gi * gi;
            const double m_hat = mom.first[i] / bc1;
            const double v_hat = mom.second[i] / bc2;
            p->value[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

} // namespace hexpert::nn
