#pragma once

#include <hexpert/nn/tape.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace hexpert::testing {

/// Builds a scalar loss on the given tape from the current parameter values.
using LossBuilder = std::function<nn::Var(nn::Tape&)>;

struct GradCheckResult {
    double worst_relative = 0.0;
    std::string worst_entry;
};

inline double relative_error(double analytic, double numeric)
{
    const double diff = std::abs(analytic - numeric);
    // Absolute floor covers entries whose true gradient is exactly zero.
    if (diff <= 1e-7)
        return 0.0;
    return diff / std::max(std::abs(analytic), std::abs(numeric));
}

/// Compares tape gradients with central differences (step h) for every entry
/// of every parameter.
inline GradCheckResult gradient_check(const std::vector<nn::Parameter*>& params,
                                      const LossBuilder& build, double h = 1e-5)
{
    nn::Gradients grads;
    {
        nn::Tape tape;
        grads = tape.backward(build(tape));
    }
    GradCheckResult result;
    for (nn::Parameter* p : params) {
        const nn::Tensor analytic = grads.get(*p);
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + h;
            double up;
            {
                nn::Tape tape;
                up = build(tape).item();
            }
            p->value[i] = saved - h;
            double down;
            {
                nn::Tape tape;
                down = build(tape).item();
            }
            p->value[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double rel = relative_error(analytic[i], numeric);
            if (rel > result.worst_relative) {
                result.worst_relative = rel;
                result.worst_entry = p->name + "[" + std::to_string(i) + "] analytic " +
                                     std::to_string(analytic[i]) + " numeric " +
                                     std::to_string(numeric);
            }
        }
    }
    return result;
}

} // namespace hexpert::testing
