#include <hexpert/nn/loss.hpp>

#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>

#include <cmath>

namespace hexpert::nn {

namespace {

Var cross_entropy(Var prediction, const Tensor& target)
{
    const Tensor& p = prediction.value();
    if (p.shape() != target.shape())
        throw DimensionError("cross-entropy: prediction " + to_string(p.shape()) + " vs target " +
                             to_string(target.shape()));
    const std::size_t cols = p.rank() == 1 ? p.size() : p.shape().back();
    const std::size_t rows = p.size() / cols;
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = p[i * cols + j];
            if (!(v >= 0.0 && v <= 1.0))
                throw DomainError("cross-entropy: probability " + std::to_string(v) +
                                  " outside [0,1]");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6)
            throw DomainError("cross-entropy: probabilities sum to " + std::to_string(s));
    }

    // Only entries with non-zero target contribute; log is taken on those.
    Tape& tape = prediction.tape();
    Tensor y({1});
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (target[i] == 0.0)
            continue;
        if (p[i] <= 0.0)
            throw DomainError("cross-entropy: zero probability on target class");
        total -= target[i] * std::log(p[i]);
    }
    y[0] = total / static_cast<double>(rows);
    const bool rg = tape.requires_grad(prediction);
    return tape.record(std::move(y), rg, [prediction, target, rows](Tape& t, const Tensor& g) {
        const Tensor& pv = t.value(prediction);
        Tensor& gp = t.grad(prediction);
        for (std::size_t i = 0; i < pv.size(); ++i)
            if (target[i] != 0.0)
                gp[i] -= g[0] * target[i] / (pv[i] * static_cast<double>(rows));
    });
}

} // namespace

Var loss(const LossSpec& spec, Var prediction, const Tensor& target)
{
    switch (spec.kind) {
    case LossKind::CrossEntropy:
        return cross_entropy(prediction, target);
    case LossKind::Mse: {
        if (prediction.value().size() != target.size())
            throw DimensionError("mse: prediction " + to_string(prediction.shape()) +
                                 " vs target " + to_string(target.shape()));
        Var diff = sub(prediction, prediction.tape().constant(target.reshaped(prediction.shape())));
        return mean(square(diff));
    }
    case LossKind::Huber:
        return mean(huber(prediction, target, spec.huber_delta));
    }
    throw ContractViolation("unknown loss kind");
}

Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels)
{
    return neg(mean(pick(log_softmax_rows(logits), labels)));
}

} // namespace hexpert::nn
