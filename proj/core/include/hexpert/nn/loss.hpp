#pragma once

#include <hexpert/nn/tape.hpp>

#include <span>

namespace hexpert::nn {

enum class LossKind { CrossEntropy, Mse, Huber };

struct LossSpec {
    LossKind kind = LossKind::Mse;
    double huber_delta = 1.0;
};

/// Scalar loss averaged over rows (cross-entropy) or elements (mse, huber).
/// Cross-entropy takes row-wise probability vectors and one-hot (or soft)
/// targets of the same shape; probabilities outside [0,1] or rows not summing
/// to 1 ± 1e-6 raise DomainError.
Var loss(const LossSpec& spec, Var prediction, const Tensor& target);
inline Var loss(LossKind kind, Var prediction, const Tensor& target)
{
    return loss(LossSpec{kind, 1.0}, prediction, target);
}

/// Mean cross-entropy from unnormalised logits [n,C] and class labels.
Var softmax_cross_entropy(Var logits, std::span<const std::size_t> labels);

} // namespace hexpert::nn
