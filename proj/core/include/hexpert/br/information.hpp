#pragma once

#include <hexpert/br/distributions.hpp>
#include <hexpert/nn/tensor.hpp>

#include <span>

namespace hexpert::br {

/// Plug-in mutual information in bits from an M×T matrix of non-negative
/// joint weights (counts, or per-column posteriors). Result lies in
/// [0, log2 min(M, T)]. All-zero or negative input raises DomainError.
double mutual_information_bits(const nn::Tensor& joint);

/// Mutual information between inputs and choices when each column of the
/// joint is one input's posterior, weighted uniformly.
double mutual_information_bits(std::span<const Categorical> posteriors);

/// prior <- (1 - rate) prior + rate * mean(posteriors). Empty batch is a no-op.
Categorical update_marginal_prior(const Categorical& prior, std::span<const Categorical> posteriors,
                                  double rate);

inline constexpr double kNatsPerBit = 0.69314718055994530942;

} // namespace hexpert::br
