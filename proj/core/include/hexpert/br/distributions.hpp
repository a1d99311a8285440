#pragma once

#include <hexpert/nn/tape.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace hexpert::br {

/// Probability vector over M outcomes; entries >= 0 summing to 1 ± 1e-9.
class Categorical {
public:
    Categorical() = default;
    /// Validates the simplex constraint (DomainError otherwise).
    explicit Categorical(std::vector<double> probs);

    static Categorical uniform(std::size_t outcomes);
    /// Softmax of unnormalised logits.
    static Categorical from_logits(std::span<const double> logits);

    std::span<const double> probs() const noexcept { return probs_; }
    double operator[](std::size_t i) const noexcept { return probs_[i]; }
    std::size_t size() const noexcept { return probs_.size(); }
    /// Index of the largest probability; ties resolve to the lowest index.
    std::size_t argmax() const;
    double entropy_nats() const;

private:
    std::vector<double> probs_;
};

/// Diagonal Gaussian parameterised by mean and log standard deviation.
class DiagGaussian {
public:
    DiagGaussian() = default;
    DiagGaussian(std::vector<double> mean, std::vector<double> log_std);

    std::span<const double> mean() const noexcept { return mean_; }
    std::span<const double> log_std() const noexcept { return log_std_; }
    std::size_t dim() const noexcept { return mean_.size(); }
    double log_density(std::span<const double> x) const;

private:
    std::vector<double> mean_;
    std::vector<double> log_std_;
};

/// KL(p || q) in nats. Mismatched support raises DomainError; q_i = 0 with
/// p_i > 0 raises InfiniteDivergenceError.
double kl(const Categorical& p, const Categorical& q);
double kl(const DiagGaussian& p, const DiagGaussian& q);

struct ReparamSample {
    std::vector<double> action;
    double log_density = 0.0;
};

/// action = mean + exp(log_std) * noise, with its log-density under g.
ReparamSample sample_reparam(const DiagGaussian& g, std::span<const double> noise);

struct ReparamVar {
    nn::Var action;      // [n,d]
    nn::Var log_density; // [n]
};

/// Tape version; noise has the shape of mean. Gradients reach mean and log_std.
ReparamVar sample_reparam(nn::Var mean, nn::Var log_std, const nn::Tensor& noise);

/// Row-wise diagonal-Gaussian log-density of fixed samples x [n,d] -> [n].
nn::Var gaussian_log_density(nn::Var mean, nn::Var log_std, const nn::Tensor& x);

/// Row-wise KL(N(mean, exp(log_std)) || prior) -> [n].
nn::Var gaussian_kl_rows(nn::Var mean, nn::Var log_std, const DiagGaussian& prior);

/// Row-wise KL(softmax || prior) from log-probabilities [n,C] -> [n].
nn::Var categorical_kl_rows(nn::Var log_probs, const Categorical& prior);

/// F = E[U] - KL / beta. DomainError for beta <= 0.
double free_energy(double expected_utility, double kl_nats, double beta);

/// Resource (inverse temperature) parameters of the two decision stages.
struct ResourceParams {
    double beta1 = 1.0;
    double beta2 = 1.0;
    double gamma = 0.99;

    /// DomainError unless beta1, beta2 > 0 and gamma in [0, 1].
    void validate() const;
};

} // namespace hexpert::br
