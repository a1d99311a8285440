#include <hexpert/br/distributions.hpp>

#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hexpert::br {

using nn::Tensor;
using nn::Var;

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

// Broadcast a length-d row to an [n,d] constant.
Tensor tile_rows(std::span<const double> row, std::size_t n)
{
    Tensor t({n, row.size()});
    for (std::size_t i = 0; i < n; ++i)
        std::copy(row.begin(), row.end(), t.data() + i * row.size());
    return t;
}

} // namespace

Categorical::Categorical(std::vector<double> probs) : probs_(std::move(probs))
{
    if (probs_.empty())
        throw DomainError("categorical distribution needs at least one outcome");
    double s = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0) || !std::isfinite(p))
            throw DomainError("categorical probability " + std::to_string(p) + " is invalid");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-9)
        throw DomainError("categorical probabilities sum to " + std::to_string(s));
}

Categorical Categorical::uniform(std::size_t outcomes)
{
    if (outcomes == 0)
        throw DomainError("categorical distribution needs at least one outcome");
    return Categorical(std::vector<double>(outcomes, 1.0 / static_cast<double>(outcomes)));
}

Categorical Categorical::from_logits(std::span<const double> logits)
{
    if (logits.empty())
        throw DomainError("categorical distribution needs at least one outcome");
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        s += p[i];
    }
    for (auto& v : p)
        v /= s;
    return Categorical(std::move(p));
}

std::size_t Categorical::argmax() const
{
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

double Categorical::entropy_nats() const
{
    double h = 0.0;
    for (double p : probs_)
        if (p > 0.0)
            h -= p * std::log(p);
    return h;
}

DiagGaussian::DiagGaussian(std::vector<double> mean, std::vector<double> log_std)
    : mean_(std::move(mean)), log_std_(std::move(log_std))
{
    if (mean_.size() != log_std_.size())
        throw DomainError("gaussian mean and log-std dimensions differ");
    for (std::size_t i = 0; i < mean_.size(); ++i)
        if (!std::isfinite(mean_[i]) || !std::isfinite(log_std_[i]))
            throw DomainError("gaussian parameters must be finite");
}

double DiagGaussian::log_density(std::span<const double> x) const
{
    if (x.size() != mean_.size())
        throw DomainError("gaussian log-density: dimension mismatch");
    double lp = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double z = (x[i] - mean_[i]) * std::exp(-log_std_[i]);
        lp += -0.5 * z * z - log_std_[i] - kHalfLog2Pi;
    }
    return lp;
}

double kl(const Categorical& p, const Categorical& q)
{
    if (p.size() != q.size())
        throw DomainError("kl: support sizes " + std::to_string(p.size()) + " and " +
                          std::to_string(q.size()) + " differ");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0)
            continue;
        if (q[i] == 0.0)
            throw InfiniteDivergenceError("kl: q assigns zero probability to outcome " +
                                          std::to_string(i));
        d += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(d, 0.0);
}

double kl(const DiagGaussian& p, const DiagGaussian& q)
{
    if (p.dim() != q.dim())
        throw DomainError("kl: gaussian dimensions differ");
    double d = 0.0;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        const double var_p = std::exp(2.0 * p.log_std()[i]);
        const double var_q = std::exp(2.0 * q.log_std()[i]);
        const double dm = p.mean()[i] - q.mean()[i];
        d += q.log_std()[i] - p.log_std()[i] + (var_p + dm * dm) / (2.0 * var_q) - 0.5;
    }
    return std::max(d, 0.0);
}

ReparamSample sample_reparam(const DiagGaussian& g, std::span<const double> noise)
{
    if (noise.size() != g.dim())
        throw DomainError("sample_reparam: noise dimension does not match the distribution");
    ReparamSample s;
    s.action.resize(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) {
        s.action[i] = g.mean()[i] + std::exp(g.log_std()[i]) * noise[i];
        s.log_density += -0.5 * noise[i] * noise[i] - g.log_std()[i] - kHalfLog2Pi;
    }
    return s;
}

ReparamVar sample_reparam(Var mean, Var log_std, const Tensor& noise)
{
    if (mean.shape() != log_std.shape() || noise.size() != mean.value().size())
        throw DomainError("sample_reparam: noise dimension does not match the distribution");
    nn::Tape& tape = mean.tape();
    Var eps = tape.constant(noise.reshaped(mean.shape()));
    Var action = nn::add(mean, nn::mul(nn::exp(log_std), eps));
    Tensor base(mean.shape());
    for (std::size_t i = 0; i < base.size(); ++i)
        base[i] = -0.5 * noise[i] * noise[i] - kHalfLog2Pi;
    Var ld = nn::sub(tape.constant(std::move(base)), log_std);
    if (ld.shape().size() == 1)
        ld = nn::reshape(ld, {1, ld.shape()[0]});
    return {action, nn::sum_rows(ld)};
}

Var gaussian_log_density(Var mean, Var log_std, const Tensor& x)
{
    if (mean.shape() != log_std.shape() || x.size() != mean.value().size())
        throw DimensionError("gaussian_log_density: shapes do not match");
    nn::Tape& tape = mean.tape();
    Var z = nn::mul(nn::sub(tape.constant(x.reshaped(mean.shape())), mean), nn::exp(nn::neg(log_std)));
    Var lp = nn::add_scalar(nn::sub(nn::scale(nn::square(z), -0.5), log_std), -kHalfLog2Pi);
    if (lp.shape().size() == 1)
        lp = nn::reshape(lp, {1, lp.shape()[0]});
    return nn::sum_rows(lp);
}

Var gaussian_kl_rows(Var mean, Var log_std, const DiagGaussian& prior)
{
    if (mean.shape() != log_std.shape() || mean.shape().size() != 2 ||
        mean.shape()[1] != prior.dim())
        throw DimensionError("gaussian_kl_rows: shapes do not match the prior");
    nn::Tape& tape = mean.tape();
    const std::size_t n = mean.shape()[0], d = prior.dim();
    std::vector<double> inv_two_var(d), const_term(d);
    for (std::size_t j = 0; j < d; ++j) {
        inv_two_var[j] = 0.5 * std::exp(-2.0 * prior.log_std()[j]);
        const_term[j] = prior.log_std()[j] - 0.5;
    }
    Var dm = nn::sub(mean, tape.constant(tile_rows(prior.mean(), n)));
    Var spread = nn::add(nn::exp(nn::scale(log_std, 2.0)), nn::square(dm));
    Var quad = nn::mul(spread, tape.constant(tile_rows(inv_two_var, n)));
    Var per_dim = nn::add(nn::sub(quad, log_std), tape.constant(tile_rows(const_term, n)));
    return nn::sum_rows(per_dim);
}

Var categorical_kl_rows(Var log_probs, const Categorical& prior)
{
    if (log_probs.shape().size() != 2 || log_probs.shape()[1] != prior.size())
        throw DimensionError("categorical_kl_rows: shape does not match the prior");
    std::vector<double> log_q(prior.size());
    for (std::size_t j = 0; j < prior.size(); ++j) {
        if (prior[j] <= 0.0)
            throw InfiniteDivergenceError("categorical prior has zero mass on outcome " +
                                          std::to_string(j));
        log_q[j] = std::log(prior[j]);
    }
    nn::Tape& tape = log_probs.tape();
    Var ratio = nn::sub(log_probs, tape.constant(tile_rows(log_q, log_probs.shape()[0])));
    return nn::sum_rows(nn::mul(nn::exp(log_probs), ratio));
}

double free_energy(double expected_utility, double kl_nats, double beta)
{
    if (!(beta > 0.0))
        throw DomainError("free_energy: beta must be positive, got " + std::to_string(beta));
    return expected_utility - kl_nats / beta;
}

void ResourceParams::validate() const
{
    if (!(beta1 > 0.0))
        throw DomainError("beta1 must be positive");
    if (!(beta2 > 0.0))
        throw DomainError("beta2 must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw DomainError("gamma must lie in [0, 1]");
}

} // namespace hexpert::br
