#include "gradcheck.hpp"

#include <hexpert/br/distributions.hpp>
#include <hexpert/br/information.hpp>
#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>
#include <hexpert/random.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <algorithm>

namespace br = hexpert::br;
namespace nn = hexpert::nn;
using hexpert::Rng;
using nn::Tensor;

namespace {

br::Categorical random_categorical(std::size_t m, Rng& rng, double floor = 0.0)
{
    std::vector<double> p(m);
    double s = 0.0;
    for (auto& v : p) {
        v = hexpert::uniform(rng, floor, 1.0);
        s += v;
    }
    for (auto& v : p)
        v /= s;
    return br::Categorical(p);
}

double entropy_bits(const std::vector<double>& w)
{
    double total = 0.0, h = 0.0;
    for (double v : w)
        total += v;
    for (double v : w)
        if (v > 0)
            h -= v / total * std::log2(v / total);
    return h;
}

// I = H(M) + H(T) - H(M,T).
double mi_by_entropies(const Tensor& joint)
{
    const std::size_t rows = joint.dim(0), cols = joint.dim(1);
    std::vector<double> r(rows, 0.0), c(cols, 0.0), all(joint.values().begin(), joint.values().end());
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            r[i] += joint.at(i, j);
            c[j] += joint.at(i, j);
        }
    return entropy_bits(r) + entropy_bits(c) - entropy_bits(all);
}

} // namespace

TEST(Kl, SelfDivergenceIsZero)
{
    Rng rng(1);
    auto p = random_categorical(5, rng);
    EXPECT_NEAR(br::kl(p, p), 0.0, 1e-15);
    br::DiagGaussian g({0.0}, {0.0});
    EXPECT_NEAR(br::kl(g, g), 0.0, 1e-15);
}

TEST(Kl, HandValue)
{
    EXPECT_NEAR(br::kl(br::Categorical({0.75, 0.25}), br::Categorical({0.5, 0.5})), 0.130812035, 1e-8);
}

TEST(Kl, ErrorsOnSupportMismatchAndZeroMass)
{
    EXPECT_THROW(br::kl(br::Categorical({0.5, 0.5}), br::Categorical({1.0})), hexpert::DomainError);
    EXPECT_THROW(br::kl(br::Categorical({0.5, 0.5}), br::Categorical({1.0, 0.0})),
                 hexpert::InfiniteDivergenceError);
    EXPECT_NO_THROW(br::kl(br::Categorical({1.0, 0.0}), br::Categorical({0.5, 0.5})));
}

TEST(Kl, NonNegativeAndMatchesBruteForceOnRandomInstances)
{
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
        const std::size_t m = 2 + i % 7;
        auto p = random_categorical(m, rng, 0.01), q = random_categorical(m, rng, 0.01);
        double brute = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            brute += p[k] * std::log(p[k] / q[k]);
        const double v = br::kl(p, q);
        EXPECT_GE(v, 0.0);
        EXPECT_NEAR(v, brute, 1e-9);
        if (i < 20)
            EXPECT_GT(v, 0.0);
    }
}

TEST(Kl, GaussianClosedForm)
{
    br::DiagGaussian p({0.3, -1.0}, {0.1, -0.4}), q({0.0, 0.5}, {-0.2, 0.3});
    double expect = 0.0;
    const double mp[] = {0.3, -1.0}, lp[] = {0.1, -0.4}, mq[] = {0.0, 0.5}, lq[] = {-0.2, 0.3};
    for (int i = 0; i < 2; ++i) {
        const double sp = std::exp(lp[i]), sq = std::exp(lq[i]);
        expect += std::log(sq / sp) + (sp * sp + (mp[i] - mq[i]) * (mp[i] - mq[i])) / (2 * sq * sq) - 0.5;
    }
    EXPECT_NEAR(br::kl(p, q), expect, 1e-12);
    EXPECT_GT(br::kl(p, q), 0.0);
}

TEST(Reparam, ZeroNoiseGivesMean)
{
    br::DiagGaussian g({0.7, -1.1}, {0.3, 0.0});
    const double noise[] = {0.0, 0.0};
    auto s = br::sample_reparam(g, noise);
    EXPECT_EQ(s.action, (std::vector<double>{0.7, -1.1}));
}

TEST(Reparam, StandardNormalHandValue)
{
    br::DiagGaussian g({0.0}, {0.0});
    const double noise[] = {1.5};
    auto s = br::sample_reparam(g, noise);
    EXPECT_DOUBLE_EQ(s.action[0], 1.5);
    EXPECT_NEAR(s.log_density, -0.5 * 2.25 - 0.5 * std::log(2 * std::numbers::pi), 1e-12);
    EXPECT_NEAR(s.log_density, -2.0439, 1e-4);
}

TEST(Reparam, TapeGradientsMatchCentralDifferences)
{
    Rng rng(3);
    for (int inst = 0; inst < 10; ++inst) {
        nn::Parameter mean{"mu", Tensor({3, 2})}, log_std{"ls", Tensor({3, 2})};
        for (auto& v : mean.value.values())
            v = hexpert::uniform(rng, -1, 1);
        for (auto& v : log_std.value.values())
            v = hexpert::uniform(rng, -1, 0.5);
        Tensor noise({3, 2});
        for (auto& v : noise.values())
            v = hexpert::standard_normal(rng);
        br::DiagGaussian prior({0.2, -0.1}, {0.0, 0.3});
        std::vector<nn::Parameter*> params{&mean, &log_std};
        EXPECT_GRADIENTS_MATCH(params, [&](nn::Tape& t) {
            auto s = br::sample_reparam(t.parameter(mean), t.parameter(log_std), noise);
            return nn::sum(nn::square(s.action)) + nn::sum(s.log_density) +
                   nn::sum(br::gaussian_kl_rows(t.parameter(mean), t.parameter(log_std), prior)) +
                   nn::sum(br::gaussian_log_density(t.parameter(mean), t.parameter(log_std), noise));
        });
    }
}

TEST(Reparam, ActionGradientWithRespectToMeanIsIdentity)
{
    nn::Parameter mean{"mu", Tensor::matrix(1, 1, {0.4})}, log_std{"ls", Tensor::matrix(1, 1, {-0.3})};
    nn::Tape t;
    auto s = br::sample_reparam(t.parameter(mean), t.parameter(log_std), Tensor::matrix(1, 1, {0.9}));
    auto g = t.backward(nn::sum(s.action));
    EXPECT_DOUBLE_EQ(g.get(mean)[0], 1.0);
}

TEST(Reparam, EmpiricalMomentsWithinThreeStandardErrors)
{
    Rng rng(4);
    const double mu = 0.8, log_sigma = -0.5, sigma = std::exp(log_sigma);
    br::DiagGaussian g({mu}, {log_sigma});
    const int n = 100000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double noise[] = {hexpert::standard_normal(rng)};
        const double a = br::sample_reparam(g, noise).action[0];
        s1 += a;
        s2 += a * a;
    }
    const double mean = s1 / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, mu, 3 * sigma / std::sqrt(n));
    // Standard error of the sample std is sigma / sqrt(2n).
    EXPECT_NEAR(std::sqrt(var), sigma, 3 * sigma / std::sqrt(2.0 * n));
}

TEST(Categorical, KlRowsGradientsMatchCentralDifferences)
{
    Rng rng(5);
    for (int inst = 0; inst < 10; ++inst) {
        nn::Parameter logits{"z", Tensor({4, 3})};
        for (auto& v : logits.value.values())
            v = hexpert::uniform(rng, -2, 2);
        auto prior = random_categorical(3, rng, 0.05);
        std::vector<nn::Parameter*> params{&logits};
        EXPECT_GRADIENTS_MATCH(params, [&](nn::Tape& t) {
            return nn::sum(br::categorical_kl_rows(nn::log_softmax_rows(t.parameter(logits)), prior));
        });
    }
}

TEST(Categorical, ArgmaxTiesResolveToLowestIndex)
{
    EXPECT_EQ(br::Categorical({0.4, 0.2, 0.4}).argmax(), 0u);
    EXPECT_EQ(br::Categorical::uniform(4).argmax(), 0u);
}

TEST(FreeEnergy, Values)
{
    EXPECT_DOUBLE_EQ(br::free_energy(0.4, 0.0, 3.0), 0.4);
    EXPECT_DOUBLE_EQ(br::free_energy(1.0, 0.5, 2.0), 0.75);
    EXPECT_NEAR(br::free_energy(1.0, 0.5, 1e9), 1.0, 1e-8);
    EXPECT_THROW(br::free_energy(1.0, 0.5, 0.0), hexpert::DomainError);
    EXPECT_THROW(br::free_energy(1.0, 0.5, -1.0), hexpert::DomainError);
}

TEST(FreeEnergy, MonotoneIncreasingInBetaForPositiveKl)
{
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const double eu = hexpert::uniform(rng, -2, 2), kl = hexpert::uniform(rng, 1e-3, 3);
        const double b1 = hexpert::uniform(rng, 0.01, 10), b2 = b1 * hexpert::uniform(rng, 1.01, 5);
        EXPECT_LT(br::free_energy(eu, kl, b1), br::free_energy(eu, kl, b2));
    }
}

TEST(ResourceParams, Validation)
{
    EXPECT_NO_THROW((br::ResourceParams{1.0, 2.0, 0.9}.validate()));
    EXPECT_THROW((br::ResourceParams{0.0, 2.0, 0.9}.validate()), hexpert::DomainError);
    EXPECT_THROW((br::ResourceParams{1.0, -2.0, 0.9}.validate()), hexpert::DomainError);
    EXPECT_THROW((br::ResourceParams{1.0, 2.0, 1.1}.validate()), hexpert::DomainError);
}

TEST(MutualInformation, IndependentUniformIsZero)
{
    EXPECT_NEAR(br::mutual_information_bits(Tensor({3, 4}, 2.0)), 0.0, 1e-12);
}

TEST(MutualInformation, DiagonalTwoByTwoIsOneBit)
{
    EXPECT_NEAR(br::mutual_information_bits(Tensor::matrix(2, 2, {5, 0, 0, 5})), 1.0, 1e-12);
}

TEST(MutualInformation, DeterministicUniformFourExpertRoutingIsTwoBits)
{
    Tensor joint({4, 8});
    for (std::size_t t = 0; t < 8; ++t)
        joint.at(t % 4, t) = 1.0;
    EXPECT_NEAR(br::mutual_information_bits(joint), 2.0, 1e-12);
}

TEST(MutualInformation, AllZeroCountsAreADomainError)
{
    EXPECT_THROW(br::mutual_information_bits(Tensor({2, 2})), hexpert::DomainError);
    EXPECT_THROW(br::mutual_information_bits(Tensor::matrix(1, 2, {1, -1})), hexpert::DomainError);
}

TEST(MutualInformation, MatchesEntropyIdentityAndBoundOnRandomCounts)
{
    Rng rng(7);
    for (int i = 0; i < 300; ++i) {
        const std::size_t m = 1 + i % 6, t = 1 + (i / 6) % 9;
        Tensor joint({m, t});
        for (auto& v : joint.values())
            v = (hexpert::uniform(rng, 0, 1) < 0.3) ? 0.0 : std::floor(hexpert::uniform(rng, 0, 20));
        if (std::all_of(joint.values().begin(), joint.values().end(), [](double v) { return v == 0; }))
            joint[0] = 1.0;
        const double mi = br::mutual_information_bits(joint);
        EXPECT_NEAR(mi, std::max(0.0, mi_by_entropies(joint)), 1e-9);
        EXPECT_LE(mi, std::min(std::log2(double(m)), std::log2(double(t))) + 1e-9);
        EXPECT_GE(mi, 0.0);
    }
}

TEST(MutualInformation, FromPosteriorsIsBoundedByLog2M)
{
    Rng rng(8);
    for (int i = 0; i < 50; ++i) {
        std::vector<br::Categorical> post;
        for (int k = 0; k < 16; ++k)
            post.push_back(random_categorical(4, rng));
        EXPECT_LE(br::mutual_information_bits(post), 2.0 + 1e-9);
    }
    std::vector<br::Categorical> single(10, br::Categorical({1.0}));
    EXPECT_EQ(br::mutual_information_bits(single), 0.0);
}

TEST(MarginalPrior, RateOneCopiesPosterior)
{
    br::Categorical p({0.1, 0.6, 0.3});
    auto out = br::update_marginal_prior(br::Categorical::uniform(3), std::span(&p, 1), 1.0);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_NEAR(out[i], p[i], 1e-15);
}

TEST(MarginalPrior, HandValue)
{
    std::vector<br::Categorical> post{br::Categorical({0.0, 1.0})};
    auto out = br::update_marginal_prior(br::Categorical({1.0, 0.0}), post, 0.5);
    EXPECT_NEAR(out[0], 0.5, 1e-15);
    EXPECT_NEAR(out[1], 0.5, 1e-15);
}

TEST(MarginalPrior, GeometricConvergenceToStationaryPosterior)
{
    br::Categorical target({0.2, 0.8});
    br::Categorical prior({0.9, 0.1});
    const double rate = 0.1, d0 = std::abs(prior[0] - target[0]);
    for (int k = 1; k <= 30; ++k) {
        prior = br::update_marginal_prior(prior, std::span(&target, 1), rate);
        EXPECT_NEAR(std::abs(prior[0] - target[0]), d0 * std::pow(1 - rate, k), 1e-12);
    }
}

TEST(MarginalPrior, EmptyBatchIsNoOpAndSimplexPreserved)
{
    Rng rng(9);
    auto prior = random_categorical(5, rng);
    auto same = br::update_marginal_prior(prior, {}, 0.3);
    EXPECT_EQ(std::vector<double>(same.probs().begin(), same.probs().end()),
              std::vector<double>(prior.probs().begin(), prior.probs().end()));
    for (int i = 0; i < 100; ++i) {
        std::vector<br::Categorical> post;
        for (int k = 0; k < 4; ++k)
            post.push_back(random_categorical(5, rng));
        prior = br::update_marginal_prior(prior, post, hexpert::uniform(rng, 1e-3, 1.0));
        double s = 0.0;
        for (double v : prior.probs())
            s += v;
        EXPECT_NEAR(s, 1.0, 1e-9);
    }
    EXPECT_THROW(br::update_marginal_prior(prior, {}, 0.0), hexpert::DomainError);
}
