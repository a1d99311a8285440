#include "gradcheck.hpp"

#include <hexpert/br/information.hpp>
#include <hexpert/errors.hpp>
#include <hexpert/nn/ops.hpp>
#include <hexpert/supervised/model.hpp>
#include <hexpert/supervised/trainer.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

namespace sup = hexpert::supervised;
namespace nn = hexpert::nn;
namespace br = hexpert::br;
namespace tasks = hexpert::tasks;
using hexpert::Rng;
using nn::Tensor;

namespace {

sup::Selector zero_selector(std::size_t experts, std::size_t input_dim, double beta1 = 10.0)
{
    Rng rng(1);
    sup::Selector s({.input_dim = input_dim, .experts = experts, .hidden = {8}}, beta1, 0.01, {1e-2}, rng);
    for (auto* p : s.parameters())
        p->value.fill(0.0);
    return s;
}

sup::ExpertSpec small_classifier()
{
    return {.kind = sup::TaskKind::Classification, .side = 8, .filters = 2};
}

tasks::GlyphDataset small_glyphs(std::size_t classes, std::size_t side, std::uint64_t seed)
{
    Rng rng(seed);
    return tasks::generate_synthetic_glyphs(classes, 20, rng, side);
}

std::vector<double> flatten(const std::vector<const nn::Parameter*>& params)
{
    std::vector<double> out;
    for (const auto* p : params)
        out.insert(out.end(), p->value.values().begin(), p->value.values().end());
    return out;
}

double mean_kl(const sup::Selector& s, const std::vector<std::vector<double>>& zs)
{
    double total = 0.0;
    for (const auto& z : zs)
        total += br::kl(s.posterior(z), s.prior);
    return total / static_cast<double>(zs.size());
}

/// Every (task, expert) pair weighted by the current posterior.
std::vector<sup::SelectorSample> enumerate_batch(const sup::Selector& s,
                                                 const std::vector<std::vector<double>>& zs,
                                                 const std::vector<double>& utilities)
{
    std::vector<sup::SelectorSample> batch;
    for (const auto& z : zs) {
        auto post = s.posterior(z);
        for (std::size_t m = 0; m < s.experts(); ++m)
            batch.push_back({z, m, utilities[m], post[m]});
    }
    return batch;
}

std::vector<std::vector<double>> random_embeddings(std::size_t n, std::size_t d, Rng& rng)
{
    std::vector<std::vector<double>> zs(n, std::vector<double>(d));
    for (auto& z : zs)
        for (auto& v : z)
            v = hexpert::uniform(rng, -2.0, 2.0);
    return zs;
}

} // namespace

TEST(SelectExpert, UniformLogitsGiveQuarterEach)
{
    auto s = zero_selector(4, 3);
    Rng rng(2);
    auto sel = sup::select_expert(s, std::vector<double>{0.3, -1.0, 2.0}, sup::SelectMode::Sample, rng);
    for (double p : sel.posterior.probs())
        EXPECT_DOUBLE_EQ(p, 0.25);
    EXPECT_NEAR(sel.log_prob, std::log(0.25), 1e-15);
}

TEST(SelectExpert, ArgmaxOfPeakedLogits)
{
    auto s = zero_selector(3, 2);
    s.layers.back().biases.value = Tensor::vector({10.0, 0.0, 0.0});
    Rng rng(3);
    auto sel = sup::select_expert(s, std::vector<double>{1.0, 1.0}, sup::SelectMode::Argmax, rng);
    EXPECT_EQ(sel.expert, 0u);
    const double e10 = std::exp(10.0);
    EXPECT_NEAR(sel.posterior[0], e10 / (e10 + 2.0), 1e-14);
}

TEST(SelectExpert, ArgmaxTiesGoToLowestIndex)
{
    auto s = zero_selector(3, 2);
    s.layers.back().biases.value = Tensor::vector({0.0, 1.0, 1.0});
    Rng rng(4);
    EXPECT_EQ(sup::select_expert(s, std::vector<double>{0.0, 0.0}, sup::SelectMode::Argmax, rng).expert, 1u);
}

TEST(SelectExpert, SampleFrequenciesMatchPosterior)
{
    Rng init(5);
    sup::Selector s({.input_dim = 2, .experts = 3, .hidden = {8}}, 10.0, 0.01, {}, init);
    std::vector<double> z{0.7, -0.4};
    auto post = s.posterior(z);
    Rng rng(6);
    const int n = 10000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < n; ++i)
        counts[sup::select_expert(s, z, sup::SelectMode::Sample, rng).expert]++;
    for (std::size_t m = 0; m < 3; ++m) {
        const double se = std::sqrt(post[m] * (1.0 - post[m]) / n);
        EXPECT_NEAR(counts[m] / double(n), post[m], 3.0 * se);
    }
}

TEST(SelectExpert, NonFiniteEmbeddingIsDomainError)
{
    auto s = zero_selector(2, 2);
    Rng rng(7);
    EXPECT_THROW(sup::select_expert(s, std::vector<double>{NAN, 0.0}, sup::SelectMode::Sample, rng),
                 hexpert::DomainError);
}

TEST(SelectorPosterior, EntropyAndInformationBounded)
{
    Rng rng(8);
    for (std::size_t m : {2, 4, 8}) {
        sup::Selector s({.input_dim = 5, .experts = m, .hidden = {16}}, 10.0, 0.01, {}, rng);
        std::vector<br::Categorical> posts;
        for (const auto& z : random_embeddings(64, 5, rng)) {
            posts.push_back(s.posterior(z));
            EXPECT_GE(posts.back().entropy_nats(), 0.0);
            EXPECT_LE(posts.back().entropy_nats(), std::log(double(m)) + 1e-12);
        }
        EXPECT_LE(br::mutual_information_bits(posts), std::log2(double(m)) + 1e-12);
    }
}

TEST(FreeEnergy, PerfectConfidentPredictionsWithHugeBetaApproachZero)
{
    Rng rng(9);
    sup::Expert e(0, small_classifier(), 1e12, 0.01, {}, rng);
    for (auto* p : e.parameters())
        p->value.fill(0.0);
    e.layers.back().biases.value = Tensor::vector({50.0, -50.0});
    tasks::LabeledSet data{Tensor({3, 8, 8, 1}, 0.2), {0, 0, 0}, {}};
    EXPECT_NEAR(sup::expert_free_energy(e, data), 0.0, 1e-9);
}

TEST(FreeEnergy, PosteriorEqualToPriorIsNegativeLoss)
{
    Rng rng(10);
    sup::Expert e(0, small_classifier(), 0.5, 0.01, {}, rng);
    for (auto* p : e.parameters())
        p->value.fill(0.0);
    tasks::LabeledSet data{Tensor({2, 8, 8, 1}, 0.5), {0, 1}, {}};
    auto s = sup::score_expert(e, data);
    EXPECT_NEAR(s.kl, 0.0, 1e-15);
    EXPECT_NEAR(s.free_energy, -std::numbers::ln2, 1e-12);
}

TEST(FreeEnergy, TwoSampleBinaryHandCase)
{
    // Uniform posterior (loss ln 2 per sample) against a prior q with
    // KL(uniform || q) = 0.1: q(1-q) = exp(-2 (0.1 + ln 2)).
    const double prod = std::exp(-2.0 * (0.1 + std::numbers::ln2));
    const double q = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * prod));
    Rng rng(11);
    sup::Expert e(0, small_classifier(), 1.0, 0.01, {}, rng);
    for (auto* p : e.parameters())
        p->value.fill(0.0);
    e.class_prior = br::Categorical({q, 1.0 - q});
    tasks::LabeledSet data{Tensor({2, 8, 8, 1}, 0.5), {1, 0}, {}};
    auto s = sup::score_expert(e, data);
    EXPECT_NEAR(s.loss, std::numbers::ln2, 1e-12);
    EXPECT_NEAR(s.kl, 0.1, 1e-12);
    EXPECT_NEAR(s.free_energy, -0.7931471805599453, 1e-12);
}

TEST(UpdateSelector, EqualUtilitiesAtPriorLeaveParametersUnchanged)
{
    auto s = zero_selector(3, 2);
    const auto before = flatten(std::as_const(s).parameters());
    Rng rng(12);
    auto zs = random_embeddings(8, 2, rng);
    sup::update_selector(s, enumerate_batch(s, zs, {0.4, 0.4, 0.4}));
    EXPECT_EQ(flatten(std::as_const(s).parameters()), before);
}

TEST(UpdateSelector, BetterExpertGainsProbabilityEveryUpdate)
{
    Rng rng(13);
    sup::Selector s({.input_dim = 3, .experts = 2, .hidden = {8}}, 1e6, 0.01, {1e-2}, rng);
    auto zs = random_embeddings(8, 3, rng);
    auto p0 = [&] {
        double t = 0.0;
        for (const auto& z : zs)
            t += s.posterior(z)[0];
        return t / zs.size();
    };
    double prev = p0();
    for (int i = 0; i < 50; ++i) {
        sup::update_selector(s, enumerate_batch(s, zs, {1.0, -1.0}));
        const double now = p0();
        EXPECT_GT(now, prev) << "update " << i;
        prev = now;
    }
}

TEST(UpdateSelector, SmallBetaPullsPosteriorTowardPrior)
{
    Rng rng(14);
    sup::Selector s({.input_dim = 3, .experts = 4, .hidden = {8}}, 0.01, 0.01, {1e-2}, rng);
    for (auto* p : s.parameters())
        for (auto& v : p->value.values())
            v *= 3.0;
    auto zs = random_embeddings(16, 3, rng);
    const double start = mean_kl(s, zs);
    double prev = start;
    int increases = 0;
    for (int i = 0; i < 100; ++i) {
        sup::update_selector(s, enumerate_batch(s, zs, {0.0, 0.0, 0.0, 0.0}));
        const double now = mean_kl(s, zs);
        increases += now > prev + 1e-9;
        prev = now;
    }
    EXPECT_LT(prev, 0.5 * start);
    EXPECT_LE(increases, 5);
}

TEST(UpdateSelector, ConstantShiftOfUtilitiesDoesNotChangeUpdate)
{
    Rng rng(15);
    sup::Selector a({.input_dim = 3, .experts = 3, .hidden = {8}}, 5.0, 0.01, {1e-2}, rng);
    sup::Selector b = a;
    auto zs = random_embeddings(6, 3, rng);
    std::vector<sup::SelectorSample> batch;
    for (std::size_t i = 0; i < zs.size(); ++i)
        batch.push_back({zs[i], i % 3, hexpert::uniform(rng, -1.0, 1.0), 1.0});
    auto shifted = batch;
    for (auto& e : shifted)
        e.utility += 7.5;
    sup::update_selector(a, batch);
    sup::update_selector(b, shifted);
    auto pa = flatten(std::as_const(a).parameters()), pb = flatten(std::as_const(b).parameters());
    for (std::size_t i = 0; i < pa.size(); ++i)
        EXPECT_NEAR(pa[i], pb[i], 1e-12);
}

TEST(UpdateSelector, EmptyBatchIsContractViolation)
{
    auto s = zero_selector(2, 2);
    EXPECT_THROW(sup::update_selector(s, {}), hexpert::ContractViolation);
}

TEST(UpdateExpert, HugeBetaMatchesUnregularisedStep)
{
    auto data = small_glyphs(3, 8, 16);
    Rng rng(17);
    auto ep = tasks::build_episode(data, {.target_class = 0, .k = 5}, rng);
    sup::Expert reg(0, small_classifier(), 1e10, 0.01, {1e-2}, rng);
    sup::Expert plain = reg;

    sup::update_expert(reg, ep.train, rng);

    nn::Tape tape;
    std::vector<std::size_t> labels;
    for (double t : ep.train.targets)
        labels.push_back(t > 0.5 ? 1 : 0);
    nn::Var loss = nn::neg(nn::mean(nn::pick(
        nn::log_softmax_rows(plain.outputs(tape.constant(ep.train.inputs))), labels)));
    auto grads = tape.backward(loss);
    auto params = plain.parameters();
    nn::adam_step(params, grads, plain.adam);

    auto a = flatten(std::as_const(reg).parameters()), b = flatten(std::as_const(plain).parameters());
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_NEAR(a[i], b[i], 1e-6);
}

TEST(UpdateExpert, KlTermHasNoGradientWhenPosteriorEqualsPrior)
{
    Rng rng(18);
    sup::Expert e(0, small_classifier(), 1.0, 0.01, {}, rng);
    e.layers.back().weights.value.fill(0.0);
    e.layers.back().biases.value.fill(0.0);
    tasks::LabeledSet data{Tensor({2, 8, 8, 1}, 0.3), {1, 0}, {}};
    nn::Tape t1;
    Rng unused(0);
    auto g_full = t1.backward(sup::expert_objective(e, t1, data, unused));
    nn::Tape t2;
    nn::Var ce = nn::neg(nn::mean(nn::pick(nn::log_softmax_rows(e.outputs(t2.constant(data.inputs))),
                                           std::vector<std::size_t>{1, 0})));
    auto g_ce = t2.backward(ce);
    for (auto* p : e.parameters()) {
        auto a = g_full.get(*p), b = g_ce.get(*p);
        for (std::size_t i = 0; i < a.size(); ++i)
            EXPECT_NEAR(a[i], b[i], 1e-15);
    }
}

TEST(UpdateExpert, HundredStepsFitOneEpisode)
{
    auto data = small_glyphs(4, 12, 19);
    Rng rng(20);
    auto ep = tasks::build_episode(data, {.target_class = 1, .k = 5}, rng);
    sup::ExpertSpec spec{.kind = sup::TaskKind::Classification, .side = 12, .filters = 8};
    sup::Expert e(0, spec, 10.0, 0.01, {1e-2}, rng);
    for (int i = 0; i < 100; ++i)
        sup::update_expert(e, ep.train, rng);
    EXPECT_LT(sup::score_expert(e, ep.train).loss, 0.1);
}

TEST(UpdateExpert, RegressionObjectiveGradientsMatchFiniteDifferences)
{
    Rng rng(21);
    sup::Expert e(0, {.hidden = 6}, 2.0, 0.01, {}, rng);
    e.mean_prior = 0.4;
    auto ep = tasks::build_sinusoid_episode({2.0, 0.5}, 5, rng);
    EXPECT_GRADIENTS_MATCH(e.parameters(), [&](nn::Tape& tape) {
        Rng noise(99);
        return sup::expert_objective(e, tape, ep.train, noise);
    });
}

TEST(MetaTrain, SingleExpertHasZeroInformationThroughout)
{
    Rng rng(22);
    auto model = sup::make_model({.experts = 1}, rng);
    sup::SinusoidSource source(10);
    auto metrics = sup::meta_train(model, source, {.batches = 30, .meta_batch = 8}, 3);
    ASSERT_EQ(metrics.size(), 30u);
    for (const auto& m : metrics)
        EXPECT_EQ(m.mi_bits, 0.0);
}

TEST(MetaTrain, ZeroBatchesLeaveModelUnchanged)
{
    Rng rng(23);
    auto model = sup::make_model({.experts = 3}, rng);
    const auto before = flatten(std::as_const(model).parameters());
    sup::SinusoidSource source(10);
    EXPECT_TRUE(sup::meta_train(model, source, {.batches = 0}, 1).empty());
    EXPECT_EQ(flatten(std::as_const(model).parameters()), before);
}

TEST(MetaTrain, SameSeedSameMetrics)
{
    sup::SinusoidSource source(10);
    auto run = [&] {
        Rng rng(24);
        auto model = sup::make_model({.experts = 2}, rng);
        return sup::meta_train(model, source, {.batches = 10, .meta_batch = 4}, 5);
    };
    auto a = run(), b = run();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].utility, b[i].utility);
        EXPECT_EQ(a[i].metric, b[i].metric);
        EXPECT_EQ(a[i].mi_bits, b[i].mi_bits);
    }
}

TEST(Adapt, ZeroStepsScoresUnadaptedArgmaxExpert)
{
    Rng rng(25);
    auto model = sup::make_model({.experts = 3}, rng);
    auto ep = tasks::build_sinusoid_episode({1.0, 0.2}, 10, rng);
    auto e = sup::adapt_and_evaluate(model, ep, 0, 1e-3, 7);
    auto z = sup::embed_task(model, ep);
    EXPECT_EQ(e.expert, model.selector.posterior(z).argmax());
    EXPECT_EQ(e.metric, sup::score_expert(model.experts[e.expert], ep.val).mse);
}

TEST(Adapt, PureAndRepeatable)
{
    Rng rng(26);
    auto model = sup::make_model({.experts = 2}, rng);
    auto ep = tasks::build_sinusoid_episode({3.0, 1.0}, 10, rng);
    const auto before = flatten(std::as_const(model).parameters());
    const auto prior = model.experts[0].mean_prior;
    auto a = sup::adapt_and_evaluate(model, ep, 10, 1e-2, 9);
    auto b = sup::adapt_and_evaluate(model, ep, 10, 1e-2, 9);
    EXPECT_EQ(a.metric, b.metric);
    EXPECT_EQ(flatten(std::as_const(model).parameters()), before);
    EXPECT_EQ(model.experts[0].mean_prior, prior);
}

TEST(Adapt, AdaptationHelpsOnTrainedClasses)
{
    auto data = small_glyphs(6, 12, 27);
    sup::ModelSpec spec{.kind = sup::TaskKind::Classification, .experts = 2, .expert_filters = 8,
                        .side = 12, .ae_channels = {4, 4}};
    spec.expert_adam = {3e-3};
    Rng rng(28);
    auto model = sup::make_model(spec, rng);
    sup::GlyphSource source(data, 5, tasks::ClassPool::Train);
    sup::meta_train(model, source, {.batches = 60, .meta_batch = 4, .ae_batch = 8}, 11);
    double unadapted = 0.0, adapted = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        Rng ep_rng = hexpert::stream_rng(1234, {i});
        auto ep = source.sample(ep_rng);
        unadapted += sup::adapt_and_evaluate(model, ep, 0, 1e-3, i).metric;
        adapted += sup::adapt_and_evaluate(model, ep, 10, 1e-3, i).metric;
    }
    EXPECT_GE(adapted, unadapted);
    EXPECT_GT(adapted / 20.0, 0.5);
}

TEST(Checkpoint, ModelRoundTripIsBitwise)
{
    Rng rng(29);
    auto model = sup::make_model({.experts = 3}, rng);
    sup::SinusoidSource source(10);
    sup::meta_train(model, source, {.batches = 5, .meta_batch = 4}, 2);
    auto path = std::filesystem::temp_directory_path() / "hexpert_test_model.ckpt";
    sup::save_model(model, path);
    auto back = sup::load_model(path);
    EXPECT_EQ(flatten(std::as_const(back).parameters()), flatten(std::as_const(model).parameters()));
    EXPECT_EQ(back.selector.prior.probs().size(), 3u);
    for (std::size_t m = 0; m < 3; ++m) {
        EXPECT_EQ(back.selector.prior[m], model.selector.prior[m]);
        EXPECT_EQ(back.experts[m].mean_prior, model.experts[m].mean_prior);
    }
    EXPECT_EQ(back.spec.beta1, model.spec.beta1);
}
