#include <hexpert/br/information.hpp>
#include <hexpert/embed/autoencoder.hpp>
#include <hexpert/nn/layers.hpp>
#include <hexpert/nn/ops.hpp>
#include <hexpert/rl/pendulum.hpp>
#include <hexpert/rl/rollout.hpp>
#include <hexpert/supervised/trainer.hpp>

#include <benchmark/benchmark.h>

using namespace hexpert;

namespace {

nn::Tensor random_tensor(nn::Shape shape, Rng& rng)
{
    nn::Tensor t(std::move(shape));
    for (double& v : t.values())
        v = standard_normal(rng);
    return t;
}

void BM_MatmulBackward(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    nn::Parameter a{"a", random_tensor({n, n}, rng)};
    nn::Parameter b{"b", random_tensor({n, n}, rng)};
    for (auto _ : state) {
        nn::Tape tape;
        auto loss = nn::sum(nn::matmul(tape.parameter(a), tape.parameter(b)));
        benchmark::DoNotOptimize(tape.backward(loss));
    }
}
BENCHMARK(BM_MatmulBackward)->Arg(16)->Arg(64)->Arg(128);

void BM_MlpForwardBackward(benchmark::State& state)
{
    Rng rng(2);
    std::vector<nn::LayerParams> layers{
        nn::LayerParams::dense("h0", 4, 64, nn::Activation::Relu, rng),
        nn::LayerParams::dense("h1", 64, 64, nn::Activation::Relu, rng),
        nn::LayerParams::dense("out", 64, 2, nn::Activation::Identity, rng),
    };
    const nn::Tensor x = random_tensor({static_cast<std::size_t>(state.range(0)), 4}, rng);
    for (auto _ : state) {
        nn::Tape tape;
        auto y = nn::forward(layers, tape.constant(x));
        benchmark::DoNotOptimize(tape.backward(nn::mean(nn::square(y))));
    }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(1)->Arg(100)->Arg(1600);

void BM_ConvEncoder(benchmark::State& state)
{
    Rng rng(3);
    embed::ConvAutoencoder ae(embed::AutoencoderConfig{}, rng);
    const nn::Tensor images = random_tensor({static_cast<std::size_t>(state.range(0)), 28, 28, 1}, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(embed::embed_images(ae, images, embed::Pooling::Max));
}
BENCHMARK(BM_ConvEncoder)->Arg(5)->Arg(20);

void BM_MutualInformation(benchmark::State& state)
{
    Rng rng(4);
    const auto m = static_cast<std::size_t>(state.range(0));
    nn::Tensor joint({m, 256});
    for (double& v : joint.values())
        v = uniform(rng, 0.0, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(br::mutual_information_bits(joint));
}
BENCHMARK(BM_MutualInformation)->Arg(2)->Arg(16);

void BM_PendulumRollout(benchmark::State& state)
{
    Rng rng(5);
    const auto m = static_cast<std::size_t>(state.range(0));
    std::vector<rl::ExpertAC> experts;
    rl::PolicySpec spec;
    for (std::size_t i = 0; i < m; ++i)
        experts.emplace_back(i, spec, 10.0, 0.01, nn::AdamConfig{}, nn::AdamConfig{}, rng);
    rl::SelectorAC selector(m, 7, 64, 10.0, 0.01, 10.0, nn::AdamConfig{}, nn::AdamConfig{}, rng);
    rl::PendulumEnv env(tasks::EnvParams{});
    std::uint64_t i = 0;
    for (auto _ : state) {
        Rng select = stream_rng(1, {i}), actions = stream_rng(2, {i++});
        benchmark::DoNotOptimize(rl::rollout(env, selector, experts, {}, select, actions));
    }
}
BENCHMARK(BM_PendulumRollout)->Arg(1)->Arg(4);

void BM_SinusoidMetaBatch(benchmark::State& state)
{
    Rng rng(6);
    supervised::ModelSpec spec;
    spec.experts = static_cast<std::size_t>(state.range(0));
    auto model = supervised::make_model(spec, rng);
    supervised::SinusoidSource source(10);
    supervised::TrainConfig cfg;
    cfg.batches = 1;
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(supervised::meta_train(model, source, cfg, seed++));
}
BENCHMARK(BM_SinusoidMetaBatch)->Arg(1)->Arg(8);

} // namespace

BENCHMARK_MAIN();
