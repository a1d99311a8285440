#include <hexpert/harness/runner.hpp>

#include <hexpert/errors.hpp>
#include <hexpert/rl/trainer.hpp>
#include <hexpert/supervised/trainer.hpp>

#include <chrono>
#include <fstream>
#include <ostream>

namespace hexpert::harness {

namespace {

constexpr std::uint64_t kDataStream = 50;
constexpr std::uint64_t kModelInit = 51;
constexpr std::uint64_t kEvalSeed = 52;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point& since)
{
    const auto now = Clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - since).count();
    since = now;
    return ms;
}

std::string pool_name(const RunConfig& c)
{
    switch (c.kind) {
    case ExperimentKind::Regression:
        return "sinusoid";
    case ExperimentKind::Classification:
        return "heldout";
    case ExperimentKind::MetaRl:
        return "validation";
    }
    return "";
}

SummaryRow summarize(const RunConfig& c, std::uint64_t seed, const supervised::EvalSummary& e)
{
    SummaryRow r;
    r.seed = seed;
    r.experts = c.experts;
    r.pool = pool_name(c);
    r.episodes = e.episodes;
    r.adapt_steps = c.adapt_steps;
    r.metric_mean = e.metric_mean;
    r.metric_std = e.metric_std;
    r.mi_bits = e.mi_bits;
    r.expert_counts = e.expert_counts;
    return r;
}

SummaryRow evaluate_supervised(const RunConfig& c, const supervised::HierarchicalModel& model, std::uint64_t seed)
{
    const std::uint64_t eval_seed = mix_seed(seed ^ kEvalSeed);
    if (c.kind == ExperimentKind::Regression) {
        supervised::SinusoidSource source(c.k);
        return summarize(c, seed,
                         supervised::evaluate_model(model, source, c.eval_episodes, c.adapt_steps, c.adapt_lr,
                                                    eval_seed));
    }
    const tasks::GlyphDataset data = prepare_glyphs(c, seed);
    supervised::GlyphSource source(data, c.k, tasks::ClassPool::HeldOut);
    return summarize(c, seed,
                     supervised::evaluate_model(model, source, c.eval_episodes, c.adapt_steps, c.adapt_lr,
                                                eval_seed));
}

SummaryRow evaluate_rl_system(const RunConfig& c, const rl::RlSystem& system, std::uint64_t seed)
{
    const auto envs = rl::pendulum_family(c.validation_envs, c.horizon);
    const auto e = rl::evaluate_rl(system, envs, c.eval_episodes, mix_seed(seed ^ kEvalSeed));
    SummaryRow r;
    r.seed = seed;
    r.experts = c.experts;
    r.pool = pool_name(c);
    r.episodes = e.episodes;
    r.adapt_steps = 0;
    r.metric_mean = e.return_mean;
    r.metric_std = e.return_std;
    r.mi_bits = e.mi_bits;
    r.expert_counts = e.expert_counts;
    return r;
}

void with_divergence_checkpoint(const std::filesystem::path& ckpt, const std::function<void()>& train,
                                const std::function<void(const std::filesystem::path&)>& save)
{
    try {
        train();
    } catch (const DivergenceError&) {
        auto diverged = ckpt;
        diverged.replace_extension(".diverged.ckpt");
        try {
            save(diverged);
        } catch (const std::exception&) {
            // Non-finite parameters still serialise; a failure here only loses the dump.
        }
        throw;
    }
}

SummaryRow run_supervised_seed(const RunConfig& c, std::uint64_t seed, MetricsWriter& metrics,
                               TimingWriter& timing, std::ostream& log)
{
    Rng init = stream_rng(seed, {kModelInit});
    supervised::HierarchicalModel model = supervised::make_model(model_spec(c), init);
    std::optional<tasks::GlyphDataset> data;
    std::unique_ptr<supervised::TaskSource> source;
    if (c.kind == ExperimentKind::Regression) {
        source = std::make_unique<supervised::SinusoidSource>(c.k);
    } else {
        data = prepare_glyphs(c, seed);
        source = std::make_unique<supervised::GlyphSource>(*data, c.k, tasks::ClassPool::Train);
    }
    const auto ckpt = checkpoint_path(c, seed);
    auto clock = Clock::now();
    with_divergence_checkpoint(
        ckpt,
        [&] {
            supervised::meta_train(model, *source, train_config(c), seed, [&](const supervised::BatchMetrics& b) {
                metrics.write({b.batch, seed, c.experts, b.utility, b.metric, b.mi_bits, b.expert_kl,
                               b.selector_entropy});
                timing.write(b.batch, seed, elapsed_ms(clock));
                if ((b.batch + 1) % 100 == 0)
                    log << "seed " << seed << " batch " << b.batch + 1 << " metric " << b.metric << " mi "
                        << b.mi_bits << '\n';
            });
        },
        [&](const std::filesystem::path& p) { supervised::save_model(model, p); });
    supervised::save_model(model, ckpt);
    return evaluate_supervised(c, model, seed);
}

SummaryRow run_rl_seed(const RunConfig& c, std::uint64_t seed, MetricsWriter& metrics, TimingWriter& timing,
                       std::ostream& log)
{
    rl::RlSystem system = rl::make_rl_system(rl_config(c), seed);
    const auto train = rl::pendulum_family(c.train_envs, c.horizon);
    const auto val = rl::pendulum_family(c.validation_envs, c.horizon);
    const auto ckpt = checkpoint_path(c, seed);
    auto clock = Clock::now();
    with_divergence_checkpoint(
        ckpt,
        [&] {
            rl::meta_train_rl(system, train, val, seed, [&](const rl::RlMetrics& m) {
                metrics.write({m.update, seed, c.experts, m.train_return, m.val_return, m.selector_mi_bits,
                               m.expert_kl, m.selector_entropy});
                timing.write(m.update, seed, elapsed_ms(clock));
                if ((m.update + 1) % 50 == 0)
                    log << "seed " << seed << " update " << m.update + 1 << " val return " << m.val_return
                        << " mi " << m.selector_mi_bits << '\n';
            });
        },
        [&](const std::filesystem::path& p) { rl::save_rl_system(system, p); });
    rl::save_rl_system(system, ckpt);
    return evaluate_rl_system(c, system, seed);
}

} // namespace

std::filesystem::path checkpoint_path(const RunConfig& config, std::uint64_t seed)
{
    return config.output_dir / ("seed" + std::to_string(seed)) / "model.ckpt";
}

tasks::GlyphDataset prepare_glyphs(const RunConfig& c, std::uint64_t seed)
{
    Rng rng = stream_rng(seed, {kDataStream});
    tasks::GlyphDataset data;
    if (c.dataset.empty()) {
        data = tasks::generate_synthetic_glyphs(c.glyph_classes, c.glyph_samples, rng, c.glyph_side);
        tasks::split_classes(data, c.glyph_heldout, rng);
    } else if (std::filesystem::is_directory(c.dataset)) {
        data = tasks::load_omniglot(c.dataset, c.glyph_side);
        tasks::split_classes(data, c.glyph_heldout, rng);
    } else {
        // Dataset files carry their own split.
        data = tasks::load_glyphs(c.dataset);
        if (data.side != c.glyph_side)
            throw ConfigError("dataset " + c.dataset.string() + " has side " + std::to_string(data.side) +
                              ", config glyph_side is " + std::to_string(c.glyph_side));
    }
    return c.rotations ? tasks::augment_rotations(data) : data;
}

void generate_dataset(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& out)
{
    RunConfig c = config;
    c.dataset.clear();
    c.rotations = false;
    if (out.has_parent_path())
        std::filesystem::create_directories(out.parent_path());
    tasks::save_glyphs(prepare_glyphs(c, seed), out);
}

void run_experiment(const RunConfig& config, std::ostream& log)
{
    validate(config);
    std::filesystem::create_directories(config.output_dir);
    {
        std::ofstream echo(config.output_dir / "config.echo", std::ios::binary);
        echo << echo_config(config);
    }
    const auto metrics_path = config.output_dir / "metrics.csv";
    const auto timing_path = config.output_dir / "timing.csv";
    std::filesystem::remove(metrics_path);
    std::filesystem::remove(timing_path);
    MetricsWriter metrics(metrics_path, to_string(config.kind));
    TimingWriter timing(timing_path);
    std::vector<SummaryRow> summary;
    for (std::uint64_t seed : config.seeds) {
        std::filesystem::create_directories(checkpoint_path(config, seed).parent_path());
        summary.push_back(config.kind == ExperimentKind::MetaRl ? run_rl_seed(config, seed, metrics, timing, log)
                                                                : run_supervised_seed(config, seed, metrics, timing, log));
        metrics.flush();
        const auto& s = summary.back();
        log << "seed " << seed << " done: metric " << s.metric_mean << " +- " << s.metric_std << ", I(X;M) "
            << s.mi_bits << " bits\n";
    }
    write_summary(config.output_dir / "summary.csv", to_string(config.kind), summary);
}

SummaryRow evaluate_checkpoint(const RunConfig& config, const std::filesystem::path& checkpoint,
                               std::uint64_t seed)
{
    if (config.kind == ExperimentKind::MetaRl) {
        rl::RlSystem system = rl::load_rl_system(checkpoint);
        RunConfig c = config;
        c.experts = system.experts.size();
        return evaluate_rl_system(c, system, seed);
    }
    const supervised::HierarchicalModel model = supervised::load_model(checkpoint);
    const bool is_regression = model.spec.kind == supervised::TaskKind::Regression;
    if (is_regression != (config.kind == ExperimentKind::Regression))
        throw CheckpointError("checkpoint " + checkpoint.string() + " holds a " +
                              (is_regression ? "regression" : "classification") + " model, config asks for " +
                              to_string(config.kind));
    RunConfig c = config;
    c.experts = model.experts.size();
    return evaluate_supervised(c, model, seed);
}

} // namespace hexpert::harness
