#include <hexpert/errors.hpp>
#include <hexpert/harness/analysis.hpp>
#include <hexpert/harness/config.hpp>
#include <hexpert/harness/runner.hpp>
#include <hexpert/supervised/model.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace hx = hexpert::harness;

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kDiverged = 3,
    kCheckpointError = 4,
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config)
{
    auto* opt = cmd->add_option("--config", c.config, "Run config (YAML)");
    if (needs_config)
        opt->required()->check(CLI::ExistingFile);
    else
        opt->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Use this seed instead of the configured list");
    cmd->add_option("--out", c.out, "Output directory or file");
}

hx::RunConfig resolve(const Common& c)
{
    hx::RunConfig cfg = c.config.empty() ? hx::RunConfig{} : hx::load_config(c.config);
    hx::apply_env_overrides(cfg, hx::hexpert_environment());
    if (c.seed)
        cfg.seeds = {*c.seed};
    return cfg;
}

std::ostream& open_output(const std::string& path, std::ofstream& file)
{
    if (path.empty() || path == "-")
        return std::cout;
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    file.open(p, std::ios::binary);
    if (!file)
        throw hexpert::ConfigError("cannot write " + path);
    return file;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hierarchical bounded-rational expert networks for meta-learning"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run = app.add_subcommand("run", "Train every configured seed and write metrics, checkpoints and summary");
    add_common(run, run_opts, true);

    Common eval_opts;
    std::string checkpoint;
    std::optional<std::size_t> episodes, adapt_steps;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint on held-out tasks");
    add_common(evaluate, eval_opts, true);
    evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--episodes", episodes, "Evaluation episodes");
    evaluate->add_option("--adapt-steps", adapt_steps, "Adaptation steps per episode");

    std::vector<std::string> run_dirs;
    std::string rate_out;
    bool higher_is_better = false;
    auto* rate = app.add_subcommand("rate-utility", "Aggregate run directories into a rate-utility table");
    rate->add_option("runs", run_dirs, "Run directories")->required();
    rate->add_option("--out", rate_out, "Output CSV (default stdout)");
    rate->add_flag("--higher-is-better", higher_is_better, "Metric is accuracy or return rather than MSE");

    Common part_opts;
    std::string part_checkpoint;
    std::size_t grid = 50;
    auto* partition = app.add_subcommand("export-partition", "Selector partition of sinusoid task space");
    add_common(partition, part_opts, false);
    partition->add_option("--checkpoint", part_checkpoint, "Regression checkpoint")
        ->required()
        ->check(CLI::ExistingFile);
    partition->add_option("--grid", grid, "Cells per axis")->check(CLI::PositiveNumber);

    Common data_opts;
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic glyph dataset");
    add_common(gen, data_opts, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            hx::RunConfig cfg = resolve(run_opts);
            if (!run_opts.out.empty())
                cfg.output_dir = run_opts.out;
            hx::run_experiment(cfg, std::cerr);
        } else if (evaluate->parsed()) {
            hx::RunConfig cfg = resolve(eval_opts);
            if (episodes)
                cfg.eval_episodes = *episodes;
            if (adapt_steps)
                cfg.adapt_steps = *adapt_steps;
            std::vector<hx::SummaryRow> rows;
            for (auto seed : cfg.seeds)
                rows.push_back(hx::evaluate_checkpoint(cfg, checkpoint, seed));
            const std::filesystem::path out = eval_opts.out.empty() ? std::filesystem::path(checkpoint).parent_path() /
                                                                          "evaluation.csv"
                                                                    : std::filesystem::path(eval_opts.out);
            hx::write_summary(out, hx::to_string(cfg.kind), rows);
            for (const auto& r : rows)
                std::cout << "seed " << r.seed << " " << r.pool << ": " << r.metric_mean << " +- " << r.metric_std
                          << " over " << r.episodes << " episodes, I(X;M) " << r.mi_bits << " bits\n";
        } else if (rate->parsed()) {
            std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
            const auto table = hx::rate_utility(dirs, !higher_is_better);
            for (const auto& m : table.missing)
                std::cerr << "skipping " << m.string() << ": no summary.csv\n";
            std::ofstream file;
            hx::write_rate_utility(open_output(rate_out, file), table);
        } else if (partition->parsed()) {
            hx::RunConfig cfg = resolve(part_opts);
            const auto model = hexpert::supervised::load_model(part_checkpoint);
            const auto p = hx::export_partition(model, grid, grid, cfg.k, cfg.seeds.front());
            std::ofstream file;
            hx::write_partition(open_output(part_opts.out, file), p);
        } else if (gen->parsed()) {
            hx::RunConfig cfg = resolve(data_opts);
            const std::filesystem::path out = data_opts.out.empty() ? "glyphs.bin" : data_opts.out;
            hx::generate_dataset(cfg, cfg.seeds.front(), out);
            std::cerr << "wrote " << out.string() << '\n';
        }
    } catch (const hexpert::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const hexpert::DivergenceError& e) {
        std::cerr << "diverged: " << e.what() << '\n';
        return kDiverged;
    } catch (const hexpert::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return kCheckpointError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
