#pragma once

#include <hexpert/rl/trainer.hpp>
#include <hexpert/supervised/model.hpp>
#include <hexpert/supervised/trainer.hpp>
#include <hexpert/tasks/env_params.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hexpert::harness {

enum class ExperimentKind { Regression, Classification, MetaRl };

std::string to_string(ExperimentKind kind);

/// Resolved run configuration. Every field maps to one config key of the
/// same name; env-distribution ranges live under train_envs.* and
/// validation_envs.*.
struct RunConfig {
    ExperimentKind kind = ExperimentKind::Regression;
    std::size_t experts = 4;
    std::size_t k = 10;
    std::size_t meta_batch = 16;
    /// Meta-batches (supervised) or meta-updates (RL).
    std::size_t episodes = 2000;
    double beta1 = 10.0;
    double beta2 = 10.0;
    double gamma = 0.9;
    double prior_rate = 0.01;
    double lr_selector = 1e-3;
    double lr_experts = 3e-3;
    double lr_autoencoder = 1e-3;
    double lr_critics = 1e-3;
    std::size_t prefix_length = 10;
    std::size_t n_bins = 10;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::filesystem::path output_dir = "runs";
    /// Glyph dataset file or Omniglot image root; empty means synthetic glyphs.
    std::filesystem::path dataset;

    /// Empty means the default for the kind.
    std::vector<std::size_t> selector_hidden;
    double selector_dropout = 0.0;
    std::vector<std::size_t> expert_hidden;
    std::size_t expert_filters = 32;
    std::string selector_gradient = "enumerate";
    std::size_t ae_batch = 16;
    std::string pooling = "max";

    std::size_t eval_episodes = 200;
    std::size_t adapt_steps = 10;
    double adapt_lr = 1e-3;

    std::size_t glyph_classes = 62;
    std::size_t glyph_heldout = 12;
    std::size_t glyph_samples = 20;
    std::size_t glyph_side = 28;
    bool rotations = true;

    std::size_t envs_per_update = 16;
    std::size_t rollouts_per_env = 4;
    std::size_t val_envs = 16;
    std::size_t val_rollouts_per_env = 1;
    std::size_t horizon = 100;
    std::size_t recurrent_hidden = 64;
    bool selector_uses_train = true;
    tasks::EnvDistribution train_envs = tasks::EnvDistribution::train();
    tasks::EnvDistribution validation_envs = tasks::EnvDistribution::validation();
};

/// Parses a YAML mapping. Nested mappings flatten to dotted keys. Unknown
/// keys, malformed values and failed validation raise ConfigError naming the
/// key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// HEXPERT_<KEY> overrides <key>; "__" in the variable name stands for a
/// dot (HEXPERT_TRAIN_ENVS__GRAVITY -> train_envs.gravity). Values are YAML
/// scalars or flow sequences. Variables naming no key raise ConfigError.
void apply_env_overrides(RunConfig& config, const std::map<std::string, std::string>& environment);
/// Collects the HEXPERT_* variables of the process environment.
std::map<std::string, std::string> hexpert_environment();

/// Sets one dotted key from a YAML value string.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

void validate(const RunConfig& config);

/// Resolved configuration as YAML, keys in a fixed order.
std::string echo_config(const RunConfig& config);

supervised::ModelSpec model_spec(const RunConfig& config);
supervised::TrainConfig train_config(const RunConfig& config);
rl::RlConfig rl_config(const RunConfig& config);

} // namespace hexpert::harness
