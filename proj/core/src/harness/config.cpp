#include <hexpert/harness/config.hpp>

#include <hexpert/errors.hpp>

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

extern char** environ;

namespace hexpert::harness {

namespace {

using Setter = std::function<void(RunConfig&, const YAML::Node&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
    std::string key;
    Setter set;
    Getter get;
};

[[noreturn]] void bad_value(const std::string& key, const std::string& expected)
{
    throw ConfigError("config key '" + key + "': expected " + expected);
}

std::string scalar_text(const YAML::Node& n, const std::string& key)
{
    if (!n.IsScalar())
        bad_value(key, "a scalar");
    return n.Scalar();
}

double as_double(const YAML::Node& n, const std::string& key)
{
    const std::string s = scalar_text(n, key);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        bad_value(key, "a number, got '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v))
        bad_value(key, "a finite number, got '" + s + "'");
    return v;
}

std::uint64_t as_uint(const YAML::Node& n, const std::string& key)
{
    const std::string s = scalar_text(n, key);
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); }))
        bad_value(key, "a non-negative integer, got '" + s + "'");
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        bad_value(key, "an integer in range, got '" + s + "'");
    }
}

bool as_bool(const YAML::Node& n, const std::string& key)
{
    const std::string s = scalar_text(n, key);
    if (s == "true")
        return true;
    if (s == "false")
        return false;
    bad_value(key, "true or false, got '" + s + "'");
}

template <class T, class F>
std::vector<T> as_list(const YAML::Node& n, const std::string& key, F&& item)
{
    if (!n.IsSequence())
        bad_value(key, "a list");
    std::vector<T> out;
    for (const auto& e : n)
        out.push_back(static_cast<T>(item(e, key)));
    return out;
}

tasks::Interval as_interval(const YAML::Node& n, const std::string& key)
{
    const auto v = as_list<double>(n, key, as_double);
    if (v.size() != 2 || !(v[0] <= v[1]))
        bad_value(key, "[lo, hi] with lo <= hi");
    return {v[0], v[1]};
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string fmt_list(const std::vector<T>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ", ";
        if constexpr (std::is_floating_point_v<T>)
            s += fmt(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s + "]";
}

std::string quoted(const std::string& s)
{
    YAML::Emitter e;
    e << YAML::DoubleQuoted << s;
    return e.c_str();
}

ExperimentKind parse_kind(const std::string& s, const std::string& key)
{
    if (s == "regression")
        return ExperimentKind::Regression;
    if (s == "classification")
        return ExperimentKind::Classification;
    if (s == "meta-rl")
        return ExperimentKind::MetaRl;
    bad_value(key, "regression, classification or meta-rl, got '" + s + "'");
}

#define HX_SIZE(name)                                                                                              \
    Field{#name, [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.name = as_uint(n, k); },           \
          [](const RunConfig& c) { return std::to_string(c.name); }}
#define HX_DOUBLE(name)                                                                                            \
    Field{#name, [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.name = as_double(n, k); },         \
          [](const RunConfig& c) { return fmt(c.name); }}
#define HX_BOOL(name)                                                                                              \
    Field{#name, [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.name = as_bool(n, k); },           \
          [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); }}
#define HX_STRING(name)                                                                                            \
    Field{#name, [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.name = scalar_text(n, k); },       \
          [](const RunConfig& c) { return quoted(c.name); }}
#define HX_PATH(name)                                                                                              \
    Field{#name, [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.name = scalar_text(n, k); },       \
          [](const RunConfig& c) { return quoted(c.name.string()); }}
#define HX_SIZES(name)                                                                                             \
    Field{#name,                                                                                                   \
          [](RunConfig& c, const YAML::Node& n, const std::string& k) {                                            \
              c.name = as_list<std::size_t>(n, k, as_uint);                                                        \
          },                                                                                                       \
          [](const RunConfig& c) { return fmt_list(c.name); }}
#define HX_RANGE(dist, member)                                                                                     \
    Field{#dist "." #member,                                                                                       \
          [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.dist.member = as_interval(n, k); },      \
          [](const RunConfig& c) { return fmt_list(std::vector<double>{c.dist.member.lo, c.dist.member.hi}); }}
#define HX_ENVS(dist)                                                                                              \
    HX_RANGE(dist, distance_penalty), HX_RANGE(dist, goal_position), HX_RANGE(dist, start_position),               \
        HX_RANGE(dist, motor_torque_scale),                                                                        \
        Field{#dist ".inverted_probability",                                                                       \
              [](RunConfig& c, const YAML::Node& n, const std::string& k) {                                        \
                  c.dist.inverted_probability = as_double(n, k);                                                   \
              },                                                                                                   \
              [](const RunConfig& c) { return fmt(c.dist.inverted_probability); }},                                \
        HX_RANGE(dist, gravity), HX_RANGE(dist, motor_actuation)

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        Field{"kind",
              [](RunConfig& c, const YAML::Node& n, const std::string& k) {
                  c.kind = parse_kind(scalar_text(n, k), k);
              },
              [](const RunConfig& c) { return to_string(c.kind); }},
        HX_SIZE(experts),
        HX_SIZE(k),
        HX_SIZE(meta_batch),
        HX_SIZE(episodes),
        HX_DOUBLE(beta1),
        HX_DOUBLE(beta2),
        HX_DOUBLE(gamma),
        HX_DOUBLE(prior_rate),
        HX_DOUBLE(lr_selector),
        HX_DOUBLE(lr_experts),
        HX_DOUBLE(lr_autoencoder),
        HX_DOUBLE(lr_critics),
        HX_SIZE(prefix_length),
        HX_SIZE(n_bins),
        Field{"seeds",
              [](RunConfig& c, const YAML::Node& n, const std::string& k) {
                  c.seeds = as_list<std::uint64_t>(n, k, as_uint);
              },
              [](const RunConfig& c) { return fmt_list(c.seeds); }},
        HX_PATH(output_dir),
        HX_PATH(dataset),
        HX_SIZES(selector_hidden),
        HX_DOUBLE(selector_dropout),
        HX_SIZES(expert_hidden),
        HX_SIZE(expert_filters),
        HX_STRING(selector_gradient),
        HX_SIZE(ae_batch),
        HX_STRING(pooling),
        HX_SIZE(eval_episodes),
        HX_SIZE(adapt_steps),
        HX_DOUBLE(adapt_lr),
        HX_SIZE(glyph_classes),
        HX_SIZE(glyph_heldout),
        HX_SIZE(glyph_samples),
        HX_SIZE(glyph_side),
        HX_BOOL(rotations),
        HX_SIZE(envs_per_update),
        HX_SIZE(rollouts_per_env),
        HX_SIZE(val_envs),
        HX_SIZE(val_rollouts_per_env),
        HX_SIZE(horizon),
        HX_SIZE(recurrent_hidden),
        HX_BOOL(selector_uses_train),
        HX_ENVS(train_envs),
        HX_ENVS(validation_envs),
    };
    return table;
}

const Field* find_field(const std::string& key)
{
    for (const auto& f : fields())
        if (f.key == key)
            return &f;
    return nullptr;
}

void flatten(const YAML::Node& node, const std::string& prefix, std::vector<std::pair<std::string, YAML::Node>>& out)
{
    for (const auto& kv : node) {
        const std::string key = prefix.empty() ? kv.first.Scalar() : prefix + "." + kv.first.Scalar();
        if (kv.second.IsMap())
            flatten(kv.second, key, out);
        else
            out.emplace_back(key, kv.second);
    }
}

void apply(RunConfig& c, const std::string& key, const YAML::Node& value)
{
    const Field* f = find_field(key);
    if (!f)
        throw ConfigError("unknown config key '" + key + "'");
    f->set(c, value, key);
}

void check_interval(const tasks::Interval& i, const std::string& key, bool positive)
{
    if (!(i.lo <= i.hi) || (positive && !(i.lo > 0.0)))
        throw ConfigError("config key '" + key + "': invalid range");
}

} // namespace

std::string to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::Regression:
        return "regression";
    case ExperimentKind::Classification:
        return "classification";
    case ExperimentKind::MetaRl:
        return "meta-rl";
    }
    return "unknown";
}

RunConfig parse_config(const std::string& text)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    RunConfig c;
    if (root.IsNull())
        return c;
    if (!root.IsMap())
        throw ConfigError("config must be a mapping of keys to values");
    std::vector<std::pair<std::string, YAML::Node>> entries;
    flatten(root, "", entries);
    for (const auto& [key, value] : entries)
        apply(c, key, value);
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value)
{
    YAML::Node node;
    try {
        node = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw ConfigError("value for '" + key + "' is not valid YAML: " + e.what());
    }
    if (node.IsNull())
        node = YAML::Node(value);
    apply(config, key, node);
}

void apply_env_overrides(RunConfig& config, const std::map<std::string, std::string>& environment)
{
    static const std::string prefix = "HEXPERT_";
    for (const auto& [name, value] : environment) {
        if (name.rfind(prefix, 0) != 0)
            continue;
        std::string key = name.substr(prefix.size());
        for (std::size_t pos; (pos = key.find("__")) != std::string::npos;)
            key.replace(pos, 2, ".");
        std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
        if (!find_field(key))
            throw ConfigError("environment variable " + name + " names no config key");
        set_config_value(config, key, value);
    }
    validate(config);
}

std::map<std::string, std::string> hexpert_environment()
{
    std::map<std::string, std::string> out;
    for (char** e = environ; e && *e; ++e) {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq != std::string::npos && entry.rfind("HEXPERT_", 0) == 0)
            out[entry.substr(0, eq)] = entry.substr(eq + 1);
    }
    return out;
}

void validate(const RunConfig& c)
{
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0))
            throw ConfigError(std::string("config key '") + key + "': must be positive");
    };
    auto nonzero = [](std::size_t v, const char* key) {
        if (v == 0)
            throw ConfigError(std::string("config key '") + key + "': must be at least 1");
    };
    nonzero(c.experts, "experts");
    nonzero(c.k, "k");
    nonzero(c.meta_batch, "meta_batch");
    positive(c.beta1, "beta1");
    positive(c.beta2, "beta2");
    positive(c.prior_rate, "prior_rate");
    if (c.prior_rate > 1.0)
        throw ConfigError("config key 'prior_rate': must not exceed 1");
    positive(c.lr_selector, "lr_selector");
    positive(c.lr_experts, "lr_experts");
    positive(c.lr_autoencoder, "lr_autoencoder");
    positive(c.lr_critics, "lr_critics");
    positive(c.adapt_lr, "adapt_lr");
    if (c.seeds.empty())
        throw ConfigError("config key 'seeds': needs at least one seed");
    if (c.selector_dropout < 0.0 || c.selector_dropout >= 1.0)
        throw ConfigError("config key 'selector_dropout': must lie in [0, 1)");
    if (c.selector_gradient != "enumerate" && c.selector_gradient != "sampled")
        throw ConfigError("config key 'selector_gradient': expected enumerate or sampled");
    if (c.pooling != "max" && c.pooling != "mean" && c.pooling != "min")
        throw ConfigError("config key 'pooling': expected max, mean or min");

    switch (c.kind) {
    case ExperimentKind::Regression:
        nonzero(c.n_bins, "n_bins");
        if (c.expert_hidden.size() > 1)
            throw ConfigError("config key 'expert_hidden': regression experts have one hidden layer");
        break;
    case ExperimentKind::Classification:
        nonzero(c.glyph_side, "glyph_side");
        if (c.glyph_side < 15)
            throw ConfigError("config key 'glyph_side': the autoencoder needs images of at least 15 pixels");
        if (c.dataset.empty() && c.glyph_heldout >= c.glyph_classes)
            throw ConfigError("config key 'glyph_heldout': must be below glyph_classes");
        break;
    case ExperimentKind::MetaRl:
        if (!(c.gamma >= 0.0 && c.gamma < 1.0))
            throw ConfigError("config key 'gamma': must lie in [0, 1)");
        nonzero(c.horizon, "horizon");
        if (c.prefix_length >= c.horizon)
            throw ConfigError("config key 'prefix_length': must be below horizon");
        nonzero(c.envs_per_update, "envs_per_update");
        nonzero(c.rollouts_per_env, "rollouts_per_env");
        nonzero(c.recurrent_hidden, "recurrent_hidden");
        for (const auto* d : {&c.train_envs, &c.validation_envs}) {
            const std::string p = d == &c.train_envs ? "train_envs." : "validation_envs.";
            check_interval(d->distance_penalty, p + "distance_penalty", true);
            check_interval(d->goal_position, p + "goal_position", false);
            check_interval(d->start_position, p + "start_position", false);
            check_interval(d->motor_torque_scale, p + "motor_torque_scale", false);
            check_interval(d->gravity, p + "gravity", false);
            check_interval(d->motor_actuation, p + "motor_actuation", false);
            if (d->inverted_probability < 0.0 || d->inverted_probability > 1.0)
                throw ConfigError("config key '" + p + "inverted_probability': must lie in [0, 1]");
        }
        break;
    }
}

std::string echo_config(const RunConfig& config)
{
    std::string out = "# hexpert resolved config v1\n";
    for (const auto& f : fields())
        out += f.key + ": " + f.get(config) + "\n";
    return out;
}

supervised::ModelSpec model_spec(const RunConfig& c)
{
    supervised::ModelSpec s;
    s.kind = c.kind == ExperimentKind::Classification ? supervised::TaskKind::Classification
                                                      : supervised::TaskKind::Regression;
    s.experts = c.experts;
    s.beta1 = c.beta1;
    s.beta2 = c.beta2;
    s.prior_rate = c.prior_rate;
    s.n_bins = c.n_bins;
    s.selector_hidden = c.selector_hidden;
    s.selector_dropout = c.selector_dropout;
    if (!c.expert_hidden.empty())
        s.expert_hidden = c.expert_hidden.front();
    s.expert_filters = c.expert_filters;
    s.side = c.glyph_side;
    s.pooling = c.pooling == "mean" ? embed::Pooling::Mean
                : c.pooling == "min" ? embed::Pooling::Min
                                     : embed::Pooling::Max;
    s.selector_adam = nn::AdamConfig{c.lr_selector};
    s.expert_adam = nn::AdamConfig{c.lr_experts};
    s.ae_adam = nn::AdamConfig{c.lr_autoencoder};
    return s;
}

supervised::TrainConfig train_config(const RunConfig& c)
{
    supervised::TrainConfig t;
    t.batches = c.episodes;
    t.meta_batch = c.meta_batch;
    t.selector_gradient = c.selector_gradient == "sampled" ? supervised::SelectorGradient::Sampled
                                                           : supervised::SelectorGradient::Enumerate;
    t.ae_batch = c.ae_batch;
    return t;
}

rl::RlConfig rl_config(const RunConfig& c)
{
    rl::RlConfig r;
    r.experts = c.experts;
    r.updates = c.episodes;
    r.envs_per_update = c.envs_per_update;
    r.rollouts_per_env = c.rollouts_per_env;
    r.val_envs = c.val_envs;
    r.val_rollouts_per_env = c.val_rollouts_per_env;
    r.prefix_length = c.prefix_length;
    r.horizon = c.horizon;
    r.beta1 = c.beta1;
    r.beta2 = c.beta2;
    r.gamma = c.gamma;
    r.prior_rate = c.prior_rate;
    r.selector_uses_train = c.selector_uses_train;
    r.selector_gradient =
        c.selector_gradient == "sampled" ? rl::SelectorGradient::Sampled : rl::SelectorGradient::Enumerate;
    if (!c.expert_hidden.empty())
        r.expert_hidden = c.expert_hidden;
    r.selector_hidden = c.recurrent_hidden;
    r.actor_adam = nn::AdamConfig{c.lr_experts};
    r.critic_adam = nn::AdamConfig{c.lr_critics};
    r.selector_actor_adam = nn::AdamConfig{c.lr_selector};
    r.selector_critic_adam = nn::AdamConfig{c.lr_critics};
    r.train_envs = c.train_envs;
    r.val_envs_dist = c.validation_envs;
    return r;
}

} // namespace hexpert::harness
