// Acceptance run: one PASS/FAIL line per criterion.
#include "gradient_check.hpp"

#include <hexpert/br/distributions.hpp>
#include <hexpert/br/information.hpp>
#include <hexpert/errors.hpp>
#include <hexpert/harness/analysis.hpp>
#include <hexpert/harness/config.hpp>
#include <hexpert/harness/metrics.hpp>
#include <hexpert/harness/runner.hpp>
#include <hexpert/nn/layers.hpp>
#include <hexpert/nn/loss.hpp>
#include <hexpert/nn/ops.hpp>
#include <hexpert/rl/bandit.hpp>
#include <hexpert/rl/trainer.hpp>
#include <hexpert/supervised/model.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
namespace hx = hexpert::harness;
namespace nn = hexpert::nn;
namespace br = hexpert::br;
namespace rl = hexpert::rl;
using hexpert::Rng;

namespace {

// Tolerances and budgets.
constexpr double kGradRelTol = 1e-4;
constexpr std::size_t kGradMinInstances = 50;
constexpr double kGradBudgetS = 60.0;
constexpr double kInfoTol = 1e-9;
constexpr std::size_t kInfoInstances = 2000;
constexpr double kSinusoidSlack = 0.10;
constexpr double kSinusoidBudgetS = 30 * 60.0;
constexpr double kMinSpecializationBits = 1.0;
constexpr std::size_t kPartitionGrid = 50;
constexpr std::size_t kMinContiguousExperts = 3;
constexpr double kMinComponentShare = 0.60;
constexpr double kAccuracyMargin = 0.03;
constexpr double kChanceAccuracy = 0.5;
constexpr double kClassificationBudgetS = 60 * 60.0;
constexpr double kRlBudgetS = 2 * 60 * 60.0;
constexpr std::size_t kMiSmoothingWindow = 50;
constexpr double kBanditOptimalShare = 0.98;
constexpr double kBanditMaxKl = 0.05;

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

std::size_t uniform_index(Rng& rng, std::size_t n)
{
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double mean_of(const std::vector<double>& v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string list(const std::vector<double>& v)
{
    std::string s;
    for (double x : v)
        s += (s.empty() ? "" : " ") + fmt("%.3f", x);
    return s;
}

/// Runs the config unless summary.csv already exists (--reuse) and returns it.
std::vector<hx::SummaryRow> run_or_reuse(const hx::RunConfig& cfg, bool reuse)
{
    if (!(reuse && fs::exists(cfg.output_dir / "summary.csv"))) {
        std::ostringstream log;
        hx::run_experiment(cfg, log);
    }
    return hx::read_summary(cfg.output_dir / "summary.csv");
}

// 1 -------------------------------------------------------------------------

nn::Parameter random_param(const std::string& name, nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    nn::Parameter p{name, nn::Tensor(std::move(shape))};
    for (auto& v : p.value.values())
        v = hexpert::uniform(rng, lo, hi);
    return p;
}

nn::Tensor random_tensor(nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    nn::Tensor t(std::move(shape));
    for (auto& v : t.values())
        v = hexpert::uniform(rng, lo, hi);
    return t;
}

nn::Tensor one_hot_rows(std::size_t n, std::size_t c, Rng& rng)
{
    nn::Tensor t({n, c});
    for (std::size_t i = 0; i < n; ++i)
        t[i * c + uniform_index(rng, c)] = 1.0;
    return t;
}

using Instance = std::function<hexpert::testing::GradCheckResult(Rng&)>;

std::vector<std::pair<std::string, Instance>> gradient_instances()
{
    using hexpert::testing::gradient_check;
    std::vector<std::pair<std::string, Instance>> out;
    for (auto act : {nn::Activation::Identity, nn::Activation::Relu, nn::Activation::LeakyRelu,
                     nn::Activation::Tanh, nn::Activation::Sigmoid})
        out.emplace_back("dense", [act](Rng& rng) {
            std::vector<nn::LayerParams> layers{nn::LayerParams::dense("d0", 3, 4, act, rng),
                                                nn::LayerParams::dense("d1", 4, 2, nn::Activation::Identity, rng)};
            for (auto* p : nn::parameters_of(std::span<nn::LayerParams>(layers)))
                for (auto& v : p->value.values())
                    v = hexpert::uniform(rng, -1.0, 1.0);
            const auto x = random_tensor({5, 3}, rng);
            return gradient_check(nn::parameters_of(std::span<nn::LayerParams>(layers)), [&](nn::Tape& t) {
                return nn::sum(nn::square(nn::forward(layers, t.constant(x))));
            });
        });
    for (std::size_t stride : {1, 2})
        out.emplace_back("conv3x3", [stride](Rng& rng) {
            std::vector<nn::LayerParams> layers{
                nn::LayerParams::conv3x3("c0", 2, 2, stride, nn::Activation::Tanh, rng)};
            for (auto* p : nn::parameters_of(std::span<nn::LayerParams>(layers)))
                for (auto& v : p->value.values())
                    v = hexpert::uniform(rng, -1.0, 1.0);
            const auto x = random_tensor({2, 6, 6, 2}, rng);
            return gradient_check(nn::parameters_of(std::span<nn::LayerParams>(layers)), [&](nn::Tape& t) {
                return nn::sum(nn::square(nn::forward(layers, t.constant(x))));
            });
        });
    out.emplace_back("resize_nearest", [](Rng& rng) {
        auto p = random_param("x", {1, 3, 3, 2}, rng);
        std::vector<nn::Parameter*> ps{&p};
        const auto w = random_tensor({1, 5, 5, 2}, rng);
        return gradient_check(ps, [&](nn::Tape& t) {
            return nn::sum(nn::mul(nn::resize_nearest(t.parameter(p), 5, 5), t.constant(w)));
        });
    });
    out.emplace_back("gated_recurrent", [](Rng& rng) {
        auto cell = nn::LayerParams::gated_recurrent("g", 3, 4, rng);
        std::vector<nn::Parameter*> ps{&cell.weights, &cell.biases};
        for (auto* p : ps)
            for (auto& v : p->value.values())
                v = hexpert::uniform(rng, -1.0, 1.0);
        const auto x0 = random_tensor({2, 3}, rng), x1 = random_tensor({2, 3}, rng);
        return gradient_check(ps, [&](nn::Tape& t) {
            auto s = nn::zero_state(t, cell, 2);
            auto [s1, h1] = nn::recurrent_step(cell, s, t.constant(x0));
            auto [s2, h2] = nn::recurrent_step(cell, s1, t.constant(x1));
            return nn::add(nn::sum(nn::square(h2)), nn::sum(h1));
        });
    });
    out.emplace_back("cross_entropy", [](Rng& rng) {
        auto p = random_param("logits", {4, 3}, rng);
        std::vector<nn::Parameter*> ps{&p};
        const auto y = one_hot_rows(4, 3, rng);
        return gradient_check(ps, [&](nn::Tape& t) {
            return nn::loss(nn::LossKind::CrossEntropy, nn::softmax_rows(t.parameter(p)), y);
        });
    });
    out.emplace_back("softmax_cross_entropy", [](Rng& rng) {
        auto p = random_param("logits", {4, 3}, rng);
        std::vector<nn::Parameter*> ps{&p};
        std::vector<std::size_t> labels(4);
        for (auto& l : labels)
            l = uniform_index(rng, 3);
        return gradient_check(ps, [&](nn::Tape& t) { return nn::softmax_cross_entropy(t.parameter(p), labels); });
    });
    out.emplace_back("mse", [](Rng& rng) {
        auto p = random_param("pred", {3, 2}, rng);
        std::vector<nn::Parameter*> ps{&p};
        const auto y = random_tensor({3, 2}, rng);
        return gradient_check(ps, [&](nn::Tape& t) { return nn::loss(nn::LossKind::Mse, t.parameter(p), y); });
    });
    out.emplace_back("huber", [](Rng& rng) {
        auto p = random_param("pred", {3, 2}, rng, -3.0, 3.0);
        std::vector<nn::Parameter*> ps{&p};
        const auto y = random_tensor({3, 2}, rng);
        return gradient_check(ps, [&](nn::Tape& t) { return nn::loss(nn::LossKind::Huber, t.parameter(p), y); });
    });
    out.emplace_back("gaussian_log_density", [](Rng& rng) {
        auto mu = random_param("mean", {3, 2}, rng), ls = random_param("log_std", {3, 2}, rng, -1.0, 0.5);
        std::vector<nn::Parameter*> ps{&mu, &ls};
        const auto x = random_tensor({3, 2}, rng, -2.0, 2.0);
        return gradient_check(ps, [&](nn::Tape& t) {
            return nn::sum(br::gaussian_log_density(t.parameter(mu), t.parameter(ls), x));
        });
    });
    out.emplace_back("gaussian_kl", [](Rng& rng) {
        auto mu = random_param("mean", {3, 2}, rng), ls = random_param("log_std", {3, 2}, rng, -1.0, 0.5);
        std::vector<nn::Parameter*> ps{&mu, &ls};
        const br::DiagGaussian prior({hexpert::uniform(rng, -1.0, 1.0), hexpert::uniform(rng, -1.0, 1.0)},
                                     {hexpert::uniform(rng, -1.0, 0.5), hexpert::uniform(rng, -1.0, 0.5)});
        return gradient_check(ps, [&](nn::Tape& t) {
            return nn::sum(br::gaussian_kl_rows(t.parameter(mu), t.parameter(ls), prior));
        });
    });
    out.emplace_back("categorical_kl", [](Rng& rng) {
        auto p = random_param("logits", {3, 4}, rng);
        std::vector<nn::Parameter*> ps{&p};
        std::vector<double> q(4);
        for (auto& v : q)
            v = hexpert::uniform(rng, 0.1, 1.0);
        const double s = std::accumulate(q.begin(), q.end(), 0.0);
        for (auto& v : q)
            v /= s;
        const br::Categorical prior(q);
        return gradient_check(ps, [&](nn::Tape& t) {
            return nn::sum(br::categorical_kl_rows(nn::log_softmax_rows(t.parameter(p)), prior));
        });
    });
    out.emplace_back("reparam_sample", [](Rng& rng) {
        auto mu = random_param("mean", {2, 2}, rng), ls = random_param("log_std", {2, 2}, rng, -1.0, 0.5);
        std::vector<nn::Parameter*> ps{&mu, &ls};
        const auto noise = random_tensor({2, 2}, rng, -2.0, 2.0);
        return gradient_check(ps, [&](nn::Tape& t) {
            auto s = br::sample_reparam(t.parameter(mu), t.parameter(ls), noise);
            return nn::add(nn::sum(nn::tanh(s.action)), nn::sum(s.log_density));
        });
    });
    return out;
}

Outcome criterion_gradients(const fs::path&, bool)
{
    const auto t0 = Clock::now();
    const auto kinds = gradient_instances();
    const std::size_t per_kind = (kGradMinInstances + kinds.size() - 1) / kinds.size();
    std::size_t n = 0, failed = 0;
    double worst = 0.0;
    std::string worst_where;
    for (std::size_t k = 0; k < kinds.size(); ++k)
        for (std::size_t i = 0; i < per_kind; ++i) {
            Rng rng = hexpert::stream_rng(1, {k, i});
            const auto r = kinds[k].second(rng);
            ++n;
            failed += r.worst_relative > kGradRelTol;
            if (r.worst_relative > worst) {
                worst = r.worst_relative;
                worst_where = kinds[k].first + " " + r.worst_entry;
            }
        }
    const double secs = seconds_since(t0);
    Outcome o;
    o.pass = failed == 0 && n >= kGradMinInstances && secs < kGradBudgetS;
    o.detail = fmt("%zu instances over %zu kinds, %zu above %.0e, worst rel %.2e, %.1fs (budget %.0fs)", n,
                   kinds.size(), failed, kGradRelTol, worst, secs, kGradBudgetS);
    if (failed)
        o.detail += " at " + worst_where;
    return o;
}

// 2 -------------------------------------------------------------------------

Outcome criterion_information(const fs::path&, bool)
{
    Rng rng = hexpert::stream_rng(2, {0});
    double worst_kl = 0.0, worst_mi = 0.0, worst_excess = -1e300;
    for (std::size_t i = 0; i < kInfoInstances; ++i) {
        const std::size_t m = 1 + uniform_index(rng, 8), x = 1 + uniform_index(rng, 12);
        auto draw = [&](std::size_t n) {
            std::vector<double> v(n);
            for (auto& e : v)
                e = hexpert::uniform(rng, 0.01, 1.0);
            const double s = std::accumulate(v.begin(), v.end(), 0.0);
            for (auto& e : v)
                e /= s;
            return v;
        };
        const auto p = draw(m), q = draw(m);
        double kl = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            kl += p[j] * std::log(p[j] / q[j]);
        worst_kl = std::max(worst_kl, std::abs(br::kl(br::Categorical(p), br::Categorical(q)) - kl));

        nn::Tensor joint({m, x});
        for (auto& v : joint.values())
            v = uniform_index(rng, 4) == 0 ? 0.0 : static_cast<double>(uniform_index(rng, 20));
        joint[0] += 1.0;
        const double total = std::accumulate(joint.values().begin(), joint.values().end(), 0.0);
        std::vector<double> pm(m, 0.0), px(x, 0.0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < x; ++b) {
                pm[a] += joint[a * x + b] / total;
                px[b] += joint[a * x + b] / total;
            }
        double mi = 0.0;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < x; ++b) {
                const double pj = joint[a * x + b] / total;
                if (pj > 0.0)
                    mi += pj * std::log2(pj / (pm[a] * px[b]));
            }
        const double got = br::mutual_information_bits(joint);
        worst_mi = std::max(worst_mi, std::abs(got - mi));
        worst_excess = std::max(worst_excess, got - std::log2(static_cast<double>(m)));
    }
    Outcome o;
    o.pass = worst_kl <= kInfoTol && worst_mi <= kInfoTol && worst_excess <= 0.0;
    o.detail = fmt("%zu instances, max |KL err| %.1e, max |MI err| %.1e, max MI - log2 M %.1e", kInfoInstances,
                   worst_kl, worst_mi, worst_excess);
    return o;
}

// 3, 4, 5 -------------------------------------------------------------------

hx::RunConfig sinusoid_config(const fs::path& work, std::size_t experts)
{
    hx::RunConfig c = hx::parse_config("kind: regression\n"
                                       "k: 10\n"
                                       "episodes: 2000\n"
                                       "meta_batch: 16\n"
                                       "beta1: 10\n"
                                       "beta2: 10\n"
                                       "eval_episodes: 500\n"
                                       "adapt_steps: 10\n");
    c.experts = experts;
    c.seeds = kSeeds;
    c.output_dir = work / ("sinusoid_m" + std::to_string(experts));
    return c;
}

struct SinusoidRuns {
    std::map<std::size_t, std::vector<double>> mse, mi;
    double seconds = 0.0;
};

const SinusoidRuns& sinusoid_runs(const fs::path& work, bool reuse)
{
    static std::optional<SinusoidRuns> cached;
    if (!cached) {
        SinusoidRuns r;
        const auto t0 = Clock::now();
        for (std::size_t m : {1, 2, 4, 8})
            for (const auto& row : run_or_reuse(sinusoid_config(work, m), reuse)) {
                r.mse[m].push_back(row.metric_mean);
                r.mi[m].push_back(row.mi_bits);
            }
        r.seconds = seconds_since(t0);
        cached = r;
    }
    return *cached;
}

Outcome criterion_sinusoid_trend(const fs::path& work, bool reuse)
{
    const auto& r = sinusoid_runs(work, reuse);
    const double m1 = mean_of(r.mse.at(1)), m2 = mean_of(r.mse.at(2)), m4 = mean_of(r.mse.at(4)),
                 m8 = mean_of(r.mse.at(8));
    Outcome o;
    o.pass = m4 < m1 && m8 <= m4 * (1.0 + kSinusoidSlack) && m1 > m2 && r.seconds <= kSinusoidBudgetS;
    o.detail = fmt("mean MSE M=1 %.3f, M=2 %.3f, M=4 %.3f, M=8 %.3f (need M4<M1, M8<=%.3f, M1>M2), %.0fs", m1,
                   m2, m4, m8, m4 * (1.0 + kSinusoidSlack), r.seconds);
    return o;
}

Outcome criterion_specialization(const fs::path& work, bool reuse)
{
    const auto& r = sinusoid_runs(work, reuse);
    const double mi = mean_of(r.mi.at(4));
    Outcome o;
    o.pass = mi >= kMinSpecializationBits;
    o.detail = fmt("M=4 I(X;M) %.3f bits mean over seeds [%s], need >= %.1f", mi, list(r.mi.at(4)).c_str(),
                   kMinSpecializationBits);
    return o;
}

Outcome criterion_partition(const fs::path& work, bool reuse)
{
    sinusoid_runs(work, reuse);
    const auto cfg = sinusoid_config(work, 4);
    const auto model = hexpert::supervised::load_model(hx::checkpoint_path(cfg, kSeeds.front()));
    const auto p = hx::export_partition(model, kPartitionGrid, kPartitionGrid, cfg.k, kSeeds.front());
    {
        std::ofstream out(cfg.output_dir / "partition.csv");
        hx::write_partition(out, p);
    }
    const auto own = hx::ownership(p, 4, false);
    std::size_t contiguous = 0;
    std::string shares;
    for (const auto& s : own) {
        contiguous += s.cells > 0 && s.largest_component_share >= kMinComponentShare;
        shares += fmt(" %zu:%.2f", s.cells, s.largest_component_share);
    }
    Outcome o;
    o.pass = contiguous >= kMinContiguousExperts;
    o.detail = fmt("%zu experts own a component >= %.0f%% of their cells (cells:share%s), need >= %zu",
                   contiguous, 100 * kMinComponentShare, shares.c_str(), kMinContiguousExperts);
    return o;
}

// 6 -------------------------------------------------------------------------

hx::RunConfig glyph_config(const fs::path& work, std::size_t experts)
{
    hx::RunConfig c = hx::parse_config("kind: classification\n"
                                       "k: 5\n"
                                       "glyph_classes: 62\n"
                                       "glyph_heldout: 12\n"
                                       "glyph_samples: 20\n"
                                       "episodes: 1500\n"
                                       "meta_batch: 8\n"
                                       "expert_filters: 8\n"
                                       "adapt_steps: 10\n"
                                       "adapt_lr: 1e-2\n"
                                       "eval_episodes: 200\n");
    c.experts = experts;
    c.seeds = kSeeds;
    c.output_dir = work / ("glyphs_m" + std::to_string(experts));
    return c;
}

Outcome criterion_classification(const fs::path& work, bool reuse)
{
    const auto t0 = Clock::now();
    std::map<std::size_t, std::vector<double>> acc;
    for (std::size_t m : {2, 8})
        for (const auto& row : run_or_reuse(glyph_config(work, m), reuse))
            acc[m].push_back(row.metric_mean);
    const double secs = seconds_since(t0);
    const double a2 = mean_of(acc[2]), a8 = mean_of(acc[8]);
    double lowest = 1.0;
    for (const auto& [m, v] : acc)
        for (double a : v)
            lowest = std::min(lowest, a);
    Outcome o;
    o.pass = a8 >= a2 + kAccuracyMargin && lowest > kChanceAccuracy && secs <= kClassificationBudgetS;
    o.detail = fmt("held-out accuracy M=2 %.3f [%s], M=8 %.3f [%s], lowest %.3f, %.0fs (budget %.0fs)", a2,
                   list(acc[2]).c_str(), a8, list(acc[8]).c_str(), lowest, secs, kClassificationBudgetS);
    return o;
}

// 7 -------------------------------------------------------------------------

hx::RunConfig pendulum_config(const fs::path& work, std::size_t experts)
{
    hx::RunConfig c = hx::parse_config("kind: meta-rl\n"
                                       "episodes: 1000\n"
                                       "prefix_length: 10\n"
                                       "lr_experts: 1e-3\n"
                                       "lr_critics: 1e-3\n"
                                       "lr_selector: 1e-3\n"
                                       "eval_episodes: 200\n");
    c.experts = experts;
    c.seeds = kSeeds;
    c.output_dir = work / ("pendulum_m" + std::to_string(experts));
    return c;
}

/// Mean over seeds of the per-update MI, then a trailing moving average.
std::vector<double> smoothed_mi(const fs::path& metrics)
{
    std::map<std::size_t, std::pair<double, std::size_t>> by_update;
    for (const auto& r : hx::read_metrics(metrics)) {
        auto& [s, n] = by_update[r.episode];
        s += r.mi_bits;
        ++n;
    }
    std::vector<double> mean;
    for (const auto& [u, sn] : by_update)
        mean.push_back(sn.first / static_cast<double>(sn.second));
    std::vector<double> out;
    double acc = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        acc += mean[i];
        if (i >= kMiSmoothingWindow)
            acc -= mean[i - kMiSmoothingWindow];
        out.push_back(acc / static_cast<double>(std::min(i + 1, kMiSmoothingWindow)));
    }
    return out;
}

Outcome criterion_meta_rl(const fs::path& work, bool reuse)
{
    const auto t0 = Clock::now();
    std::map<std::size_t, std::vector<double>> ret;
    for (std::size_t m : {1, 4})
        for (const auto& row : run_or_reuse(pendulum_config(work, m), reuse))
            ret[m].push_back(row.metric_mean);
    const double secs = seconds_since(t0);
    const auto mi = smoothed_mi(pendulum_config(work, 4).output_dir / "metrics.csv");
    const double start = mi[std::min(mi.size() - 1, kMiSmoothingWindow - 1)], end = mi.back();
    const double r1 = mean_of(ret[1]), r4 = mean_of(ret[4]);
    Outcome o;
    o.pass = r4 >= r1 && end > start && secs <= kRlBudgetS;
    o.detail = fmt("validation return M=1 %.3f [%s], M=4 %.3f [%s]; smoothed MI start %.4f end %.4f bits; %.0fs "
                   "(budget %.0fs)",
                   r1, list(ret[1]).c_str(), r4, list(ret[4]).c_str(), start, end, secs, kRlBudgetS);
    return o;
}

// 8 -------------------------------------------------------------------------

bool same_trajectory(const rl::Trajectory& a, const rl::Trajectory& b)
{
    if (a.steps.size() != b.steps.size() || a.final_state != b.final_state)
        return false;
    for (std::size_t t = 0; t < a.steps.size(); ++t) {
        const auto &x = a.steps[t], &y = b.steps[t];
        if (x.state != y.state || x.action != y.action || x.reward != y.reward || x.log_prob != y.log_prob ||
            x.log_ratio != y.log_ratio)
            return false;
    }
    return true;
}

Outcome criterion_degenerate(const fs::path&, bool)
{
    rl::RlConfig c;
    c.experts = 1;
    c.prefix_length = 0;
    c.updates = 20;
    c.envs_per_update = 4;
    c.rollouts_per_env = 2;
    c.val_envs = 4;
    const auto train = rl::pendulum_family(c.train_envs), val = rl::pendulum_family(c.val_envs_dist);
    std::size_t compared = 0, mismatched = 0;
    for (std::uint64_t seed : kSeeds) {
        auto sys = rl::make_rl_system(c, seed);
        std::vector<rl::Trajectory> hier;
        rl::meta_train_rl(sys, train, val, seed, {},
                          [&](std::size_t, const rl::Trajectory& t) { hier.push_back(t); });
        const auto flat = rl::train_flat(c, train, val, seed);
        if (hier.size() != flat.trajectories.size()) {
            mismatched += std::max(hier.size(), flat.trajectories.size());
            continue;
        }
        for (std::size_t i = 0; i < hier.size(); ++i) {
            ++compared;
            mismatched += !same_trajectory(hier[i], flat.trajectories[i]);
        }
    }
    Outcome o;
    o.pass = compared > 0 && mismatched == 0;
    o.detail = fmt("%zu trajectories over %zu seeds, %zu differ", compared, kSeeds.size(), mismatched);
    return o;
}

// 9 -------------------------------------------------------------------------

rl::RlConfig bandit_config(double beta2)
{
    rl::RlConfig c;
    c.experts = 1;
    c.prefix_length = 0;
    c.horizon = 1;
    c.beta2 = beta2;
    c.updates = 1000;
    c.envs_per_update = 1;
    c.rollouts_per_env = 32;
    c.val_envs = 1;
    c.gamma = 0.0;
    c.actor_adam.learning_rate = 1e-3;
    return c;
}

Outcome criterion_beta_limits(const fs::path&, bool)
{
    const auto bandit = rl::BanditEnv::two_armed(0.5, 1.0);
    const auto env = rl::fixed_environment([bandit] { return std::make_unique<rl::BanditEnv>(bandit); });

    auto greedy = rl::make_rl_system(bandit_config(100.0), 1, 1);
    rl::meta_train_rl(greedy, env, env, 1);
    const auto a = greedy.experts[0].act({1.0}, 0.0);
    const double p1 = 0.5 * std::erfc(-a.mean / std::exp(a.log_std) / std::sqrt(2.0));
    const double expected = bandit.expected_reward(p1), best = bandit.best_reward();

    auto cautious = rl::make_rl_system(bandit_config(0.01), 1, 1);
    double max_kl = 0.0;
    rl::meta_train_rl(cautious, env, env, 1, [&](const rl::RlMetrics& m) { max_kl = std::max(max_kl, m.expert_kl); });

    Outcome o;
    o.pass = expected >= kBanditOptimalShare * best && max_kl < kBanditMaxKl;
    o.detail = fmt("beta2=100 expected reward %.4f of optimum %.4f (need >= %.0f%%); beta2=0.01 max KL %.4f nats "
                   "(need < %.2f)",
                   expected, best, 100 * kBanditOptimalShare, max_kl, kBanditMaxKl);
    return o;
}

// 10 ------------------------------------------------------------------------

Outcome criterion_determinism(const fs::path& work, bool)
{
    std::vector<hx::RunConfig> configs;
    {
        auto c = hx::parse_config("kind: regression\nexperts: 4\nepisodes: 100\neval_episodes: 20\nseeds: [1, 2]\n");
        configs.push_back(c);
    }
    {
        auto c = hx::parse_config("kind: classification\nexperts: 2\nepisodes: 5\nmeta_batch: 2\n"
                                  "glyph_classes: 10\nglyph_heldout: 3\nglyph_samples: 6\nexpert_filters: 4\n"
                                  "eval_episodes: 5\nadapt_steps: 2\nseeds: [1]\n");
        configs.push_back(c);
    }
    {
        auto c = hx::parse_config("kind: meta-rl\nexperts: 2\nepisodes: 4\nenvs_per_update: 2\nval_envs: 2\n"
                                  "rollouts_per_env: 2\nexpert_hidden: [16, 16]\nrecurrent_hidden: 16\n"
                                  "eval_episodes: 4\nseeds: [1]\n");
        configs.push_back(c);
    }
    std::size_t identical = 0;
    std::string kinds;
    for (auto& c : configs) {
        std::string bytes[2];
        for (int rep = 0; rep < 2; ++rep) {
            c.output_dir = work / ("determinism_" + hx::to_string(c.kind) + "_" + std::to_string(rep));
            fs::remove_all(c.output_dir);
            std::ostringstream log;
            hx::run_experiment(c, log);
            bytes[rep] = slurp(c.output_dir / "metrics.csv");
        }
        const bool same = !bytes[0].empty() && bytes[0] == bytes[1];
        identical += same;
        kinds += " " + hx::to_string(c.kind) + (same ? ":identical" : ":DIFFERENT");
    }
    Outcome o;
    o.pass = identical == configs.size();
    o.detail = "metrics.csv repeated byte comparison," + kinds;
    return o;
}

struct Criterion {
    int id;
    const char* name;
    Outcome (*run)(const fs::path&, bool);
};

const Criterion kCriteria[] = {
    {1, "gradient correctness", criterion_gradients},
    {2, "information-measure oracle", criterion_information},
    {3, "sinusoid rate-utility trend", criterion_sinusoid_trend},
    {4, "selector specialization", criterion_specialization},
    {5, "partition structure", criterion_partition},
    {6, "classification trend", criterion_classification},
    {7, "meta-RL trend", criterion_meta_rl},
    {8, "degenerate-hierarchy equivalence", criterion_degenerate},
    {9, "beta-limit behaviour", criterion_beta_limits},
    {10, "determinism", criterion_determinism},
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    std::string work = "acceptance_runs";
    std::vector<int> only;
    bool reuse = false;
    bool strict = false;
    app.add_option("--work-dir", work, "Directory for training runs");
    app.add_option("--only", only, "Run only these criteria");
    app.add_flag("--reuse", reuse, "Reuse finished runs found in the work directory");
    app.add_flag("--strict", strict, "Exit non-zero when any criterion fails");
    CLI11_PARSE(app, argc, argv);

    fs::create_directories(work);
    std::ofstream report(fs::path(work) / "report.txt");
    const std::set<int> wanted(only.begin(), only.end());
    int failed = 0, ran = 0;
    bool errored = false;
    for (const auto& c : kCriteria) {
        if (!wanted.empty() && !wanted.count(c.id))
            continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run(work, reuse);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
            errored = true;
        }
        ++ran;
        failed += !o.pass;
        const std::string line = "criterion " + std::to_string(c.id) + " " + (o.pass ? "PASS" : "FAIL") + " " +
                                 c.name + ": " + o.detail + fmt(" [%.1fs]", seconds_since(t0));
        std::cout << line << std::endl;
        report << line << std::endl;
    }
    const std::string total = std::to_string(ran - failed) + "/" + std::to_string(ran) + " criteria pass";
    std::cout << total << std::endl;
    report << total << std::endl;
    return errored || (strict && failed) ? 1 : 0;
}
