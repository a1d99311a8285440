#include <hexpert/harness/metrics.hpp>

#include <hexpert/errors.hpp>

#include <charconv>
#include <sstream>

namespace hexpert::harness {

namespace {

constexpr const char* kColumns = "episode,seed,experts,utility,metric,mi_bits,expert_kl,selector_entropy";
constexpr const char* kSummaryColumns =
    "seed,experts,pool,episodes,adapt_steps,metric_mean,metric_std,mi_bits,expert_counts";

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep))
        out.push_back(cell);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path)
{
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("malformed number '" + s + "' in " + path.string());
    return v;
}

std::uint64_t parse_uint(const std::string& s, const std::filesystem::path& path)
{
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("malformed integer '" + s + "' in " + path.string());
    return v;
}

void check_version(const std::string& first_line, const std::string& what, const std::filesystem::path& path)
{
    const std::string tag = "# hexpert " + what + " v";
    if (first_line.rfind(tag, 0) != 0)
        throw ConfigError(path.string() + " lacks the '" + tag + "' header");
    const int version = std::atoi(first_line.c_str() + tag.size());
    if (version != kMetricsSchemaVersion)
        throw ConfigError(path.string() + " has schema version " + std::to_string(version) +
                          ", this build reads version " + std::to_string(kMetricsSchemaVersion));
}

} // namespace

std::string format_double(double v)
{
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, p) : std::string("nan");
}

std::string metrics_header(const std::string& kind)
{
    return "# hexpert metrics v" + std::to_string(kMetricsSchemaVersion) + " kind=" + kind + "\n" + kColumns + "\n";
}

std::string format_row(const MetricsRow& r)
{
    std::string s = std::to_string(r.episode) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.experts);
    for (double v : {r.utility, r.metric, r.mi_bits, r.expert_kl, r.selector_entropy})
        s += ',' + format_double(v);
    return s + '\n';
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, const std::string& kind)
{
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app | std::ios::binary);
    if (!out_)
        throw ConfigError("cannot write " + path.string());
    if (fresh)
        out_ << metrics_header(kind);
}

void MetricsWriter::write(const MetricsRow& row)
{
    out_ << format_row(row);
}

std::vector<MetricsRow> read_metrics(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    check_version(line, "metrics", path);
    std::getline(in, line);
    std::vector<MetricsRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto c = split(line, ',');
        if (c.size() != 8)
            throw ConfigError("metrics row with " + std::to_string(c.size()) + " columns in " + path.string());
        MetricsRow r;
        r.episode = parse_uint(c[0], path);
        r.seed = parse_uint(c[1], path);
        r.experts = parse_uint(c[2], path);
        r.utility = parse_double(c[3], path);
        r.metric = parse_double(c[4], path);
        r.mi_bits = parse_double(c[5], path);
        r.expert_kl = parse_double(c[6], path);
        r.selector_entropy = parse_double(c[7], path);
        rows.push_back(r);
    }
    return rows;
}

TimingWriter::TimingWriter(const std::filesystem::path& path)
{
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    out_.open(path, std::ios::app);
    if (!out_)
        throw ConfigError("cannot write " + path.string());
    if (fresh)
        out_ << "# hexpert timing v" << kMetricsSchemaVersion << "\nepisode,seed,wall_ms\n";
}

void TimingWriter::write(std::size_t episode, std::uint64_t seed, double wall_ms)
{
    out_ << episode << ',' << seed << ',' << format_double(wall_ms) << '\n';
}

void write_summary(const std::filesystem::path& path, const std::string& kind, const std::vector<SummaryRow>& rows)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    out << "# hexpert summary v" << kMetricsSchemaVersion << " kind=" << kind << '\n' << kSummaryColumns << '\n';
    for (const auto& r : rows) {
        out << r.seed << ',' << r.experts << ',' << r.pool << ',' << r.episodes << ',' << r.adapt_steps << ','
            << format_double(r.metric_mean) << ',' << format_double(r.metric_std) << ','
            << format_double(r.mi_bits) << ',';
        for (std::size_t i = 0; i < r.expert_counts.size(); ++i)
            out << (i ? ";" : "") << r.expert_counts[i];
        out << '\n';
    }
}

std::vector<SummaryRow> read_summary(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    check_version(line, "summary", path);
    std::getline(in, line);
    std::vector<SummaryRow> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto c = split(line, ',');
        if (c.size() != 9)
            throw ConfigError("summary row with " + std::to_string(c.size()) + " columns in " + path.string());
        SummaryRow r;
        r.seed = parse_uint(c[0], path);
        r.experts = parse_uint(c[1], path);
        r.pool = c[2];
        r.episodes = parse_uint(c[3], path);
        r.adapt_steps = parse_uint(c[4], path);
        r.metric_mean = parse_double(c[5], path);
        r.metric_std = parse_double(c[6], path);
        r.mi_bits = parse_double(c[7], path);
        for (const auto& n : split(c[8], ';'))
            if (!n.empty())
                r.expert_counts.push_back(parse_uint(n, path));
        rows.push_back(r);
    }
    return rows;
}

} // namespace hexpert::harness
