#include <hexpert/tasks/glyphs.hpp>

#include <hexpert/errors.hpp>

#include "../binary_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace hexpert::tasks {

namespace {

struct Vec2 {
    double x, y;
};

using Stroke = std::vector<Vec2>;

double segment_distance(Vec2 p, Vec2 a, Vec2 b)
{
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
    return std::sqrt(ex * ex + ey * ey);
}

void rasterize(const std::vector<Stroke>& strokes, std::size_t side, double* out)
{
    const double s = static_cast<double>(side);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            const Vec2 p{(static_cast<double>(c) + 0.5) / s, (static_cast<double>(r) + 0.5) / s};
            double d = 1e9;
            for (const auto& stroke : strokes)
                for (std::size_t i = 0; i + 1 < stroke.size(); ++i)
                    d = std::min(d, segment_distance(p, stroke[i], stroke[i + 1]));
            // Stroke half-width of one pixel with a half-pixel soft edge.
            out[r * side + c] = std::clamp(1.5 - d * s, 0.0, 1.0);
        }
}

constexpr char kGlyphMagic[8] = {'H', 'X', 'G', 'L', 'Y', 'P', 'H', '1'};
constexpr std::uint32_t kGlyphVersion = 1;

} // namespace

std::span<const double> GlyphDataset::image(std::size_t i) const
{
    return {pixels.data() + i * pixels_per_image(), pixels_per_image()};
}

std::vector<std::size_t> GlyphDataset::samples_of(std::uint32_t cls) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == cls)
            out.push_back(i);
    return out;
}

std::vector<std::uint32_t> GlyphDataset::classes_in(ClassPool pool) const
{
    std::vector<std::uint32_t> out;
    for (std::size_t c = 0; c < class_pool.size(); ++c)
        if (class_pool[c] == pool)
            out.push_back(static_cast<std::uint32_t>(c));
    return out;
}

GlyphDataset generate_synthetic_glyphs(std::size_t n_classes, std::size_t samples_per_class,
                                       Rng& rng, std::size_t side)
{
    GlyphDataset data;
    data.side = side;
    data.class_pool.assign(n_classes, ClassPool::Train);
    data.pixels.resize(n_classes * samples_per_class * side * side);
    data.labels.reserve(n_classes * samples_per_class);

    std::uniform_int_distribution<int> n_strokes(3, 6);
    std::uniform_int_distribution<int> n_points(2, 4);
    std::normal_distribution<double> jitter(0.0, 0.025);

    std::size_t index = 0;
    for (std::size_t cls = 0; cls < n_classes; ++cls) {
        data.class_names.push_back("synthetic_" + std::to_string(cls));
        std::vector<Stroke> prototype(static_cast<std::size_t>(n_strokes(rng)));
        for (auto& stroke : prototype) {
            stroke.resize(static_cast<std::size_t>(n_points(rng)));
            for (auto& pt : stroke)
                pt = {uniform(rng, 0.15, 0.85), uniform(rng, 0.15, 0.85)};
        }
        for (std::size_t s = 0; s < samples_per_class; ++s, ++index) {
            const double scale = uniform(rng, 0.9, 1.1);
            const double angle = uniform(rng, -0.1, 0.1);
            const double sx = uniform(rng, -0.04, 0.04), sy = uniform(rng, -0.04, 0.04);
            const double ca = std::cos(angle), sa = std::sin(angle);
            std::vector<Stroke> strokes = prototype;
            for (auto& stroke : strokes)
                for (auto& pt : stroke) {
                    const double x = pt.x - 0.5 + jitter(rng), y = pt.y - 0.5 + jitter(rng);
                    pt = {0.5 + sx + scale * (ca * x - sa * y), 0.5 + sy + scale * (sa * x + ca * y)};
                }
            rasterize(strokes, side, data.pixels.data() + index * side * side);
            data.labels.push_back(static_cast<std::uint32_t>(cls));
        }
    }
    return data;
}

void split_classes(GlyphDataset& data, std::size_t heldout, Rng& rng)
{
    if (heldout > data.num_classes())
        throw ContractViolation("more held-out classes than classes in the dataset");
    std::vector<std::size_t> order(data.num_classes());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::fill(data.class_pool.begin(), data.class_pool.end(), ClassPool::Train);
    for (std::size_t i = 0; i < heldout; ++i)
        data.class_pool[order[i]] = ClassPool::HeldOut;
}

std::vector<double> rotate90(std::span<const double> image, std::size_t side)
{
    if (image.size() != side * side)
        throw DimensionError("rotate90: image is not side x side");
    std::vector<double> out(image.size());
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c)
            out[r * side + c] = image[c * side + (side - 1 - r)];
    return out;
}

GlyphDataset augment_rotations(const GlyphDataset& data)
{
    if (data.pixels.size() != data.size() * data.side * data.side)
        throw DimensionError("augment_rotations: images are not square");
    GlyphDataset out;
    out.side = data.side;
    out.class_pool = data.class_pool;
    out.class_names = data.class_names;
    out.pixels.reserve(data.pixels.size() * 4);
    out.labels.reserve(data.size() * 4);
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> img(data.image(i).begin(), data.image(i).end());
        for (int k = 0; k < 4; ++k) {
            out.pixels.insert(out.pixels.end(), img.begin(), img.end());
            out.labels.push_back(data.labels[i]);
            img = rotate90(img, data.side);
        }
    }
    return out;
}

void save_glyphs(const GlyphDataset& data, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(kGlyphMagic, sizeof(kGlyphMagic));
    detail::put_le<std::uint32_t>(out, kGlyphVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.side));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.num_classes()));
    for (ClassPool p : data.class_pool)
        detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(p));
    for (std::uint32_t l : data.labels)
        detail::put_le<std::uint32_t>(out, l);
    for (double v : data.pixels)
        detail::put_f64(out, v);
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

GlyphDataset load_glyphs(const std::filesystem::path& path)
{
    using Err = std::runtime_error;
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Err("cannot open dataset " + path.string());
    char magic[sizeof(kGlyphMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kGlyphMagic, sizeof(magic)) != 0)
        throw Err(path.string() + " is not a glyph dataset file");
    const auto version = detail::get_le<std::uint32_t, Err>(in, "version");
    if (version != kGlyphVersion)
        throw Err("glyph dataset version " + std::to_string(version) + " unsupported (expected " +
                  std::to_string(kGlyphVersion) + ")");
    GlyphDataset data;
    data.side = detail::get_le<std::uint32_t, Err>(in, "side");
    const auto n = detail::get_le<std::uint32_t, Err>(in, "image count");
    const auto classes = detail::get_le<std::uint32_t, Err>(in, "class count");
    data.class_pool.resize(classes);
    for (auto& p : data.class_pool)
        p = static_cast<ClassPool>(detail::get_le<std::uint8_t, Err>(in, "class pool"));
    for (std::uint32_t c = 0; c < classes; ++c)
        data.class_names.push_back("class_" + std::to_string(c));
    data.labels.resize(n);
    for (auto& l : data.labels) {
        l = detail::get_le<std::uint32_t, Err>(in, "labels");
        if (l >= classes)
            throw Err("label out of range in " + path.string());
    }
    data.pixels.resize(static_cast<std::size_t>(n) * data.side * data.side);
    for (auto& v : data.pixels)
        v = detail::get_f64<Err>(in, "pixels");
    return data;
}

} // namespace hexpert::tasks
