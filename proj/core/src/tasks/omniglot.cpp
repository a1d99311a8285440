#include <hexpert/tasks/glyphs.hpp>

#include <png.h>

#include <algorithm>
#include <iostream>
#include <optional>

namespace hexpert::tasks {

namespace {

namespace fs = std::filesystem;

std::optional<std::vector<double>> read_png_gray(const fs::path& file, std::size_t side)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, file.c_str()))
        return std::nullopt;
    image.format = PNG_FORMAT_GRAY;
    std::vector<unsigned char> raw(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, raw.data(), 0, nullptr)) {
        png_image_free(&image);
        return std::nullopt;
    }
    const std::size_t w = image.width, h = image.height;
    if (w == 0 || h == 0)
        return std::nullopt;

    // Box-filter downsample to side x side.
    std::vector<double> out(side * side, 0.0);
    double mean = 0.0;
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            const std::size_t y0 = r * h / side, y1 = std::max(y0 + 1, (r + 1) * h / side);
            const std::size_t x0 = c * w / side, x1 = std::max(x0 + 1, (c + 1) * w / side);
            double acc = 0.0;
            for (std::size_t y = y0; y < y1; ++y)
                for (std::size_t x = x0; x < x1; ++x)
                    acc += raw[y * w + x];
            out[r * side + c] = acc / (255.0 * static_cast<double>((y1 - y0) * (x1 - x0)));
            mean += out[r * side + c];
        }
    // Dark strokes on a light background are inverted so strokes are 1.
    if (mean / static_cast<double>(out.size()) > 0.5)
        for (auto& v : out)
            v = 1.0 - v;
    for (auto& v : out)
        v = std::clamp(v, 0.0, 1.0);
    return out;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories)
{
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (directories ? e.is_directory() : e.is_regular_file())
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

GlyphDataset load_omniglot(const fs::path& root, std::size_t side)
{
    if (!fs::is_directory(root))
        throw std::runtime_error("omniglot root " + root.string() + " is not a directory");
    GlyphDataset data;
    data.side = side;
    for (const auto& alphabet : sorted_entries(root, true)) {
        for (const auto& character : sorted_entries(alphabet, true)) {
            std::vector<std::vector<double>> images;
            for (const auto& file : sorted_entries(character, false)) {
                if (file.extension() != ".png")
                    continue;
                auto img = read_png_gray(file, side);
                if (!img) {
                    std::cerr << "warning: skipping unreadable image " << file << '\n';
                    continue;
                }
                images.push_back(std::move(*img));
            }
            if (images.empty())
                continue;
            const auto cls = static_cast<std::uint32_t>(data.class_pool.size());
            data.class_pool.push_back(ClassPool::Train);
            data.class_names.push_back(alphabet.filename().string() + "/" +
                                       character.filename().string());
            for (auto& img : images) {
                data.pixels.insert(data.pixels.end(), img.begin(), img.end());
                data.labels.push_back(cls);
            }
        }
    }
    return data;
}

} // namespace hexpert::tasks
