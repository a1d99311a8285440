#pragma once

#include <hexpert/random.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hexpert::tasks {

enum class ClassPool : std::uint8_t { Train = 0, HeldOut = 1 };

/// Square grayscale images in [0,1] with integer class labels and a
/// class-level train/held-out split.
struct GlyphDataset {
    std::size_t side = 28;
    std::vector<double> pixels;         // n * side * side, row-major per image
    std::vector<std::uint32_t> labels;  // class of each image
    std::vector<ClassPool> class_pool;  // indexed by class id
    std::vector<std::string> class_names;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t num_classes() const noexcept { return class_pool.size(); }
    std::size_t pixels_per_image() const noexcept { return side * side; }
    std::span<const double> image(std::size_t i) const;
    std::vector<std::size_t> samples_of(std::uint32_t cls) const;
    std::vector<std::uint32_t> classes_in(ClassPool pool) const;
};

/// Random 3-6 stroke polylines per class, rasterised with per-sample jitter.
GlyphDataset generate_synthetic_glyphs(std::size_t n_classes, std::size_t samples_per_class,
                                       Rng& rng, std::size_t side = 28);

/// Marks `heldout` randomly chosen classes as held out, the rest as training.
void split_classes(GlyphDataset& data, std::size_t heldout, Rng& rng);

/// Adds 90/180/270 degree rotations of every image (same label). Exact for
/// square images; DimensionError otherwise.
GlyphDataset augment_rotations(const GlyphDataset& data);

/// Rotates a side×side image by 90 degrees counter-clockwise.
std::vector<double> rotate90(std::span<const double> image, std::size_t side);

/// Reads <root>/<alphabet>/<character>/<sample>.png, downsampled to side×side
/// with strokes mapped to 1 and background to 0. Unreadable files are skipped
/// with a warning on stderr; classes with no readable sample are dropped.
/// All classes start in the training pool.
GlyphDataset load_omniglot(const std::filesystem::path& root, std::size_t side = 28);

/// Binary dataset file:
///   "HXGLYPH1", u32 version, u32 side, u32 n_images, u32 n_classes,
///   u8 pool[n_classes], u32 labels[n_images], f64 pixels[n_images*side*side]
/// (little-endian).
void save_glyphs(const GlyphDataset& data, const std::filesystem::path& path);
GlyphDataset load_glyphs(const std::filesystem::path& path);

} // namespace hexpert::tasks
