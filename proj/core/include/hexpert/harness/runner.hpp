#pragma once

#include <hexpert/harness/config.hpp>
#include <hexpert/harness/metrics.hpp>
#include <hexpert/tasks/glyphs.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace hexpert::harness {

/// Trains every seed of the config into config.output_dir:
///   config.echo, metrics.csv, timing.csv, summary.csv, seed<s>/model.ckpt.
/// A diverging seed leaves seed<s>/model.diverged.ckpt and rethrows.
void run_experiment(const RunConfig& config, std::ostream& log);

/// Held-out evaluation of one checkpoint (held-out classes, validation
/// environments or fresh sinusoids).
SummaryRow evaluate_checkpoint(const RunConfig& config, const std::filesystem::path& checkpoint,
                               std::uint64_t seed);

/// Glyphs for a classification run: the configured dataset file (or Omniglot
/// directory) when given, otherwise synthetic glyphs drawn from the seed.
/// Classes are split and rotations added per config.
tasks::GlyphDataset prepare_glyphs(const RunConfig& config, std::uint64_t seed);

/// Writes the synthetic glyph dataset of prepare_glyphs (without a dataset
/// path) to out.
void generate_dataset(const RunConfig& config, std::uint64_t seed, const std::filesystem::path& out);

std::filesystem::path checkpoint_path(const RunConfig& config, std::uint64_t seed);

} // namespace hexpert::harness
