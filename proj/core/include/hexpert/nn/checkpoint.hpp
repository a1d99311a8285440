#pragma once

#include <hexpert/nn/tensor.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace hexpert::nn {

/// Binary checkpoint layout (all integers and floats little-endian):
///   "HEXPERT1"            8-byte magic
///   u32 version
///   repeated until EOF:
///     u32 name length, name bytes
///     u32 rank, u64 dims[rank]
///     f64 values[product(dims)]
inline constexpr char kCheckpointMagic[8] = {'H', 'E', 'X', 'P', 'E', 'R', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, std::span<const Parameter* const> params);
void write_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params);

/// Throws CheckpointError on bad magic, truncated records, or a version other
/// than kCheckpointVersion (message carries both versions).
std::vector<Parameter> read_checkpoint(std::istream& in);
std::vector<Parameter> read_checkpoint(const std::filesystem::path& path);

} // namespace hexpert::nn
