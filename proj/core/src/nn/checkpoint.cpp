#include <hexpert/nn/checkpoint.hpp>

#include <hexpert/errors.hpp>

#include "../binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace hexpert::nn {

namespace {

using detail::put_le;

template <class T>
T get_le(std::istream& in, const char* what)
{
    return detail::get_le<T, CheckpointError>(in, what);
}

} // namespace

void write_checkpoint(std::ostream& out, std::span<const Parameter* const> params)
{
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put_le<std::uint32_t>(out, kCheckpointVersion);
    for (const Parameter* p : params) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
        out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p->value.rank()));
        for (std::size_t d : p->value.shape())
            put_le<std::uint64_t>(out, d);
        for (double v : p->value.values())
            put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
    if (!out)
        throw CheckpointError("failed writing checkpoint");
}

void write_checkpoint(const std::filesystem::path& path, std::span<const Parameter* const> params)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw CheckpointError("cannot open " + path.string() + " for writing");
    write_checkpoint(out, params);
}

std::vector<Parameter> read_checkpoint(std::istream& in)
{
    char magic[sizeof(kCheckpointMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw CheckpointError("not a hexpert checkpoint (bad magic)");
    const auto version = get_le<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion)
        throw CheckpointError("checkpoint version " + std::to_string(version) +
                              " is not supported (this build reads version " +
                              std::to_string(kCheckpointVersion) + ")");
    std::vector<Parameter> params;
    while (in.peek() != std::char_traits<char>::eof()) {
        Parameter p;
        const auto name_len = get_le<std::uint32_t>(in, "name length");
        p.name.resize(name_len);
        if (!in.read(p.name.data(), name_len))
            throw CheckpointError("truncated checkpoint while reading name");
        const auto rank = get_le<std::uint32_t>(in, "rank");
        Shape shape(rank);
        for (auto& d : shape)
            d = static_cast<std::size_t>(get_le<std::uint64_t>(in, "dimension"));
        std::vector<double> values(shape_size(shape));
        for (auto& v : values)
            v = std::bit_cast<double>(get_le<std::uint64_t>(in, "values"));
        p.value = Tensor(std::move(shape), std::move(values));
        params.push_back(std::move(p));
    }
    return params;
}

std::vector<Parameter> read_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CheckpointError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

} // namespace hexpert::nn
