#pragma once

#include <hexpert/errors.hpp>

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

namespace hexpert::detail {

template <class T>
void put_le(std::ostream& out, T value)
{
    static_assert(std::is_integral_v<T>);
    unsigned char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i)
        bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

inline void put_f64(std::ostream& out, double v)
{
    put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

template <class T, class Error>
T get_le(std::istream& in, const char* what)
{
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
        throw Error(std::string("truncated file while reading ") + what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return static_cast<T>(v);
}

template <class Error>
double get_f64(std::istream& in, const char* what)
{
    return std::bit_cast<double>(get_le<std::uint64_t, Error>(in, what));
}

} // namespace hexpert::detail
