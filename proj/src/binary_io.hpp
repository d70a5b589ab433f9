#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

// Little-endian primitives shared by the index and model file formats.
namespace qac::detail {

inline void write_u32(std::ostream& out, std::uint32_t value) {
    std::array<char, 4> bytes{};
    for (std::size_t i = 0; i < 4; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

inline void write_u64(std::ostream& out, std::uint64_t value) {
    std::array<char, 8> bytes{};
    for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
    out.write(bytes.data(), bytes.size());
}

inline void write_f64(std::ostream& out, double value) {
    write_u64(out, std::bit_cast<std::uint64_t>(value));
}

inline void write_string(std::ostream& out, std::string_view text) {
    write_u32(out, static_cast<std::uint32_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline void read_exact(std::istream& in, char* data, std::size_t size) {
    in.read(data, static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in.gcount()) != size) throw std::runtime_error("unexpected end of file");
}

inline std::uint32_t read_u32(std::istream& in) {
    std::array<unsigned char, 4> bytes{};
    read_exact(in, reinterpret_cast<char*>(bytes.data()), bytes.size());
    std::uint32_t value = 0;
    for (std::size_t i = 0; i < 4; ++i) value |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return value;
}

inline std::uint64_t read_u64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    read_exact(in, reinterpret_cast<char*>(bytes.data()), bytes.size());
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < 8; ++i) value |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return value;
}

inline double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

inline std::string read_string(std::istream& in, std::uint32_t max_size = 1u << 20) {
    std::uint32_t size = read_u32(in);
    if (size > max_size) throw std::runtime_error("string length out of range");
    std::string text(size, '\0');
    read_exact(in, text.data(), size);
    return text;
}

template <std::size_t N>
void expect_magic(std::istream& in, const char (&magic)[N], std::size_t size) {
    std::array<char, N> found{};
    in.read(found.data(), static_cast<std::streamsize>(size));
    if (static_cast<std::size_t>(in.gcount()) != size || std::memcmp(found.data(), magic, size) != 0) {
        throw std::runtime_error("bad magic bytes");
    }
}

}  // namespace qac::detail
