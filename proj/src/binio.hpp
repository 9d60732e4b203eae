#pragma once

// Little-endian binary IO helpers shared by the DDCP and DDCK writers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "ddcp/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

namespace ddcp::binio {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void write_u32(std::ostream& os, std::uint32_t x) { write_bytes(os, &x, 4); }
inline void write_u64(std::ostream& os, std::uint64_t x) { write_bytes(os, &x, 8); }
inline void write_f32(std::ostream& os, float x) { write_bytes(os, &x, 4); }

inline void write_f32_block(std::ostream& os, const std::vector<float>& xs) {
    write_bytes(os, xs.data(), xs.size() * 4);
}

inline void read_bytes(std::istream& is, void* p, std::size_t n, const char* what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw FormatError(std::string("truncated file while reading ") + what);
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
    std::uint32_t x;
    read_bytes(is, &x, 4, what);
    return x;
}

inline std::uint64_t read_u64(std::istream& is, const char* what) {
    std::uint64_t x;
    read_bytes(is, &x, 8, what);
    return x;
}

inline void read_f32_block(std::istream& is, std::vector<float>& out, const char* what) {
    read_bytes(is, out.data(), out.size() * 4, what);
}

inline void check_magic(std::istream& is, const char (&magic)[5], const char* format) {
    char buf[4];
    read_bytes(is, buf, 4, "magic");
    if (std::memcmp(buf, magic, 4) != 0)
        throw FormatError(std::string("bad magic, not a ") + format + " file");
}

}  // namespace ddcp::binio
