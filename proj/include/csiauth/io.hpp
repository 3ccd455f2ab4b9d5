#pragma once

// Little-endian binary primitives and round-trip decimal formatting shared by
// the model, coefficient and CSV writers.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "csiauth/core.hpp"

namespace csiauth::io {

inline void write_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
    os.write(b.data(), 8);
}

inline std::uint64_t read_u64(std::istream& is) {
    std::array<unsigned char, 8> b{};
    is.read(reinterpret_cast<char*>(b.data()), 8);
    require(static_cast<bool>(is), "unexpected end of binary file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }
inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

inline void write_magic(std::ostream& os, std::string_view magic) { os.write(magic.data(), static_cast<std::streamsize>(magic.size())); }

inline void expect_magic(std::istream& is, std::string_view magic, const std::string& what) {
    std::string got(magic.size(), '\0');
    is.read(got.data(), static_cast<std::streamsize>(got.size()));
    require(static_cast<bool>(is) && got == magic, what + ": bad magic, not a " + std::string(magic) + " file");
}

/// Row-major dump of a real matrix.
inline void write_matrix(std::ostream& os, const RMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64(os, m(r, c));
}

inline RMatrix read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    RMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_f64(is);
    return m;
}

/// Row-major, each entry as interleaved (re, im).
inline void write_matrix(std::ostream& os, const CMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            write_f64(os, m(r, c).real());
            write_f64(os, m(r, c).imag());
        }
}

inline CMatrix read_cmatrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double re = read_f64(is);
            m(r, c) = cplx(re, read_f64(is));
        }
    return m;
}

/// 17 significant digits: parses back to the identical double.
inline std::string format_double(double v) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(n));
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    require(ec == std::errc() && ptr == last, context + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s, const std::string& context) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    require(ec == std::errc() && ptr == s.data() + s.size(),
            context + ": cannot parse integer '" + std::string(s) + "'");
    return v;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace csiauth::io
