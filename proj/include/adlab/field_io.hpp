#pragma once

/// @file field_io.hpp
/// @brief TORF binary field container and a lossy CSV export.
///
/// Layout: a 32-byte header followed by little-endian float64 values, row-major
/// with axis order x1..xd, components stored one after another.
///
///   offset  size  content
///   0       4     magic "TORF"
///   4       4     u32 format version (1)
///   8       4     u32 dimension d
///   12      4     u32 points per axis N
///   16      4     u32 component count (1 for scalar fields)
///   20      12    reserved, zero

#include <array>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "adlab/torus.hpp"

namespace adlab::io {

inline constexpr std::array<char, 4> kMagic{'T', 'O', 'R', 'F'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 32;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::array<unsigned char, sizeof(T)> b;
        std::memcpy(b.data(), &v, sizeof(T));
        std::reverse(b.begin(), b.end());
        std::memcpy(&v, b.data(), sizeof(T));
        return v;
    }
}

inline void put_u32(std::vector<unsigned char>& buf, std::size_t off, std::uint32_t v) {
    v = to_little(v);
    std::memcpy(buf.data() + off, &v, 4);
}

inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return to_little(v);
}

}  // namespace detail

/// Serializes one or more components sharing a grid.
inline std::vector<unsigned char> encode(const TorusGrid& g, std::span<const ScalarField> comps) {
    std::vector<unsigned char> buf(kHeaderBytes + comps.size() * g.size() * sizeof(double), 0);
    std::memcpy(buf.data(), kMagic.data(), 4);
    detail::put_u32(buf, 4, kFormatVersion);
    detail::put_u32(buf, 8, static_cast<std::uint32_t>(g.dim()));
    detail::put_u32(buf, 12, static_cast<std::uint32_t>(g.n()));
    detail::put_u32(buf, 16, static_cast<std::uint32_t>(comps.size()));
    std::size_t off = kHeaderBytes;
    for (const auto& c : comps) {
        if (!(c.grid() == g)) throw GridMismatch("io::encode: component grid mismatch");
        for (double v : c.values()) {
            const double le = detail::to_little(v);
            std::memcpy(buf.data() + off, &le, sizeof(double));
            off += sizeof(double);
        }
    }
    return buf;
}

/// Decoded container: grid plus components.
struct Decoded {
    TorusGrid grid;
    std::vector<ScalarField> components;
};

inline Decoded decode(std::span<const unsigned char> buf) {
    if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), kMagic.data(), 4) != 0) {
        throw IoError("TORF: missing magic header");
    }
    const auto version = detail::get_u32(buf.data() + 4);
    if (version != kFormatVersion) throw IoError("TORF: unsupported version " + std::to_string(version));
    const auto dim = static_cast<int>(detail::get_u32(buf.data() + 8));
    const auto n = static_cast<int>(detail::get_u32(buf.data() + 12));
    const auto ncomp = detail::get_u32(buf.data() + 16);
    TorusGrid g(dim, n);
    if (ncomp == 0 || buf.size() != kHeaderBytes + ncomp * g.size() * sizeof(double)) {
        throw IoError("TORF: payload size does not match header");
    }
    Decoded out{g, {}};
    std::size_t off = kHeaderBytes;
    for (std::uint32_t c = 0; c < ncomp; ++c) {
        std::vector<double> vals(g.size());
        for (double& v : vals) {
            std::memcpy(&v, buf.data() + off, sizeof(double));
            v = detail::to_little(v);
            off += sizeof(double);
        }
        out.components.emplace_back(g, std::move(vals));
    }
    return out;
}

inline void write_file(const std::string& path, const TorusGrid& g, std::span<const ScalarField> comps) {
    const auto buf = encode(g, comps);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("TORF: cannot open " + path + " for writing");
    os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("TORF: write failed for " + path);
}

inline void write_file(const std::string& path, const ScalarField& f) {
    write_file(path, f.grid(), std::span<const ScalarField>(&f, 1));
}

inline Decoded read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("TORF: cannot open " + path);
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode(buf);
}

inline ScalarField read_scalar(const std::string& path) {
    auto d = read_file(path);
    if (d.components.size() != 1) throw IoError("TORF: expected a scalar field in " + path);
    return std::move(d.components.front());
}

/// One row per node: coordinates then value, 10 significant digits.
inline void write_csv(std::ostream& os, const ScalarField& f) {
    const int d = f.grid().dim();
    for (int a = 0; a < d; ++a) os << 'x' << (a + 1) << ',';
    os << "value\n";
    os << std::setprecision(10);
    for_each_node(f.grid(), [&](std::size_t idx, const auto&, const Point& x) {
        for (int a = 0; a < d; ++a) os << x[a] << ',';
        os << f[idx] << '\n';
    });
}

}  // namespace adlab::io
