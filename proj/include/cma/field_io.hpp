#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cma/fields.hpp"

/*
 * Portable field files.
 *
 *   bytes  0..7   magic "CMAFIELD"
 *   bytes  8..11  u32 format version (currently 1)
 *   bytes 12..15  u32 reserved, zero
 *   then u32 n, u32 N, u32 kind (0 scalar-real, 1 scalar-complex, 2 hermitian)
 *   then IEEE-754 doubles in grid order; matrix entries innermost (row-major),
 *   complex values as (re, im) pairs.
 *
 * All integers and doubles are little-endian.
 */
namespace cma::io {

inline constexpr std::array<char, 8> kFieldMagic{'C', 'M', 'A', 'F', 'I', 'E', 'L', 'D'};
inline constexpr std::uint32_t kFieldVersion = 1;

enum class FieldKind : std::uint32_t { scalar_real = 0, scalar_complex = 1, hermitian = 2 };

inline std::string to_string(FieldKind k)
{
    switch (k) {
    case FieldKind::scalar_real: return "scalar-real";
    case FieldKind::scalar_complex: return "scalar-complex";
    case FieldKind::hermitian: return "hermitian";
    }
    return "kind#" + std::to_string(static_cast<std::uint32_t>(k));
}

struct FieldHeader {
    std::uint32_t version = kFieldVersion;
    std::uint32_t complex_dim = 0;
    std::uint32_t points_per_axis = 0;
    FieldKind kind = FieldKind::scalar_real;

    std::size_t doubles_per_point() const
    {
        switch (kind) {
        case FieldKind::scalar_real: return 1;
        case FieldKind::scalar_complex: return 2;
        case FieldKind::hermitian: return 2 * static_cast<std::size_t>(complex_dim * complex_dim);
        }
        return 0;
    }

    std::size_t points() const
    {
        std::size_t total = 1;
        for (std::uint32_t a = 0; a < 2 * complex_dim; ++a)
            total *= points_per_axis;
        return total;
    }

    std::string describe() const
    {
        return "{version=" + std::to_string(version) + ", n=" + std::to_string(complex_dim) +
               ", N=" + std::to_string(points_per_axis) + ", kind=" + to_string(kind) + "}";
    }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v)
{
    for (int b = 0; b < 4; ++b)
        out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline void put_f64(std::string& out, double d)
{
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int b = 0; b < 8; ++b)
        out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* in)
{
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
        v |= static_cast<std::uint32_t>(in[b]) << (8 * b);
    return v;
}

inline double get_f64(const unsigned char* in)
{
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(in[b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

inline std::string encode_header(const FieldHeader& h)
{
    std::string out(kFieldMagic.begin(), kFieldMagic.end());
    put_u32(out, h.version);
    put_u32(out, 0);
    put_u32(out, h.complex_dim);
    put_u32(out, h.points_per_axis);
    put_u32(out, static_cast<std::uint32_t>(h.kind));
    return out;
}

inline constexpr std::size_t kHeaderBytes = 16 + 12;

inline FieldHeader header_for(const GridPtr& grid, FieldKind kind)
{
    return {kFieldVersion, static_cast<std::uint32_t>(grid->n()),
            static_cast<std::uint32_t>(grid->points_per_axis()), kind};
}

} // namespace detail

/// Writes through a temporary sibling file and renames it into place.
inline void write_atomically(const std::filesystem::path& path, const std::string& bytes)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorCode::io_error, "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw Error(ErrorCode::io_error, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error(ErrorCode::io_error, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string encode(const RealField& f)
{
    std::string out = detail::encode_header(detail::header_for(f.grid(), FieldKind::scalar_real));
    for (double v : f.values())
        detail::put_f64(out, v);
    return out;
}

inline std::string encode(const ComplexField& f)
{
    std::string out = detail::encode_header(detail::header_for(f.grid(), FieldKind::scalar_complex));
    for (cplx v : f.values()) {
        detail::put_f64(out, v.real());
        detail::put_f64(out, v.imag());
    }
    return out;
}

inline std::string encode(const HermitianField& f)
{
    std::string out = detail::encode_header(detail::header_for(f.grid(), FieldKind::hermitian));
    for (cplx v : f.values()) {
        detail::put_f64(out, v.real());
        detail::put_f64(out, v.imag());
    }
    return out;
}

struct DecodedPayload {
    FieldHeader header;
    std::vector<double> doubles;
};

inline DecodedPayload decode_payload(const std::string& bytes)
{
    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < detail::kHeaderBytes)
        throw Error(ErrorCode::shape_mismatch, "file holds " + std::to_string(bytes.size()) +
                                                   " bytes, shorter than the " +
                                                   std::to_string(detail::kHeaderBytes) + "-byte header");
    if (std::memcmp(raw, kFieldMagic.data(), kFieldMagic.size()) != 0)
        throw Error(ErrorCode::version_mismatch, "bad magic: expected CMAFIELD, found '" + bytes.substr(0, 8) + "'");
    DecodedPayload out;
    out.header.version = detail::get_u32(raw + 8);
    if (out.header.version != kFieldVersion)
        throw Error(ErrorCode::version_mismatch, "expected version " + std::to_string(kFieldVersion) + ", found " +
                                                     std::to_string(out.header.version));
    out.header.complex_dim = detail::get_u32(raw + 16);
    out.header.points_per_axis = detail::get_u32(raw + 20);
    const std::uint32_t kind = detail::get_u32(raw + 24);
    if (kind > 2)
        throw Error(ErrorCode::shape_mismatch, "unknown field kind " + std::to_string(kind));
    out.header.kind = static_cast<FieldKind>(kind);
    if (out.header.complex_dim < 2 || out.header.complex_dim > 3 || out.header.points_per_axis < 8 ||
        out.header.points_per_axis > 4096)
        throw Error(ErrorCode::shape_mismatch, "implausible header " + out.header.describe());

    const std::size_t expected = out.header.points() * out.header.doubles_per_point();
    const std::size_t found_bytes = bytes.size() - detail::kHeaderBytes;
    if (found_bytes != expected * 8)
        throw Error(ErrorCode::shape_mismatch, "header " + out.header.describe() + " expects " +
                                                   std::to_string(expected * 8) + " payload bytes, found " +
                                                   std::to_string(found_bytes));
    out.doubles.resize(expected);
    for (std::size_t k = 0; k < expected; ++k)
        out.doubles[k] = detail::get_f64(raw + detail::kHeaderBytes + 8 * k);
    return out;
}

inline std::string read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io_error, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline FieldHeader read_header(const std::filesystem::path& path) { return decode_payload(read_bytes(path)).header; }

namespace detail {

inline void check_expected(const FieldHeader& found, const GridPtr& grid, FieldKind kind)
{
    const FieldHeader expected = header_for(grid, kind);
    if (found.complex_dim != expected.complex_dim || found.points_per_axis != expected.points_per_axis ||
        found.kind != expected.kind)
        throw Error(ErrorCode::shape_mismatch,
                    "expected header " + expected.describe() + ", found " + found.describe());
}

} // namespace detail

inline RealField decode_real(const std::string& bytes, const GridPtr& grid)
{
    auto payload = decode_payload(bytes);
    detail::check_expected(payload.header, grid, FieldKind::scalar_real);
    return RealField(grid, std::move(payload.doubles));
}

inline ComplexField decode_complex(const std::string& bytes, const GridPtr& grid)
{
    auto payload = decode_payload(bytes);
    detail::check_expected(payload.header, grid, FieldKind::scalar_complex);
    std::vector<cplx> values(grid->size());
    for (std::size_t p = 0; p < values.size(); ++p)
        values[p] = {payload.doubles[2 * p], payload.doubles[2 * p + 1]};
    return ComplexField(grid, std::move(values));
}

inline HermitianField decode_hermitian(const std::string& bytes, const GridPtr& grid)
{
    auto payload = decode_payload(bytes);
    detail::check_expected(payload.header, grid, FieldKind::hermitian);
    std::vector<cplx> values(payload.doubles.size() / 2);
    for (std::size_t k = 0; k < values.size(); ++k)
        values[k] = {payload.doubles[2 * k], payload.doubles[2 * k + 1]};
    return HermitianField(grid, std::move(values));
}

template <class Field>
void save(const std::filesystem::path& path, const Field& f)
{
    write_atomically(path, encode(f));
}

inline RealField load_real(const std::filesystem::path& path, const GridPtr& grid)
{
    return decode_real(read_bytes(path), grid);
}
inline ComplexField load_complex(const std::filesystem::path& path, const GridPtr& grid)
{
    return decode_complex(read_bytes(path), grid);
}
inline HermitianField load_hermitian(const std::filesystem::path& path, const GridPtr& grid)
{
    return decode_hermitian(read_bytes(path), grid);
}

} // namespace cma::io
