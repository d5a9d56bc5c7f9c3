#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "cma/field_io.hpp"
#include "cma/random_fields.hpp"

using namespace cma;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "cma_field_io_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST(FieldIo, ScalarRoundTripIsBitExact)
{
    auto grid = Grid::create({2, 8, DiffScheme::fourier()});
    std::mt19937_64 rng(1);
    auto f = random::smooth_field(grid, rng, 0.7, 5, 3);
    const auto path = scratch("scalar.cmaf");
    io::save(path, f);
    auto g = io::load_real(path, grid);
    for (std::size_t p = 0; p < f.size(); ++p)
        ASSERT_EQ(std::bit_cast<std::uint64_t>(f[p]), std::bit_cast<std::uint64_t>(g[p]));

    ComplexField c = d_holo(f, 1);
    io::save(path, c);
    auto c2 = io::load_complex(path, grid);
    for (std::size_t p = 0; p < c.size(); ++p)
        ASSERT_EQ(c[p], c2[p]);
}

TEST(FieldIo, HermitianRoundTripIsBitExact)
{
    auto grid = Grid::create({3, 8, DiffScheme::fourier()});
    std::mt19937_64 rng(2);
    auto g = random::smooth_metric(grid, rng, 0.2);
    const auto path = scratch("metric.cmaf");
    io::save(path, g);
    auto h = io::load_hermitian(path, grid);
    for (std::size_t k = 0; k < g.values().size(); ++k)
        ASSERT_EQ(g.values()[k], h.values()[k]);
}

TEST(FieldIo, HeaderLayout)
{
    auto grid = Grid::create({2, 8, DiffScheme::fourier()});
    const std::string bytes = io::encode(RealField(grid, 1.5));
    ASSERT_EQ(bytes.size(), 28u + 8u * grid->size());
    EXPECT_EQ(bytes.substr(0, 8), "CMAFIELD");
    EXPECT_EQ(bytes[8], 1);  // version, little-endian
    EXPECT_EQ(bytes[16], 2); // n
    EXPECT_EQ(bytes[20], 8); // N
    EXPECT_EQ(bytes[24], 0); // scalar-real
}

TEST(FieldIo, TruncatedFileIsShapeMismatch)
{
    auto grid = Grid::create({2, 8, DiffScheme::fourier()});
    std::string bytes = io::encode(RealField(grid, 1.0));
    bytes.resize(bytes.size() - 8);
    try {
        io::decode_real(bytes, grid);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
        EXPECT_NE(std::string(e.what()).find("found"), std::string::npos);
    }
}

TEST(FieldIo, WrongGridReportsBothHeaders)
{
    auto small = Grid::create({2, 8, DiffScheme::fourier()});
    auto big = Grid::create({2, 10, DiffScheme::fourier()});
    const std::string bytes = io::encode(RealField(small, 1.0));
    try {
        io::decode_real(bytes, big);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::shape_mismatch);
        const std::string what = e.what();
        EXPECT_NE(what.find("N=10"), std::string::npos);
        EXPECT_NE(what.find("N=8"), std::string::npos);
    }
    // Kind mismatch is a shape mismatch as well.
    EXPECT_THROW(io::decode_hermitian(bytes, small), Error);
}

TEST(FieldIo, VersionMismatch)
{
    auto grid = Grid::create({2, 8, DiffScheme::fourier()});
    std::string bytes = io::encode(RealField(grid, 1.0));
    bytes[8] = 7;
    try {
        io::decode_real(bytes, grid);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::version_mismatch);
        EXPECT_NE(std::string(e.what()).find("found 7"), std::string::npos);
    }
}
