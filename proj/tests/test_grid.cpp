#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cma/calculus.hpp"
#include "cma/random_fields.hpp"

using namespace cma;
using std::numbers::pi;

namespace {

GridPtr grid2(int N = 16, DiffScheme scheme = DiffScheme::fourier())
{
    return Grid::create({2, N, scheme});
}

double max_abs_diff(const ComplexField& a, const ComplexField& b)
{
    double m = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
        m = std::max(m, std::abs(a[p] - b[p]));
    return m;
}

} // namespace

TEST(GridSpec, RejectsInvalidShapes)
{
    EXPECT_THROW(Grid::create({4, 16, DiffScheme::fourier()}), Error);
    EXPECT_THROW(Grid::create({2, 6, DiffScheme::fourier()}), Error);
    EXPECT_THROW(Grid::create({2, 15, DiffScheme::fourier()}), Error);
    EXPECT_THROW(Grid::create({2, 16, DiffScheme::central_difference(3)}), Error);
}

TEST(GridSpec, PointCountAndCoordinates)
{
    auto grid = grid2(8);
    EXPECT_EQ(grid->size(), 8u * 8u * 8u * 8u);
    // Last axis (y^2) varies fastest.
    EXPECT_DOUBLE_EQ(grid->coords(1).y(1), 1.0 / 8.0);
    EXPECT_DOUBLE_EQ(grid->coords(8).x(1), 1.0 / 8.0);
    EXPECT_DOUBLE_EQ(grid->coords(8 * 8 * 8).x(0), 1.0 / 8.0);
    EXPECT_DOUBLE_EQ(grid->coords(grid->size() - 1).y(0), 7.0 / 8.0);
}

TEST(Derivatives, ConstantHasZeroDerivative)
{
    auto grid = grid2();
    RealField one(grid, 1.0);
    for (int j = 0; j < 2; ++j) {
        EXPECT_LE(sup_norm(d_holo(one, j)), 1e-15);
        EXPECT_LE(sup_norm(d_antiholo(one, j)), 1e-15);
    }
}

TEST(Derivatives, CosineInX)
{
    auto grid = grid2();
    auto f = RealField::from_function(grid, [](const Coords& c) { return std::cos(2 * pi * c.x(0)); });
    auto expected = ComplexField::from_function(grid, [](const Coords& c) { return cplx(-pi * std::sin(2 * pi * c.x(0)), 0.0); });
    EXPECT_LE(max_abs_diff(d_holo(f, 0), expected), 1e-12);
    EXPECT_LE(sup_norm(d_holo(f, 1)), 1e-12);
}

TEST(Derivatives, SineInYPicksUpMinusI)
{
    auto grid = grid2();
    auto f = RealField::from_function(grid, [](const Coords& c) { return std::sin(2 * pi * c.y(0)); });
    auto expected = ComplexField::from_function(grid, [](const Coords& c) { return cplx(0.0, -pi * std::cos(2 * pi * c.y(0))); });
    EXPECT_LE(max_abs_diff(d_holo(f, 0), expected), 1e-12);
    auto conj_expected = ComplexField::from_function(grid, [](const Coords& c) { return cplx(0.0, pi * std::cos(2 * pi * c.y(0))); });
    EXPECT_LE(max_abs_diff(d_antiholo(f, 0), conj_expected), 1e-12);
}

TEST(Derivatives, AxisOutOfRange)
{
    auto grid = grid2();
    RealField f(grid, 0.0);
    try {
        d_holo(f, 2);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::axis_out_of_range);
    }
    EXPECT_THROW(d_antiholo(f, -1), Error);
}

TEST(Derivatives, FourierExactOnBandLimitedPolynomials)
{
    auto grid = grid2(16);
    std::mt19937_64 rng(7);
    // Frequencies up to 7 < N/2.
    const auto modes = random::random_modes(rng, 4, 6, 7);
    auto f = RealField::from_function(grid, [&](const Coords& c) { return random::evaluate(modes, c, 2); });
    for (int j = 0; j < 2; ++j) {
        auto exact = ComplexField::from_function(grid, [&](const Coords& c) {
            cplx s = 0.0;
            for (const auto& m : modes) {
                double arg = m.phase;
                for (int a = 0; a < 2; ++a)
                    arg += 2 * pi * (m.freq[2 * a] * c.x(a) + m.freq[2 * a + 1] * c.y(a));
                const cplx factor = pi * cplx(m.freq[2 * j], -m.freq[2 * j + 1]);
                s += -m.amplitude * std::sin(arg) * factor;
            }
            return s;
        });
        EXPECT_LE(max_abs_diff(d_holo(f, j), exact), 1e-12);
    }
}

TEST(Derivatives, DiscreteDivergenceTheorem)
{
    auto grid = grid2();
    std::mt19937_64 rng(11);
    auto f = random::smooth_field(grid, rng, 1.0, 6, 3);
    const auto flat = HermitianField::identity(grid);
    for (int j = 0; j < 2; ++j) {
        // d/dx^j = d_j + d_jbar.
        auto dx = real_part(d_holo(f, j) + d_antiholo(f, j));
        EXPECT_LE(std::abs(integrate(dx, flat)), 1e-13);
    }
}

TEST(Ddbar, ZeroAndCosine)
{
    auto grid = grid2();
    EXPECT_EQ(ddbar(RealField(grid, 0.0)).sup_norm(), 0.0);

    auto f = RealField::from_function(grid, [](const Coords& c) { return std::cos(2 * pi * c.x(0)); });
    auto h = ddbar(f);
    double err = 0.0;
    for (std::size_t p = 0; p < grid->size(); ++p) {
        const double expected = -pi * pi * std::cos(2 * pi * grid->coords(p).x(0));
        err = std::max(err, std::abs(h.entry(p, 0, 0) - expected));
        err = std::max({err, std::abs(h.entry(p, 0, 1)), std::abs(h.entry(p, 1, 0)), std::abs(h.entry(p, 1, 1))});
    }
    EXPECT_LE(err, 1e-11);
}

TEST(Ddbar, RandomRealInputIsHermitian)
{
    for (int n : {2, 3}) {
        auto grid = Grid::create({n, 8, DiffScheme::fourier()});
        std::mt19937_64 rng(3 + n);
        auto f = random::smooth_field(grid, rng, 1.0, 5, 3);
        EXPECT_LE(ddbar(f).hermitian_defect(), 1e-13);
    }
}

TEST(Ddbar, MatchesComposedFirstDerivatives)
{
    auto grid = grid2();
    std::mt19937_64 rng(5);
    auto f = random::smooth_field(grid, rng, 1.0, 5, 2);
    auto h = ddbar(f);
    auto composed = d_holo(d_antiholo(f, 1), 0);
    EXPECT_LE(max_abs_diff(h.component(0, 1), composed), 1e-10);
}

TEST(Integrate, NormalizedVolume)
{
    auto grid = grid2();
    const auto flat = HermitianField::identity(grid);
    EXPECT_NEAR(integrate(RealField(grid, 1.0), flat), 1.0, 1e-15);
    auto c = RealField::from_function(grid, [](const Coords& x) { return std::cos(2 * pi * x.x(0)); });
    EXPECT_LE(std::abs(integrate(c, flat)), 1e-14);
    EXPECT_NEAR(integrate(RealField(grid, 1.0), HermitianField::identity(grid, 2.0)), 4.0, 1e-14);
}

TEST(Integrate, RejectsNonMetric)
{
    auto grid = grid2(8);
    try {
        integrate(RealField(grid, 1.0), HermitianField::identity(grid, -1.0));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_metric);
    }
}

TEST(CentralDifference, ConvergesAtTheStatedOrder)
{
    for (int order : {2, 4}) {
        double errors[2];
        int k = 0;
        for (int N : {8, 16}) {
            auto grid = grid2(N, DiffScheme::central_difference(order));
            auto f = RealField::from_function(grid, [](const Coords& c) { return std::sin(2 * pi * (c.x(0) + c.y(1))); });
            auto exact = ComplexField::from_function(grid, [](const Coords& c) {
                return cplx(pi * std::cos(2 * pi * (c.x(0) + c.y(1))), 0.0);
            });
            errors[k++] = max_abs_diff(d_holo(f, 0), exact);
        }
        const double rate = std::log2(errors[0] / errors[1]);
        EXPECT_NEAR(rate, order, 0.3) << "order " << order;
    }
}

TEST(CentralDifference, CrossValidatesFourierHessian)
{
    auto spectral = grid2(16);
    auto fd = grid2(16, DiffScheme::central_difference(6));
    auto fn = [](const Coords& c) { return std::sin(2 * pi * c.x(0)) * std::cos(2 * pi * c.y(1)); };
    auto a = ddbar(RealField::from_function(spectral, fn));
    auto b = ddbar(RealField::from_function(fd, fn));
    double diff = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k)
        diff = std::max(diff, std::abs(a.values()[k] - b.values()[k]));
    EXPECT_LE(diff, 1e-3);
    EXPECT_GT(diff, 0.0);
}
