#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cma/ma_solver.hpp"
#include "cma/random_fields.hpp"

using namespace cma;
using std::numbers::pi;

namespace {

GridPtr grid(int n = 2, int N = 8) { return Grid::create({n, N, DiffScheme::fourier()}); }

HermitianField background(const GridPtr& gr, unsigned seed, double amplitude = 0.2)
{
    std::mt19937_64 rng(seed);
    return random::smooth_metric(gr, rng, amplitude);
}

RealField analytic_potential(const GridPtr& gr)
{
    return RealField::from_function(gr, [](const Coords& c) {
        return 0.03 * std::cos(2 * pi * c.x(0)) + 0.02 * std::sin(2 * pi * (c.y(0) + c.x(1))) +
               0.01 * std::cos(2 * pi * c.y(1));
    });
}

void expect_error(ErrorCode code, const std::function<void()>& fn)
{
    try {
        fn();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

} // namespace

TEST(MaResidual, ZeroData)
{
    auto gr = grid();
    auto g = background(gr, 1);
    EXPECT_LE(sup_norm(ma_log_residual(g, RealField(gr, 0.0), RealField(gr, 0.0), 0.0)), 1e-15);
}

TEST(MaResidual, ManufacturedPotentialIsExactRoot)
{
    auto gr = grid(2, 16);
    auto g = background(gr, 2);
    auto phi = analytic_potential(gr);
    auto F = log_det(g + ddbar(phi)) - log_det(g);
    EXPECT_LE(sup_norm(ma_log_residual(g, phi, F, 0.0)), 1e-11);
}

TEST(MaResidual, DiagonalPointArithmetic)
{
    // Flat g; ddbar phi = diag(1, -1/2) at the origin, g' positive everywhere.
    auto gr = grid();
    auto phi = RealField::from_function(gr, [](const Coords& c) {
        const double a = 2 * pi * c.x(0), b = 2 * pi * c.x(1);
        return -0.5 / (pi * pi) * (std::cos(a) + 0.25 * std::cos(2 * a)) +
               0.25 / (pi * pi) * (std::cos(b) + 0.25 * std::cos(2 * b));
    });
    auto F = RealField::from_function(gr, [](const Coords& c) { return 0.3 + std::sin(2 * pi * c.y(0)); });
    const double b = -0.1;
    auto r = ma_log_residual(HermitianField::identity(gr), phi, F, b);
    EXPECT_NEAR(r[0], -F[0] - b, 1e-13);
}

TEST(MaResidual, NonPositiveReportsWorstPoint)
{
    auto gr = grid();
    auto phi = RealField::from_function(gr, [](const Coords& c) { return std::cos(2 * pi * c.x(0)); });
    try {
        ma_log_residual(HermitianField::identity(gr), phi, RealField(gr, 0.0), 0.0);
        FAIL() << "expected not_positive";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_positive);
        EXPECT_NE(std::string(e.what()).find("grid point"), std::string::npos);
    }
}

TEST(Linearization, ConstantAndFlatCosine)
{
    auto gr = grid(2, 16);
    auto g = background(gr, 3);
    EXPECT_LE(sup_norm(linearized_apply(g, RealField(gr, 2.0))), 1e-12);
    auto eta = RealField::from_function(gr, [](const Coords& c) { return std::cos(2 * pi * c.x(0)); });
    auto lap = linearized_apply(HermitianField::identity(gr), eta);
    double err = 0.0;
    for (std::size_t p = 0; p < gr->size(); ++p)
        err = std::max(err, std::abs(lap[p] + pi * pi * eta[p]));
    EXPECT_LE(err, 1e-11);
}

TEST(Linearization, ForwardDifferenceIsFirstOrder)
{
    auto gr = grid();
    auto g = background(gr, 4);
    std::mt19937_64 rng(5);
    auto phi = random::smooth_field(gr, rng, 0.01);
    auto eta = random::smooth_field(gr, rng, 0.05, 4, 1);
    const RealField zero(gr, 0.0);
    const auto r0 = ma_log_residual(g, phi, zero, 0.0);
    const auto lin = linearized_apply(g + ddbar(phi), eta);
    double errors[2];
    int k = 0;
    for (double eps : {1e-3, 5e-4}) {
        auto fd = (ma_log_residual(g, phi + eps * eta, zero, 0.0) - r0) * (1.0 / eps);
        errors[k++] = sup_norm(fd - lin);
    }
    EXPECT_NEAR(errors[0] / errors[1], 2.0, 0.05);
}

TEST(Linearization, CentralDifferenceGradientCheck)
{
    auto gr = grid();
    auto g = background(gr, 6);
    std::mt19937_64 rng(7);
    auto phi = random::smooth_field(gr, rng, 0.01);
    const RealField zero(gr, 0.0);
    const auto gp = g + ddbar(phi);
    const double eps = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
        auto eta = random::smooth_field(gr, rng, 1.0, 5, 2);
        auto fd = (ma_log_residual(g, phi + eps * eta, zero, 0.0) - ma_log_residual(g, phi - eps * eta, zero, 0.0)) *
                  (0.5 / eps);
        const auto lin = linearized_apply(gp, eta);
        EXPECT_LE(sup_norm(fd - lin) / sup_norm(lin), 1e-5) << "direction " << trial;
    }
}

TEST(SolverConfig, Validation)
{
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.t_step_min = 0.5;
    c.t_step_initial = 0.1;
    EXPECT_THROW(c.validate(), Error);
    c = SolverConfig{};
    c.newton_tol = 0.0;
    EXPECT_THROW(c.validate(), Error);
    c = SolverConfig{};
    c.damping = 1.0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(NewtonSolve, ZeroRightHandSide)
{
    auto gr = grid();
    auto g = background(gr, 8);
    auto r = newton_solve(g, RealField(gr, 0.0), SolverConfig{});
    EXPECT_EQ(sup_norm(r.phi), 0.0);
    EXPECT_EQ(r.b, 0.0);
    auto c = continuity_solve(g, RealField(gr, 0.0), SolverConfig{});
    EXPECT_EQ(sup_norm(c.phi), 0.0);
    EXPECT_EQ(c.b, 0.0);
    EXPECT_EQ(c.t_trace.back().t, 1.0);
}

TEST(NewtonSolve, QuadraticConvergence)
{
    auto gr = grid();
    auto g = background(gr, 9);
    std::mt19937_64 rng(10);
    auto F = random::smooth_field(gr, rng, 0.5);
    auto r = newton_solve(g, F, SolverConfig{});
    const auto& h = r.residual_history;
    ASSERT_GE(h.size(), 3u);
    EXPECT_LE(h.back(), 1e-10);
    int checked = 0;
    for (std::size_t k = 0; k + 1 < h.size(); ++k) {
        if (h[k] > 0.2 || h[k + 1] < 1e-13)
            continue;
        EXPECT_LE(h[k + 1], 10.0 * h[k] * h[k]) << "step " << k;
        ++checked;
    }
    EXPECT_GE(checked, 2);
}

TEST(NewtonSolve, SupNormalizationAndPositivity)
{
    auto gr = grid();
    auto g = background(gr, 11);
    std::mt19937_64 rng(12);
    auto F = random::smooth_field(gr, rng, 0.8);
    auto r = continuity_solve(g, F, SolverConfig{});
    EXPECT_LE(std::abs(max_value(r.phi)), 1e-13);
    EXPECT_GT(r.min_eigen_gprime, 0.0);
    EXPECT_GT(weakest_point(g + ddbar(r.phi)).eigenvalue, 0.0);
    EXPECT_LE(sup_norm(ma_log_residual(g, r.phi, F, r.b)), 1e-10);
}

TEST(NewtonSolve, IterationLimit)
{
    auto gr = grid();
    auto g = background(gr, 13);
    std::mt19937_64 rng(14);
    auto F = random::smooth_field(gr, rng, 0.5);
    SolverConfig c;
    c.max_newton_iters = 1;
    expect_error(ErrorCode::max_iters_exceeded, [&] { newton_solve(g, F, c); });
}

TEST(NewtonSolve, RejectsInadmissibleStart)
{
    auto gr = grid();
    auto start = RealField::from_function(gr, [](const Coords& c) { return std::cos(2 * pi * c.x(0)); });
    expect_error(ErrorCode::not_positive, [&] {
        newton_solve(HermitianField::identity(gr), RealField(gr, 0.0), SolverConfig{}, InitialGuess{start, 0.0});
    });
}

TEST(ContinuitySolve, ManufacturedSolution)
{
    auto gr = grid();
    auto g = background(gr, 15);
    auto phi_star = analytic_potential(gr);
    auto F = log_det(g + ddbar(phi_star)) - log_det(g);
    auto r = continuity_solve(g, F, SolverConfig{});
    EXPECT_LE(sup_norm(r.phi - (phi_star - max_value(phi_star))), 1e-6);
    EXPECT_LE(std::abs(r.b), 1e-8);
    EXPECT_GE(r.t_trace.size(), 11u);
}

TEST(ContinuitySolve, StallsBelowMinimumStep)
{
    auto gr = grid();
    auto g = background(gr, 16);
    std::mt19937_64 rng(17);
    auto F = random::smooth_field(gr, rng, 1.0);
    SolverConfig c;
    c.max_newton_iters = 1;
    c.t_step_initial = 0.1;
    c.t_step_min = 0.1;
    expect_error(ErrorCode::continuation_stalled, [&] { continuity_solve(g, F, c); });
}

TEST(ContinuitySolve, ConstantBoundAndMaximumPrinciple)
{
    auto gr = grid();
    auto g = background(gr, 18);
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 4; ++trial) {
        auto F = random::smooth_field(gr, rng, 0.25 * (trial + 1));
        auto r = continuity_solve(g, F, SolverConfig{});
        EXPECT_LE(std::abs(r.b), sup_norm(F) + 1e-8);
        // At the maximum of phi the Hessian is non-positive, so F + b <= 0 there; reversed at the minimum.
        EXPECT_LE(F[argmax(r.phi)] + r.b, 1e-6);
        EXPECT_GE(F[argmin(r.phi)] + r.b, -1e-6);
    }
}

TEST(ContinuitySolve, CompatibilityIntegral)
{
    auto gr = grid();
    auto g = background(gr, 20);
    std::mt19937_64 rng(21);
    auto F = random::smooth_field(gr, rng, 0.7);
    auto r = continuity_solve(g, F, SolverConfig{});
    const auto gp = g + ddbar(r.phi);
    const double lhs = integrate((F + r.b).map([](double x) { return std::exp(x); }), g);
    const double rhs = integrate(RealField(gr, 1.0), gp);
    EXPECT_LE(std::abs(lhs - rhs) / rhs, 1e-8);
}

TEST(ContinuitySolve, UniquenessFromPerturbedStarts)
{
    auto gr = grid();
    auto g = background(gr, 22);
    std::mt19937_64 rng(23);
    auto F = random::smooth_field(gr, rng, 0.6);
    const auto v = gauduchon_weight(g).v;
    auto s1 = newton_solve(g, F, SolverConfig{}, InitialGuess{random::smooth_field(gr, rng, 0.01), 0.2}, &v);
    auto s2 = newton_solve(g, F, SolverConfig{}, InitialGuess{random::smooth_field(gr, rng, 0.01), -0.3}, &v);
    auto s3 = continuity_solve(g, F, SolverConfig{}, &v);
    EXPECT_LE(sup_norm(s1.phi - s2.phi), 1e-8);
    EXPECT_LE(std::abs(s1.b - s2.b), 1e-8);
    EXPECT_LE(sup_norm(s1.phi - s3.phi), 1e-8);
}

TEST(ContinuitySolve, ThreeDimensionalFlat)
{
    auto gr = grid(3, 8);
    std::mt19937_64 rng(24);
    auto F = random::smooth_field(gr, rng, 0.2);
    SolverConfig c;
    c.t_step_initial = 1.0;
    auto r = continuity_solve(HermitianField::identity(gr), F, c);
    EXPECT_LE(sup_norm(ma_log_residual(HermitianField::identity(gr), r.phi, F, r.b)), 1e-10);
    EXPECT_LE(std::abs(r.b), sup_norm(F) + 1e-8);
}
