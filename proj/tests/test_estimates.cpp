#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "cma/estimates.hpp"
#include "cma/random_fields.hpp"

using namespace cma;

namespace {

GridPtr grid(int n = 2, int N = 8) { return Grid::create({n, N, DiffScheme::fourier()}); }

HermitianField background(const GridPtr& gr, unsigned seed)
{
    std::mt19937_64 rng(seed);
    return random::smooth_metric(gr, rng, 0.2);
}

int count_lines(const std::string& s)
{
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST(Report, TrivialSolve)
{
    auto gr = grid();
    auto g = background(gr, 1);
    const RealField zero(gr, 0.0);
    auto r = report(g, continuity_solve(g, zero, SolverConfig{}), zero);
    EXPECT_NEAR(r.sup_tr, 2.0, 1e-14);
    EXPECT_EQ(r.osc_phi, 0.0);
    for (const auto& [a, R] : r.R_alpha)
        EXPECT_NEAR(R, 0.0, 1e-15) << "alpha " << a;
    EXPECT_NEAR(r.C1, 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(r.levelset_measure, 1.0);
    for (const auto& [A, C] : r.fitted_A_C)
        EXPECT_NEAR(C, 2.0, 1e-14) << "A " << A;
    EXPECT_EQ(r.L1_phi, 0.0);
}

TEST(Report, SolvedInstanceProperties)
{
    auto gr = grid();
    auto g = background(gr, 2);
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 3; ++trial) {
        auto F = random::smooth_field(gr, rng, 0.4 * (trial + 1));
        auto sol = continuity_solve(g, F, SolverConfig{});
        auto r = report(g, sol, F);
        EXPECT_GE(r.levelset_measure, std::exp(-r.C1) / 4.0);
        EXPECT_GT(r.levelset_measure, 0.0);
        EXPECT_LE(r.levelset_measure, 1.0);
        for (std::size_t k = 0; k < r.R_alpha.size(); ++k) {
            EXPECT_GE(r.R_alpha[k].second, 0.0);
            if (k > 0) {
                EXPECT_LE(r.R_alpha[k].second, r.R_alpha[k - 1].second + 1e-15);
            }
        }
        EXPECT_LE(r.trace_inequality_excess, 1e-10);
        EXPECT_LE(r.trace_equality_error, 1e-10);
        EXPECT_LE(r.trace_identity_error, 1e-8);
        EXPECT_GE(r.sup_tr, 2.0 - 1e-12); // tr_g g' >= n at the minimum of phi
        EXPECT_NEAR(r.C_at(4.0), r.fitted_A_C.back().second, 0.0);
    }
}

TEST(Report, ThreeDimensionalInequality)
{
    auto gr = grid(3, 8);
    std::mt19937_64 rng(4);
    auto F = random::smooth_field(gr, rng, 0.2);
    const auto g = HermitianField::identity(gr);
    SolverConfig c;
    c.t_step_initial = 1.0;
    auto r = report(g, continuity_solve(g, F, c), F);
    EXPECT_LE(r.trace_inequality_excess, 1e-10);
    EXPECT_LE(r.trace_identity_error, 1e-8);
}

TEST(PotentialStatistics, LevelSetBoundOnRandomFields)
{
    for (int n : {2, 3}) {
        auto gr = grid(n, 8);
        std::mt19937_64 rng(50 + n);
        auto g = n == 2 ? background(gr, 5) : HermitianField::identity(gr);
        for (int trial = 0; trial < (n == 2 ? 100 : 10); ++trial) {
            std::uniform_real_distribution<double> amp(0.1, 5.0);
            auto phi = random::smooth_field(gr, rng, amp(rng), 6, 2);
            phi += -max_value(phi);
            const auto s = potential_statistics(g, phi);
            EXPECT_TRUE(levelset_bound_holds(s)) << "trial " << trial << " C1 " << s.C1;
            for (std::size_t k = 1; k < s.R_alpha.size(); ++k)
                EXPECT_LE(s.R_alpha[k].second, s.R_alpha[k - 1].second + 1e-14);
        }
    }
}

TEST(PotentialStatistics, TwoValuedClosedForm)
{
    // phi = 0 on half the (flat) torus, -1 on the other half.
    auto gr = grid();
    auto phi = RealField::from_function(gr, [](const Coords& c) { return c.x(0) < 0.5 ? 0.0 : -1.0; });
    const auto s = potential_statistics(HermitianField::identity(gr), phi, {1.0});
    const double expected = -std::log(0.5 + 0.5 * std::exp(-1.0));
    EXPECT_NEAR(s.C1, expected, 1e-14);
    EXPECT_NEAR(s.R_alpha[0].second, expected, 1e-14);
    EXPECT_DOUBLE_EQ(s.levelset_measure, 1.0);
    EXPECT_NEAR(s.L1_phi, 0.5, 1e-14);
    EXPECT_NEAR(s.osc_phi, 1.0, 0.0);
}

TEST(Sweep, ZeroEntryIsTrivialAndConstantBounded)
{
    auto gr = grid();
    auto g = background(gr, 6);
    std::mt19937_64 rng(7);
    auto F = random::smooth_field(gr, rng, 0.5);
    const std::vector<double> scales{0.0, 0.25, 0.5, 1.0, 1.5, 2.0};
    auto entries = sweep(g, F, scales, SolverConfig{});
    ASSERT_EQ(entries.size(), scales.size());
    ASSERT_TRUE(entries[0].report.has_value());
    EXPECT_EQ(entries[0].report->osc_phi, 0.0);
    EXPECT_NEAR(entries[0].report->C_at(4.0), 2.0, 1e-14);
    double lo = 1e300, hi = 0.0;
    for (std::size_t k = 1; k < entries.size(); ++k) {
        ASSERT_TRUE(entries[k].report.has_value()) << entries[k].error;
        const double c = entries[k].report->C_at(4.0);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        EXPECT_LE(std::abs(entries[k].report->b), entries[k].s * sup_norm(F) + 1e-8);
    }
    EXPECT_LT(hi / lo, 4.0);
}

TEST(Sweep, FlatKaehlerL1Bounded)
{
    auto gr = grid();
    const auto g = HermitianField::identity(gr);
    std::mt19937_64 rng(8);
    auto F = random::smooth_field(gr, rng, 0.5);
    auto entries = sweep(g, F, {0.25, 0.5, 1.0, 1.5, 2.0}, SolverConfig{});
    double prev = 0.0;
    for (const auto& e : entries) {
        ASSERT_TRUE(e.report.has_value()) << e.error;
        EXPECT_LT(e.report->L1_phi, 1.0);
        EXPECT_GE(e.report->L1_phi, prev);
        prev = e.report->L1_phi;
    }
}

TEST(Sweep, FailingEntryDoesNotAbort)
{
    auto gr = grid();
    auto g = background(gr, 9);
    std::mt19937_64 rng(10);
    auto F = random::smooth_field(gr, rng, 1.0);
    SolverConfig c;
    c.max_newton_iters = 2;
    c.t_step_initial = 1.0;
    c.t_step_min = 1.0;
    auto entries = sweep(g, F, {0.0, 3.0, 0.0}, c);
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_TRUE(entries[0].report.has_value());
    EXPECT_FALSE(entries[1].report.has_value());
    EXPECT_NE(entries[1].error.find("continuation_stalled"), std::string::npos);
    EXPECT_TRUE(entries[2].report.has_value());

    const auto wide = sweep_summary_csv(entries);
    EXPECT_EQ(count_lines(wide), 4);
    std::istringstream lines(wide);
    std::string header, row;
    std::getline(lines, header);
    const auto columns = std::count(header.begin(), header.end(), ',');
    while (std::getline(lines, row)) {
        // Quoted error text may hold commas; count up to the quote.
        const auto end = row.find('"');
        EXPECT_EQ(std::count(row.begin(), end == std::string::npos ? row.end() : row.begin() + static_cast<long>(end), ','),
                  columns);
    }
    const auto long_csv = sweep_long_csv(entries);
    EXPECT_EQ(count_lines(long_csv), 1 + 2 * 5 * 4 + 1);
}

TEST(Sweep, CsvIsDeterministic)
{
    auto gr = grid();
    auto g = background(gr, 11);
    std::mt19937_64 rng(12);
    auto F = random::smooth_field(gr, rng, 0.5);
    auto a = sweep_long_csv(sweep(g, F, {0.5, 1.0}, SolverConfig{}));
    auto b = sweep_long_csv(sweep(g, F, {0.5, 1.0}, SolverConfig{}));
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.substr(0, a.find('\n')), "s,alpha,A,status,R_alpha,C_A,sup_tr,osc_phi,C1,levelset_measure,L1_phi,Q_max,b");
}
