#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "cma/calculus.hpp"
#include "cma/krylov.hpp"

namespace cma {

/// Torsion T^k_{ij} of the Chern connection, antisymmetric in (i, j).
class TorsionField {
public:
    explicit TorsionField(GridPtr grid)
        : grid_(std::move(grid)), n_(grid_->n()),
          values_(grid_->size() * static_cast<std::size_t>(n_ * n_ * n_))
    {
    }

    const GridPtr& grid() const { return grid_; }
    int n() const { return n_; }

    cplx operator()(std::size_t p, int k, int i, int j) const { return values_[offset(p, k, i, j)]; }

    /// Sets T^k_{ij} and T^k_{ji} = -T^k_{ij} together.
    void set(std::size_t p, int k, int i, int j, cplx v)
    {
        values_[offset(p, k, i, j)] = v;
        values_[offset(p, k, j, i)] = -v;
    }

    double sup_norm() const
    {
        double m = 0.0;
        for (const cplx& v : values_)
            m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t offset(std::size_t p, int k, int i, int j) const
    {
        return p * static_cast<std::size_t>(n_ * n_ * n_) + static_cast<std::size_t>((k * n_ + i) * n_ + j);
    }

    GridPtr grid_;
    int n_;
    std::vector<cplx> values_;
};

/// Holomorphic derivatives dg[m](i, l) = d_m g_{i lbar}, one HermitianField-shaped block per m
/// (the blocks are not Hermitian themselves).
inline std::vector<HermitianField> holomorphic_derivatives(const HermitianField& g)
{
    const int n = g.n();
    std::vector<HermitianField> dg(static_cast<std::size_t>(n), HermitianField(g.grid()));
    for (int i = 0; i < n; ++i)
        for (int l = 0; l < n; ++l) {
            const ComplexField comp = g.component(i, l);
            for (int m = 0; m < n; ++m)
                dg[static_cast<std::size_t>(m)].set_component(i, l, d_holo(comp, m));
        }
    return dg;
}

/// T^k_{ij} = g^{k lbar} (d_i g_{j lbar} - d_j g_{i lbar}).
inline TorsionField torsion(const HermitianField& g)
{
    require_metric(g);
    const int n = g.n();
    const auto dg = holomorphic_derivatives(g);
    TorsionField out(g.grid());
    for (std::size_t p = 0; p < g.points(); ++p) {
        const PointMatrix ginv = matrix::inverse(g.at(p));
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    cplx s = 0.0;
                    for (int l = 0; l < n; ++l)
                        s += ginv(l, k) * (dg[static_cast<std::size_t>(i)].entry(p, j, l) -
                                           dg[static_cast<std::size_t>(j)].entry(p, i, l));
                    out.set(p, k, i, j, s);
                }
    }
    return out;
}

struct MetricDefects {
    double kaehler_defect = 0.0;
    double balanced_defect = 0.0;
    double gauduchon_defect = 0.0;
};

namespace detail {

inline double factorial(int k)
{
    double f = 1.0;
    for (int i = 2; i <= k; ++i)
        f *= i;
    return f;
}

/// Coefficients P_{ij} of omega^{n-1} in the pairing alpha ^ omega^{n-1} = sum alpha_{ij} P_{ij} vol_0,
/// i.e. (n-1)! adj(g)^T, optionally weighted pointwise.
inline HermitianField omega_power_coefficients(const HermitianField& g, const RealField* weight = nullptr)
{
    HermitianField out(g.grid());
    const double fact = factorial(g.n() - 1);
    parallel_for(g.points(), [&](std::size_t p) {
        const PointMatrix adj = matrix::adjugate(g.at(p));
        const double w = fact * (weight != nullptr ? (*weight)[p] : 1.0);
        for (int i = 0; i < g.n(); ++i)
            for (int j = 0; j < g.n(); ++j)
                out.entry(p, i, j) = w * adj(j, i);
    });
    return out;
}

} // namespace detail

/**
 * Coefficient of i ddbar(v omega^{n-1}) against the flat volume form
 * prod_k (i dz^k ^ dzbar^k). Its flat mean is exactly zero for every v.
 */
inline RealField gauduchon_operator(const HermitianField& g, const RealField& v)
{
    return contracted_ddbar(detail::omega_power_coefficients(g, &v));
}

/// Defect norms: sup |d omega|, sup_i |sum_j T^j_{ji}|, sup |ddbar omega^{n-1}| coefficients.
inline MetricDefects defects(const HermitianField& g)
{
    require_metric(g);
    const int n = g.n();
    MetricDefects out;
    const auto dg = holomorphic_derivatives(g);
    for (std::size_t p = 0; p < g.points(); ++p)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    out.kaehler_defect = std::max(out.kaehler_defect,
                                                  std::abs(dg[static_cast<std::size_t>(k)].entry(p, i, j) -
                                                           dg[static_cast<std::size_t>(i)].entry(p, k, j)));
    const TorsionField t = torsion(g);
    for (std::size_t p = 0; p < g.points(); ++p)
        for (int i = 0; i < n; ++i) {
            cplx s = 0.0;
            for (int j = 0; j < n; ++j)
                s += t(p, j, j, i);
            out.balanced_defect = std::max(out.balanced_defect, std::abs(s));
        }
    out.gauduchon_defect = sup_norm(gauduchon_operator(g, RealField(g.grid(), 1.0)));
    return out;
}

/// The canonical Laplacian g^{i jbar} d_i d_jbar of a fixed metric, ready for repeated application.
class CanonicalLaplacian {
public:
    explicit CanonicalLaplacian(const HermitianField& g) : inv_(inverse(g)) {}

    const HermitianField& inverse_metric() const { return inv_; }

    RealField operator()(const RealField& f) const
    {
        require_same_grid(f.grid(), inv_.grid());
        return trace_with(inv_, ddbar(f));
    }

    /// Mean of tr(g^{-1}) / n: the flat Laplacian multiple that best matches this operator.
    double flat_scale() const
    {
        double s = 0.0;
        for (std::size_t p = 0; p < inv_.points(); ++p)
            for (int i = 0; i < inv_.n(); ++i)
                s += inv_.entry(p, i, i).real();
        return s / static_cast<double>(inv_.points() * static_cast<std::size_t>(inv_.n()));
    }

private:
    HermitianField inv_;
};

inline RealField canonical_laplacian(const HermitianField& g, const RealField& f)
{
    require_metric(g);
    return CanonicalLaplacian(g)(f);
}

/// (tr_g g', tr_{g'} g) pointwise.
inline std::pair<RealField, RealField> trace_pair(const HermitianField& g, const HermitianField& gp)
{
    require_metric(g);
    require_metric(gp, "second metric");
    return {trace_with(inverse(g), gp), trace_with(inverse(gp), g)};
}

/// Coefficient matrix of Ric(omega): -(1/2pi) d_k d_lbar log det g.
inline HermitianField ricci_form(const HermitianField& g)
{
    require_metric(g);
    HermitianField out = ddbar(log_det(g));
    out *= -1.0 / (2.0 * std::numbers::pi);
    return out;
}

struct GauduchonResult {
    RealField v;          ///< conformal weight of omega^{n-1}, v = e^{(n-1)u}
    RealField u;          ///< log-conformal factor, omega_G = e^u omega
    double residual = 0.0; ///< sup |ddbar(v omega^{n-1})| / sup |v|
    int iterations = 0;
    HermitianField metric; ///< omega_G = e^u g
};

struct GauduchonOptions {
    double tolerance = 1e-13;
    int max_iters = 2000;
};

/**
 * Gauduchon weight of g: the positive kernel element v of
 * v -> ddbar(v omega^{n-1}), normalized so that integral v omega^n = 1.
 *
 * The kernel is found from the bordered system
 *   L v + lambda = 0,  mean(v) = 1,
 * which is nonsingular because the range of L is orthogonal to constants
 * while the kernel of L is not.
 */
inline GauduchonResult gauduchon_weight(const HermitianField& g, const GauduchonOptions& options = {})
{
    require_metric(g);
    const auto& grid = g.grid();
    const int n = g.n();
    const HermitianField coeffs = detail::omega_power_coefficients(g);
    double flat_scale = 0.0;
    for (std::size_t p = 0; p < g.points(); ++p)
        for (int i = 0; i < n; ++i)
            flat_scale += coeffs.entry(p, i, i).real();
    flat_scale /= static_cast<double>(g.points() * static_cast<std::size_t>(n));

    ConstrainedSolver solver(
        grid, [&](const RealField& v) { return gauduchon_operator(g, v); }, 1.0,
        RealField(grid, 1.0 / static_cast<double>(grid->size())), flat_scale);
    const RealField ones(grid, 1.0);
    const ConstrainedSolution sol = solver.solve(RealField(grid, 0.0), 1.0, options.tolerance, options.max_iters, &ones);

    GauduchonResult out;
    out.iterations = sol.iterations;
    RealField v = sol.eta;
    for (double x : v.values())
        if (!(x > 0.0))
            throw Error(ErrorCode::gauduchon_kernel_not_positive,
                        "kernel element has non-positive value " + std::to_string(x) +
                            "; the discretization is too coarse for this metric");
    v *= 1.0 / integrate(v, g);
    out.residual = sup_norm(gauduchon_operator(g, v)) / sup_norm(v);
    out.u = v.map([n](double x) { return std::log(x) / (n - 1); });
    out.metric = g.scaled(out.u.map([](double x) { return std::exp(x); }));
    out.v = std::move(v);
    return out;
}

/// Both sides of int |d psi^{(p+1)/2}|^2_G omega_G^2 = (p+1)^2/(4p) int psi^p (-Delta_G psi) omega_G^2.
struct IntegrationByParts {
    double lhs = 0.0;
    double rhs = 0.0;
    double relative_error() const { return std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300); }
};

inline IntegrationByParts gauduchon_integration_by_parts(const HermitianField& gG, const RealField& psi, double p)
{
    require_metric(gG, "Gauduchon metric");
    require_same_grid(gG.grid(), psi.grid());
    if (!(p >= 1.0))
        throw Error(ErrorCode::invalid_argument, "exponent p must be at least 1");
    if (min_value(psi) < 0.0)
        throw Error(ErrorCode::invalid_argument, "psi must be nonnegative");
    const int n = gG.n();
    const auto& grid = gG.grid();
    const CanonicalLaplacian lap(gG);
    const RealField lap_psi = lap(psi);
    const RealField w = psi.map([p](double x) { return std::pow(x, 0.5 * (p + 1.0)); });
    std::vector<ComplexField> dw;
    for (int j = 0; j < n; ++j)
        dw.push_back(d_holo(w, j));
    const auto& inv = lap.inverse_metric();
    RealField grad2(grid), weighted(grid);
    for (std::size_t q = 0; q < grid->size(); ++q) {
        cplx s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                s += inv.entry(q, j, i) * dw[static_cast<std::size_t>(i)][q] * std::conj(dw[static_cast<std::size_t>(j)][q]);
        grad2[q] = s.real();
        weighted[q] = std::pow(psi[q], p) * -lap_psi[q];
    }
    return {integrate(grad2, gG), (p + 1.0) * (p + 1.0) / (4.0 * p) * integrate(weighted, gG)};
}

} // namespace cma
