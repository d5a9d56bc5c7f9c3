#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cma/ma_solver.hpp"

namespace cma {

/**
 * Wedge normalization shared by everything in this header (complex dimension two):
 * for real (1,1)-forms alpha, beta with coefficient matrices A, B,
 *
 *     alpha ^ beta = (sum_{ij} A_{ij} adj(B)_{ji}) vol_0,
 *
 * where vol_0 = prod_k (i dz^k ^ dzbar^k) has total mass one on the unit torus.
 * In particular omega ^ omega = 2 det g vol_0, and 2 alpha ^ omega / omega^2 = tr_g alpha.
 */
inline RealField wedge_density(const HermitianField& a, const HermitianField& b)
{
    require_same_grid(a.grid(), b.grid());
    if (a.n() != 2)
        throw Error(ErrorCode::invalid_argument, "wedge of (1,1)-forms is only defined here for n = 2");
    RealField out(a.grid());
    parallel_for(a.points(), [&](std::size_t p) {
        const PointMatrix adj = matrix::adjugate(b.at(p));
        cplx s = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                s += a.entry(p, i, j) * adj(j, i);
        out[p] = s.real();
    });
    return out;
}

/**
 * sup |d_k psi_{i jbar} - d_i psi_{k jbar}|; the dbar part follows by Hermitian symmetry.
 * Modes at the Nyquist frequency of any axis are left out: first derivatives annihilate
 * them while second derivatives do not, so an exact ddbar f would otherwise look non-closed.
 */
inline double closedness_defect(const HermitianField& psi)
{
    const auto& grid = psi.grid();
    const int n = psi.n();
    const int N = grid->points_per_axis();
    const int axes = 2 * n;
    const std::size_t size = grid->size();
    std::vector<bool> resolved(size, true);
    for (std::size_t p = 0; p < size; ++p) {
        std::size_t q = p;
        for (int a = 0; a < axes; ++a, q /= static_cast<std::size_t>(N))
            if (2 * static_cast<int>(q % static_cast<std::size_t>(N)) == N)
                resolved[p] = false;
    }
    // spectra[(i * n + j)] of psi_{i jbar}, Nyquist modes removed.
    std::vector<std::vector<cplx>> spectra;
    std::vector<cplx> comp(size);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            for (std::size_t p = 0; p < size; ++p)
                comp[p] = psi.entry(p, i, j);
            std::vector<cplx> spec(size);
            grid->forward(comp.data(), spec.data());
            for (std::size_t p = 0; p < size; ++p)
                if (!resolved[p])
                    spec[p] = 0.0;
            spectra.push_back(std::move(spec));
        }
    double out = 0.0;
    for (int k = 0; k < n; ++k)
        for (int i = k + 1; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const auto a = grid->apply_symbol(spectra[static_cast<std::size_t>(i * n + j)], grid->holo_symbol(k));
                const auto b = grid->apply_symbol(spectra[static_cast<std::size_t>(k * n + j)], grid->holo_symbol(i));
                for (std::size_t p = 0; p < size; ++p)
                    out = std::max(out, std::abs(a[p] - b[p]));
            }
    return out;
}

namespace detail {

inline void require_surface(const HermitianField& g)
{
    if (g.n() != 2)
        throw Error(ErrorCode::invalid_argument,
                    "Chern form prescription needs complex dimension 2, got " + std::to_string(g.n()));
}

inline void require_closed(const HermitianField& psi, double tol)
{
    const double defect = closedness_defect(psi);
    const double scale = std::max(1.0, psi.sup_norm());
    if (!(defect <= tol * scale))
        throw Error(ErrorCode::not_closed,
                    "d psi has sup norm " + std::to_string(defect) + " (tolerance " + std::to_string(tol * scale) + ")");
}

} // namespace detail

/// Integral of (Ric(omega) - psi) ^ omega_G in the normalization of wedge_density.
inline double constraint_integral(const HermitianField& g, const HermitianField& psi, const HermitianField& omega_G,
                                  double closed_tol = 1e-8)
{
    detail::require_surface(g);
    require_same_grid(g.grid(), psi.grid());
    require_same_grid(g.grid(), omega_G.grid());
    require_metric(omega_G, "omega_G");
    detail::require_closed(psi, closed_tol);
    const RealField density = wedge_density(ricci_form(g) - psi, omega_G);
    double s = 0.0;
    for (double x : density.values())
        s += x;
    return s / static_cast<double>(density.size());
}

struct PrescriptionConfig {
    SolverConfig solver;
    double closed_tol = 1e-8;     ///< relative to max(1, sup |psi|)
    double constraint_tol = 1e-8; ///< relative to 1 + integral of |(Ric - psi) ^ omega_G|
    double poisson_tol = 1e-13;
    int max_poisson_iters = 600;
};

struct PrescriptionResult {
    double constraint_value = 0.0;
    RealField f;                   ///< flat mean zero
    double asd_residual = 0.0;     ///< sup of the omega_G ^ a coefficient
    double a_norm = 0.0;           ///< L2(omega_G) norm of a
    double poisson_border = 0.0;   ///< cokernel component absorbed by the Poisson solve
    SolveResult solve;
    double transgression_error = 0.0; ///< sup |Ric(omega_phi) - Ric(omega) + ddbar(log(omega_phi^2/omega^2))/2pi|
    double final_ricci_error = 0.0;   ///< sup |Ric(omega_phi) - psi|
};

/// L2(omega_G) norm of a real (1,1)-form: (integral |a|^2_G omega_G^2 / 2)^{1/2}.
inline double form_l2_norm(const HermitianField& a, const HermitianField& G)
{
    double s = 0.0;
    for (std::size_t p = 0; p < a.points(); ++p) {
        const PointMatrix gi = matrix::inverse(G.at(p));
        const PointMatrix m = gi * a.at(p);
        s += (m * m).trace().real() * matrix::hdet(G.at(p));
    }
    return std::sqrt(s / static_cast<double>(a.points()));
}

/**
 * Writes psi = Ric(omega + i ddbar phi): solves Delta_G f = 2pi tr_G (Ric - psi) in the flat
 * mean-zero gauge, then (omega + i ddbar phi)^2 = e^{f + b} omega^2.
 */
inline PrescriptionResult prescribe_ricci(const HermitianField& g, const HermitianField& psi,
                                          const PrescriptionConfig& config = {})
{
    detail::require_surface(g);
    require_metric(g);
    config.solver.validate();
    const auto& grid = g.grid();
    constexpr double two_pi = 2.0 * std::numbers::pi;

    const GauduchonResult gauduchon = gauduchon_weight(g);
    const HermitianField& G = gauduchon.metric;
    const HermitianField ric = ricci_form(g);

    PrescriptionResult out;
    out.constraint_value = constraint_integral(g, psi, G, config.closed_tol);
    const HermitianField diff = ric - psi;
    const RealField density = wedge_density(diff, G);
    double scale = 0.0;
    for (double x : density.values())
        scale += std::abs(x);
    scale /= static_cast<double>(density.size());
    if (!(std::abs(out.constraint_value) <= config.constraint_tol * (1.0 + scale)))
        throw Error(ErrorCode::constraint_violated,
                    "integral of (Ric - psi) ^ omega_G is " + std::to_string(out.constraint_value));

    const CanonicalLaplacian lap_G(G);
    RealField rhs = trace_with(lap_G.inverse_metric(), diff);
    rhs *= two_pi;
    const ConstrainedSolver solver(
        grid, [&](const RealField& f) { return lap_G(f); }, 1.0,
        RealField(grid, 1.0 / static_cast<double>(grid->size())), lap_G.flat_scale());
    const ConstrainedSolution poisson = solver.solve(rhs, 0.0, config.poisson_tol, config.max_poisson_iters);
    if (!poisson.converged)
        throw Error(ErrorCode::linear_solver_failed,
                    "Poisson solve for f stopped at relative residual " + std::to_string(poisson.relative_residual));
    out.f = poisson.eta;
    out.poisson_border = poisson.beta;

    HermitianField a = diff - (1.0 / two_pi) * ddbar(out.f);
    out.asd_residual = sup_norm(wedge_density(a, G));
    out.a_norm = form_l2_norm(a, G);

    out.solve = continuity_solve(g, out.f, config.solver, &gauduchon.v);
    const HermitianField gp = g + ddbar(out.solve.phi);
    const HermitianField ric_p = ricci_form(gp);
    HermitianField transgression = ric_p - ric + (1.0 / two_pi) * ddbar(log_det(gp) - log_det(g));
    out.transgression_error = transgression.sup_norm();
    out.final_ricci_error = (ric_p - psi).sup_norm();
    return out;
}

} // namespace cma
