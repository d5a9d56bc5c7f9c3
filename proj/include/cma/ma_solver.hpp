#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cma/hermitian_geometry.hpp"

namespace cma {

struct SolverConfig {
    double newton_tol = 1e-10;  ///< sup-norm of the residual
    int max_newton_iters = 30;
    double t_step_initial = 0.1;
    double t_step_min = 1e-3;
    double damping = 0.5; ///< backtracking factor
    double linear_tol = 1e-12;
    int max_linear_iters = 600;

    void validate() const
    {
        if (!(newton_tol > 0.0) || !(linear_tol > 0.0) || !(t_step_min > 0.0))
            throw Error(ErrorCode::invalid_argument, "solver tolerances must be positive");
        if (!(t_step_min <= t_step_initial) || !(t_step_initial <= 1.0))
            throw Error(ErrorCode::invalid_argument, "need t_step_min <= t_step_initial <= 1");
        if (!(damping > 0.0 && damping < 1.0))
            throw Error(ErrorCode::invalid_argument, "damping must lie in (0, 1)");
        if (max_newton_iters < 1 || max_linear_iters < 1)
            throw Error(ErrorCode::invalid_argument, "iteration limits must be positive");
    }
};

struct TracePoint {
    double t = 0.0;
    int newton_iters = 0;
    double residual = 0.0;
};

struct SolveResult {
    RealField phi;                        ///< sup phi = 0
    double b = 0.0;
    std::vector<TracePoint> t_trace;
    double min_eigen_gprime = 0.0;
    std::vector<double> residual_history; ///< sup |R| per Newton iterate (last solve)
    double residual = 0.0;
};

struct WeakestPoint {
    double eigenvalue = 0.0;
    std::size_t point = 0;
};

/// Smallest eigenvalue over all grid points and where it occurs.
inline WeakestPoint weakest_point(const HermitianField& g)
{
    std::vector<double> mins(g.points());
    parallel_for(g.points(), [&](std::size_t p) { mins[p] = matrix::min_eigenvalue(g.at(p)); });
    const auto it = std::min_element(mins.begin(), mins.end());
    return {*it, static_cast<std::size_t>(it - mins.begin())};
}

inline void require_positive(const HermitianField& gp, const std::string& what = "g + ddbar(phi)")
{
    const WeakestPoint w = weakest_point(gp);
    if (!(w.eigenvalue > 0.0)) {
        const Coords c = gp.grid()->coords(w.point);
        std::string where = "(";
        for (int j = 0; j < gp.n(); ++j)
            where += (j ? ", " : "") + std::to_string(c.x(j)) + ", " + std::to_string(c.y(j));
        throw Error(ErrorCode::not_positive, what + " has eigenvalue " + std::to_string(w.eigenvalue) +
                                                 " at grid point " + std::to_string(w.point) + " " + where + ")");
    }
}

/// log det(g + ddbar phi) - log det g - F - b.
inline RealField ma_log_residual(const HermitianField& g, const RealField& phi, const RealField& F, double b)
{
    require_same_grid(g.grid(), phi.grid());
    require_same_grid(g.grid(), F.grid());
    const HermitianField gp = g + ddbar(phi);
    require_positive(gp);
    RealField r = log_det(gp) - log_det(g) - F;
    r += -b;
    return r;
}

/// Derivative of phi -> log det(g + ddbar phi) at the iterate with metric gp: the Laplacian of gp.
inline RealField linearized_apply(const HermitianField& gp, const RealField& eta)
{
    return canonical_laplacian(gp, eta);
}

namespace detail {

struct Iterate {
    RealField phi;
    double b = 0.0;
    int iterations = 0;
    double residual = 0.0;
    double min_eigen = 0.0;
    std::vector<double> history;
};

/**
 * Damped Newton on (phi, b) with the gauge sum_p c_p phi_p = 0. Returns the
 * iterate in that gauge; the caller decides on the output normalization.
 */
inline Iterate newton(const HermitianField& g, const RealField& log_det_g, const RealField& F,
                      const RealField& weights, const SolverConfig& cfg, RealField phi, double b)
{
    Iterate it;
    HermitianField gp = g + ddbar(phi);
    require_positive(gp);
    auto residual_of = [&](const HermitianField& m, double bb) {
        RealField r = log_det(m) - log_det_g - F;
        r += -bb;
        return r;
    };
    auto gauge = [&](const RealField& f) {
        double s = 0.0;
        for (std::size_t p = 0; p < f.size(); ++p)
            s += weights[p] * f[p];
        return s;
    };

    RealField R = residual_of(gp, b);
    double res = sup_norm(R);
    it.history.push_back(res);
    for (int k = 0;; ++k) {
        if (res <= cfg.newton_tol)
            break;
        if (k >= cfg.max_newton_iters)
            throw Error(ErrorCode::max_iters_exceeded, "Newton residual " + std::to_string(res) + " after " +
                                                           std::to_string(k) + " iterations");
        const CanonicalLaplacian lap(gp);
        const ConstrainedSolver solver(
            g.grid(), [&](const RealField& e) { return lap(e); }, -1.0, weights, lap.flat_scale());
        RealField rhs = R;
        rhs *= -1.0;
        const ConstrainedSolution step = solver.solve(rhs, -gauge(phi), cfg.linear_tol, cfg.max_linear_iters);
        if (!(step.relative_residual <= 1e-6))
            throw Error(ErrorCode::linear_solver_failed,
                        "linearized solve reached relative residual " + std::to_string(step.relative_residual));

        const HermitianField d_gp = ddbar(step.eta);
        const double current_min = weakest_point(gp).eigenvalue;
        double s = 1.0;
        bool positivity_blocked = false;
        while (true) {
            HermitianField trial = d_gp;
            trial *= s;
            trial = gp + trial;
            const double m = weakest_point(trial).eigenvalue;
            if (m >= 0.1 * current_min) {
                RealField R_try = residual_of(trial, b + s * step.beta);
                const double res_try = sup_norm(R_try);
                if (res_try < res || res_try <= cfg.newton_tol) {
                    RealField d = step.eta;
                    d *= s;
                    phi += d;
                    b += s * step.beta;
                    gp = std::move(trial);
                    R = std::move(R_try);
                    res = res_try;
                    break;
                }
                positivity_blocked = false;
            } else {
                positivity_blocked = true;
            }
            s *= cfg.damping;
            if (s < 1e-6)
                throw Error(positivity_blocked ? ErrorCode::positivity_lost : ErrorCode::max_iters_exceeded,
                            positivity_blocked ? "line search cannot keep g + ddbar(phi) positive"
                                               : "line search found no residual decrease from " +
                                                     std::to_string(res));
        }
        it.history.push_back(res);
        it.iterations = k + 1;
    }
    it.phi = std::move(phi);
    it.b = b;
    it.residual = res;
    it.min_eigen = weakest_point(gp).eigenvalue;
    return it;
}

inline void require_finite(const RealField& f, const std::string& what)
{
    for (double x : f.values())
        if (!std::isfinite(x))
            throw Error(ErrorCode::invalid_argument, what + " has non-finite samples");
}

inline RealField gauge_weights(const HermitianField& g, const RealField* gauduchon_v)
{
    RealField v = gauduchon_v != nullptr ? *gauduchon_v : gauduchon_weight(g).v;
    require_same_grid(v.grid(), g.grid());
    RealField c = v * volume_density(g);
    c *= 1.0 / static_cast<double>(c.size());
    return c;
}

inline SolveResult finish(Iterate it, std::vector<TracePoint> trace)
{
    SolveResult out;
    out.phi = std::move(it.phi);
    out.phi += -max_value(out.phi);
    out.b = it.b;
    out.t_trace = std::move(trace);
    out.min_eigen_gprime = it.min_eigen;
    out.residual_history = std::move(it.history);
    out.residual = it.residual;
    return out;
}

} // namespace detail

struct InitialGuess {
    RealField phi;
    double b = 0.0;
};

/**
 * Newton iteration for log det(g + ddbar phi) - log det g = F + b, gauge
 * integral phi v omega^n = 0 with v the Gauduchon weight of g (computed when
 * not supplied). The result is shifted to sup phi = 0.
 */
inline SolveResult newton_solve(const HermitianField& g, const RealField& F, const SolverConfig& config,
                                const std::optional<InitialGuess>& initial = std::nullopt,
                                const RealField* gauduchon_v = nullptr)
{
    config.validate();
    require_metric(g);
    require_same_grid(g.grid(), F.grid());
    detail::require_finite(F, "F");
    const RealField weights = detail::gauge_weights(g, gauduchon_v);
    RealField phi0 = initial ? initial->phi : RealField(g.grid(), 0.0);
    const double b0 = initial ? initial->b : 0.0;
    detail::Iterate it = detail::newton(g, log_det(g), F, weights, config, std::move(phi0), b0);
    std::vector<TracePoint> trace{{1.0, it.iterations, it.residual}};
    return detail::finish(std::move(it), std::move(trace));
}

/// Continuity path (g + ddbar phi_t)^n = e^{tF + b_t} g^n from t = 0 to t = 1.
inline SolveResult continuity_solve(const HermitianField& g, const RealField& F, const SolverConfig& config,
                                    const RealField* gauduchon_v = nullptr)
{
    config.validate();
    require_metric(g);
    require_same_grid(g.grid(), F.grid());
    detail::require_finite(F, "F");
    const RealField weights = detail::gauge_weights(g, gauduchon_v);
    const RealField log_det_g = log_det(g);

    detail::Iterate current;
    current.phi = RealField(g.grid(), 0.0);
    current.min_eigen = weakest_point(g).eigenvalue;
    current.history.push_back(0.0);
    std::vector<TracePoint> trace{{0.0, 0, 0.0}};
    double t = 0.0;
    double dt = config.t_step_initial;
    while (t < 1.0) {
        const double t_next = t + dt >= 1.0 - 1e-12 ? 1.0 : t + dt;
        RealField Ft = F;
        Ft *= t_next;
        try {
            current = detail::newton(g, log_det_g, Ft, weights, config, current.phi, current.b);
            t = t_next;
            trace.push_back({t, current.iterations, current.residual});
            dt = std::min(2.0 * dt, config.t_step_initial);
        } catch (const Error& e) {
            switch (e.code()) {
            case ErrorCode::max_iters_exceeded:
            case ErrorCode::positivity_lost:
            case ErrorCode::linear_solver_failed:
            case ErrorCode::not_positive:
                break;
            default:
                throw;
            }
            dt *= 0.5;
            if (dt < config.t_step_min)
                throw Error(ErrorCode::continuation_stalled, "step below t_step_min at t = " + std::to_string(t) +
                                                                 " (last failure: " + e.what() + ")");
        }
    }
    return detail::finish(std::move(current), std::move(trace));
}

} // namespace cma
