#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cma/ma_solver.hpp"

namespace cma {

inline const std::vector<double> kDefaultAlphas{0.25, 0.5, 1.0, 2.0, 4.0};
inline const std::vector<double> kDefaultExponents{0.5, 1.0, 2.0, 4.0};
inline constexpr double kReferenceExponent = 4.0;

/// Integral quantities of a potential against d mu = omega^n / integral omega^n.
struct PotentialStatistics {
    double inf_phi = 0.0;
    double osc_phi = 0.0;
    std::vector<std::pair<double, double>> R_alpha; ///< (alpha, -inf phi - (1/alpha) log int e^{-alpha phi} d mu)
    double C1 = 0.0;                                ///< R_1
    double levelset_measure = 0.0;                  ///< mu{phi <= inf phi + C1 + 1}
    double L1_phi = 0.0;                            ///< int |phi| d mu
};

inline double exp_moment_exponent(const Measure& mu, const RealField& phi, double inf_phi, double alpha)
{
    // Shifted by inf phi so every exponential is at most one.
    double s = 0.0;
    for (std::size_t p = 0; p < phi.size(); ++p)
        s += mu.weights()[p] * std::exp(-alpha * (phi[p] - inf_phi));
    return -std::log(s) / alpha;
}

inline PotentialStatistics potential_statistics(const HermitianField& g, const RealField& phi,
                                                const std::vector<double>& alphas = kDefaultAlphas)
{
    require_same_grid(g.grid(), phi.grid());
    const Measure mu(g);
    PotentialStatistics out;
    out.inf_phi = min_value(phi);
    out.osc_phi = max_value(phi) - out.inf_phi;
    for (double a : alphas) {
        if (!(a > 0.0))
            throw Error(ErrorCode::invalid_argument, "alpha must be positive");
        out.R_alpha.emplace_back(a, exp_moment_exponent(mu, phi, out.inf_phi, a));
    }
    out.C1 = exp_moment_exponent(mu, phi, out.inf_phi, 1.0);
    const double level = out.inf_phi + out.C1 + 1.0;
    out.levelset_measure = std::min(1.0, mu.measure_of(phi, [level](double x) { return x <= level; }));
    out.L1_phi = mu.integrate(phi.map([](double x) { return std::abs(x); }));
    return out;
}

/// The level-set lower bound e^{-C1}/4 at the measured C1.
inline bool levelset_bound_holds(const PotentialStatistics& s)
{
    return s.levelset_measure >= std::exp(-s.C1) / 4.0;
}

struct EstimateReport {
    double sup_tr = 0.0;  ///< sup tr_g g'
    double osc_phi = 0.0;
    std::vector<std::pair<double, double>> R_alpha;
    double C1 = 0.0;
    double levelset_measure = 0.0;
    std::vector<std::pair<double, double>> fitted_A_C; ///< (A, sup tr_g g' e^{-A (phi - inf phi)})
    double L1_phi = 0.0;
    double Q_max = 0.0;                                 ///< max of log tr_g g' - A phi at A = Q_exponent
    double Q_exponent = kReferenceExponent;
    double b = 0.0;

    // Pointwise diagnostics on the solved metric.
    double trace_identity_error = 0.0; ///< sup |tr_g g' - n - Delta phi|
    double trace_inequality_excess = 0.0; ///< max of (tr_g g' - rhs) / rhs, rhs = (tr_g' g)^{n-1} e^{F+b} / (n-1)!
    double trace_equality_error = 0.0;    ///< n = 2 only: max |tr_g g' - tr_g' g e^{F+b}| / (1 + tr_g g')

    double C_at(double A) const
    {
        for (const auto& [a, c] : fitted_A_C)
            if (a == A)
                return c;
        throw Error(ErrorCode::invalid_argument, "exponent " + std::to_string(A) + " not in report");
    }
};

inline EstimateReport report(const HermitianField& g, const SolveResult& result, const RealField& F,
                             const std::vector<double>& alphas = kDefaultAlphas,
                             const std::vector<double>& exponents = kDefaultExponents)
{
    require_metric(g);
    const int n = g.n();
    const RealField& phi = result.phi;
    const HermitianField gp = g + ddbar(phi);
    require_positive(gp);
    const auto [tr, tr_back] = trace_pair(g, gp);

    EstimateReport out;
    const PotentialStatistics stats = potential_statistics(g, phi, alphas);
    out.sup_tr = max_value(tr);
    out.osc_phi = stats.osc_phi;
    out.R_alpha = stats.R_alpha;
    out.C1 = stats.C1;
    out.levelset_measure = stats.levelset_measure;
    out.L1_phi = stats.L1_phi;
    out.b = result.b;
    for (double A : exponents) {
        double c = 0.0;
        for (std::size_t p = 0; p < phi.size(); ++p)
            c = std::max(c, tr[p] * std::exp(-A * (phi[p] - stats.inf_phi)));
        out.fitted_A_C.emplace_back(A, c);
    }
    out.Q_max = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < phi.size(); ++p)
        out.Q_max = std::max(out.Q_max, std::log(tr[p]) - out.Q_exponent * phi[p]);

    const RealField lap = canonical_laplacian(g, phi);
    const double fact = detail::factorial(n - 1);
    out.trace_inequality_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < phi.size(); ++p) {
        out.trace_identity_error = std::max(out.trace_identity_error, std::abs(tr[p] - n - lap[p]));
        const double e = std::exp(F[p] + result.b);
        const double rhs = std::pow(tr_back[p], n - 1) * e / fact;
        out.trace_inequality_excess = std::max(out.trace_inequality_excess, (tr[p] - rhs) / rhs);
        if (n == 2)
            out.trace_equality_error =
                std::max(out.trace_equality_error, std::abs(tr[p] - tr_back[p] * e) / (1.0 + tr[p]));
    }
    return out;
}

struct SweepEntry {
    double s = 0.0;
    std::optional<EstimateReport> report;
    std::string error; ///< empty on success
};

/// Solves and reports for F_s = s F; a failing entry records its error and the sweep continues.
inline std::vector<SweepEntry> sweep(const HermitianField& g, const RealField& F, const std::vector<double>& scales,
                                     const SolverConfig& config, const std::vector<double>& alphas = kDefaultAlphas,
                                     const std::vector<double>& exponents = kDefaultExponents)
{
    const RealField v = gauduchon_weight(g).v;
    std::vector<SweepEntry> out;
    for (double s : scales) {
        SweepEntry e;
        e.s = s;
        try {
            RealField Fs = F;
            Fs *= s;
            const SolveResult r = continuity_solve(g, Fs, config, &v);
            e.report = report(g, r, Fs, alphas, exponents);
        } catch (const Error& err) {
            e.error = err.what();
        }
        out.push_back(std::move(e));
    }
    return out;
}

namespace detail {

inline std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace detail

/// One row per scale: s,status,b,sup_tr,osc_phi,C1,levelset_measure,L1_phi,Q_max,C_A=<A>...,R_alpha=<alpha>...
inline std::string sweep_summary_csv(const std::vector<SweepEntry>& entries,
                                     const std::vector<double>& alphas = kDefaultAlphas,
                                     const std::vector<double>& exponents = kDefaultExponents)
{
    std::string out = "s,status,b,sup_tr,osc_phi,C1,levelset_measure,L1_phi,Q_max";
    for (double A : exponents)
        out += ",C_A=" + detail::fmt(A);
    for (double a : alphas)
        out += ",R_alpha=" + detail::fmt(a);
    out += ",error\n";
    for (const auto& e : entries) {
        out += detail::fmt(e.s);
        if (!e.report) {
            out += ",failed" + std::string(8 + exponents.size() + alphas.size(), ',') + detail::csv_quote(e.error) + "\n";
            continue;
        }
        const auto& r = *e.report;
        out += ",ok," + detail::fmt(r.b) + "," + detail::fmt(r.sup_tr) + "," + detail::fmt(r.osc_phi) + "," +
               detail::fmt(r.C1) + "," + detail::fmt(r.levelset_measure) + "," + detail::fmt(r.L1_phi) + "," +
               detail::fmt(r.Q_max);
        for (const auto& [A, c] : r.fitted_A_C)
            out += "," + detail::fmt(c);
        for (const auto& [a, R] : r.R_alpha)
            out += "," + detail::fmt(R);
        out += ",\n";
    }
    return out;
}

/// Long format, one row per (s, alpha, A): s,alpha,A,status,R_alpha,C_A,sup_tr,osc_phi,C1,levelset_measure,L1_phi,Q_max,b.
inline std::string sweep_long_csv(const std::vector<SweepEntry>& entries)
{
    std::string out = "s,alpha,A,status,R_alpha,C_A,sup_tr,osc_phi,C1,levelset_measure,L1_phi,Q_max,b\n";
    for (const auto& e : entries) {
        if (!e.report) {
            out += detail::fmt(e.s) + ",,,failed,,,,,,,,,\n";
            continue;
        }
        const auto& r = *e.report;
        for (const auto& [a, R] : r.R_alpha)
            for (const auto& [A, C] : r.fitted_A_C)
                out += detail::fmt(e.s) + "," + detail::fmt(a) + "," + detail::fmt(A) + ",ok," + detail::fmt(R) + "," +
                       detail::fmt(C) + "," + detail::fmt(r.sup_tr) + "," + detail::fmt(r.osc_phi) + "," +
                       detail::fmt(r.C1) + "," + detail::fmt(r.levelset_measure) + "," + detail::fmt(r.L1_phi) +
                       "," + detail::fmt(r.Q_max) + "," + detail::fmt(r.b) + "\n";
    }
    return out;
}

} // namespace cma
