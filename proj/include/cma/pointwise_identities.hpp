#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cma/error.hpp"
#include "cma/fields.hpp"
#include "cma/matrix.hpp"

// Pointwise algebra at a single point: normal coordinates, trace inequalities,
// the Cauchy-Schwarz chain and the balanced-coordinate identities.
namespace cma::pointwise {

/// dg[k](i, j) = d_k g_{i jbar}; one matrix per holomorphic direction k.
using Tensor3 = std::vector<PointMatrix>;

inline Tensor3 zero_tensor(int n) { return Tensor3(static_cast<std::size_t>(n), PointMatrix::Zero(n, n)); }

/// One-jet of a metric at a point together with the complex Hessian of the potential there.
struct MetricJet {
    PointMatrix g0;
    Tensor3 dg;
    PointMatrix hess_phi;

    int n() const { return static_cast<int>(g0.rows()); }
};

/// z = L (w + (1/2) b(w, w)), i.e. z^a = L^a_i (w^i + (1/2) b^i_{jk} w^j w^k), with quadratic[i](j, k) = b^i_{jk}.
struct CoordinateChange {
    PointMatrix linear;
    Tensor3 quadratic;
};

inline double max_abs(const PointMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Expresses the jet in the coordinates w of `change`.
inline MetricJet transform(const MetricJet& jet, const CoordinateChange& change)
{
    const int n = jet.n();
    const PointMatrix& L = change.linear;
    MetricJet out;
    // g~_{k lbar} = L^a_k g_{a bbar} conj(L^b_l)
    out.g0 = L.transpose() * jet.g0 * L.conjugate();
    out.hess_phi = L.transpose() * jet.hess_phi * L.conjugate();
    out.dg = zero_tensor(n);
    for (int m = 0; m < n; ++m) {
        PointMatrix dm = PointMatrix::Zero(n, n);
        for (int c = 0; c < n; ++c)
            dm += L(c, m) * jet.dg[static_cast<std::size_t>(c)];
        out.dg[static_cast<std::size_t>(m)] = L.transpose() * dm * L.conjugate();
    }
    // Quadratic terms: d_m g~_{k lbar} += b^i_{km} g~_{i lbar}(0).
    for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                cplx s = 0.0;
                for (int i = 0; i < n; ++i)
                    s += change.quadratic[static_cast<std::size_t>(i)](k, m) * out.g0(i, l);
                out.dg[static_cast<std::size_t>(m)](k, l) += s;
            }
    return out;
}

/// Sup-norm violations of the normal-coordinate conditions.
struct GaugeDefect {
    double metric = 0.0;   ///< |g(0) - I|
    double diagonal_derivative = 0.0; ///< |d_j g_{i ibar}(0)|
    double hessian_offdiagonal = 0.0;

    double max() const { return std::max({metric, diagonal_derivative, hessian_offdiagonal}); }
};

inline GaugeDefect gauge_defect(const MetricJet& jet)
{
    const int n = jet.n();
    GaugeDefect d;
    d.metric = max_abs(jet.g0 - PointMatrix::Identity(n, n));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            d.diagonal_derivative = std::max(d.diagonal_derivative, std::abs(jet.dg[static_cast<std::size_t>(j)](i, i)));
            for (int k = 0; k < n; ++k)
                if (k != i)
                    d.hessian_offdiagonal = std::max(d.hessian_offdiagonal, std::abs(jet.hess_phi(i, k)));
        }
    return d;
}

/**
 * Holomorphic coordinates in which g(0) = I, d_j g_{i ibar}(0) = 0 and the
 * Hessian of phi is diagonal. Linear part: M = C^{-*} U with g0 = C C^* and U
 * the eigenvectors of M0^* Phi M0 (ascending eigenvalues, first nonzero
 * component of each made real positive; skipped if already diagonal); then
 * L = conj(M). Quadratic part: b^i_{ji} = b^i_{ij} = -d_j g~_{i ibar}.
 */
inline CoordinateChange normal_coordinates(const MetricJet& jet)
{
    const int n = jet.n();
    if (!(matrix::min_eigenvalue(jet.g0) > 0.0))
        throw Error(ErrorCode::not_positive, "g0 has eigenvalue " + std::to_string(matrix::min_eigenvalue(jet.g0)));
    Eigen::MatrixXcd g0 = jet.g0;
    Eigen::LLT<Eigen::MatrixXcd> llt(g0);
    const Eigen::MatrixXcd C = llt.matrixL();
    const Eigen::MatrixXcd M0 = C.adjoint().triangularView<Eigen::Upper>().solve(Eigen::MatrixXcd::Identity(n, n));

    Eigen::MatrixXcd H = M0.adjoint() * Eigen::MatrixXcd(jet.hess_phi) * M0;
    H = 0.5 * (H + H.adjoint().eval());
    Eigen::MatrixXcd U = Eigen::MatrixXcd::Identity(n, n);
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    const double offdiag = (H - Eigen::MatrixXcd(H.diagonal().asDiagonal())).cwiseAbs().maxCoeff();
    if (offdiag > 1e-15 * scale) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
        U = es.eigenvectors();
        for (int c = 0; c < n; ++c) {
            for (int r = 0; r < n; ++r) {
                const cplx z = U(r, c);
                if (std::abs(z) > 1e-12) {
                    U.col(c) *= std::conj(z) / std::abs(z);
                    break;
                }
            }
        }
    }
    const Eigen::MatrixXcd M = M0 * U;

    CoordinateChange change;
    change.linear = M.conjugate();
    change.quadratic = zero_tensor(n);
    const MetricJet linear_only = transform(jet, change);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const cplx v = -linear_only.dg[static_cast<std::size_t>(j)](i, i);
            change.quadratic[static_cast<std::size_t>(i)](j, i) = v;
            change.quadratic[static_cast<std::size_t>(i)](i, j) = v;
        }
    return change;
}

/// Elementary trace inequality tr_g g' <= (tr_g' g)^{n-1} det g'/det g / (n-1)!.
struct TraceCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double relative_slack = 0.0; ///< (rhs - lhs) / rhs
};

inline TraceCheck check_trace_inequality(const PointMatrix& g, const PointMatrix& gp)
{
    const int n = static_cast<int>(g.rows());
    TraceCheck out;
    out.lhs = matrix::trace_inv_product(matrix::inverse(g), gp).real();
    const double back = matrix::trace_inv_product(matrix::inverse(gp), g).real();
    double fact = 1.0;
    for (int k = 2; k < n; ++k)
        fact *= k;
    out.rhs = std::pow(back, n - 1) * matrix::hdet(gp) / matrix::hdet(g) / fact;
    out.relative_slack = (out.rhs - out.lhs) / out.rhs;
    return out;
}

/// Two-step Cauchy-Schwarz chain for |d tr|^2_{g'} / tr in the gauge g = I, g' = diag(lambda).
struct CsChain {
    double lhs = 0.0;    ///< (1/tr) sum_i lambda_i^{-1} |sum_j d_i g'_{j jbar}|^2
    double middle = 0.0; ///< (1/tr) (sum_j (sum_i lambda_i^{-1} |d_i g'_{j jbar}|^2)^{1/2})^2
    double rhs = 0.0;    ///< sum_{i,j} lambda_i^{-1} lambda_j^{-1} |d_i g'_{j jbar}|^2
    double first_slack = 0.0;
    double second_slack = 0.0;
    double slack = 0.0;  ///< rhs - lhs
};

inline CsChain check_cs_chain(const std::vector<double>& gprime_diag, const Tensor3& dgprime)
{
    const std::size_t n = gprime_diag.size();
    if (dgprime.size() != n)
        throw Error(ErrorCode::shape_mismatch, "derivative tensor does not match the diagonal");
    double tr = 0.0;
    for (double l : gprime_diag) {
        if (!(l > 0.0))
            throw Error(ErrorCode::not_positive, "g' diagonal entry " + std::to_string(l));
        tr += l;
    }
    // d[i][j] = d_i g'_{j jbar}
    auto d = [&](std::size_t i, std::size_t j) { return dgprime[i](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)); };
    CsChain out;
    double root_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s += d(i, j);
            out.rhs += std::norm(d(i, j)) / (gprime_diag[i] * gprime_diag[j]);
        }
        out.lhs += std::norm(s) / gprime_diag[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
        double inner = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            inner += std::norm(d(i, j)) / gprime_diag[i];
        root_sum += std::sqrt(inner);
    }
    out.lhs /= tr;
    out.middle = root_sum * root_sum / tr;
    out.first_slack = out.middle - out.lhs;
    out.second_slack = out.rhs - out.middle;
    out.slack = out.rhs - out.lhs;
    return out;
}

/// Torsion-trace identities in normal coordinates.
struct BalancedCheck {
    std::vector<cplx> torsion_trace; ///< sum_j T^j_{ji}
    std::vector<cplx> divergence;    ///< sum_j d_j g_{i jbar}
    double divergence_norm = 0.0;
    double gradient_identity_error = 0.0; ///< |d_i tr_g g' - sum_j d_j g'_{i jbar}|
    bool holds = false;
};

/**
 * `phi3[k](i, j)` = d_k phi_{i jbar}, symmetric in (k, i). In the gauge of
 * normal_coordinates with vanishing torsion trace, sum_j d_j g_{i jbar} = 0
 * and d_i tr_g g' = sum_j d_j g'_{i jbar}.
 */
inline BalancedCheck check_balanced_coords(const MetricJet& jet, const Tensor3& phi3, double tol = 1e-12)
{
    const int n = jet.n();
    const GaugeDefect gd = gauge_defect(jet);
    if (gd.max() > 1e-10)
        throw Error(ErrorCode::gauge_violated,
                    "jet is not in normal coordinates (defect " + std::to_string(gd.max()) + ")");
    if (static_cast<int>(phi3.size()) != n)
        throw Error(ErrorCode::shape_mismatch, "third-derivative tensor does not match the jet");
    BalancedCheck out;
    const PointMatrix gp = jet.g0 + jet.hess_phi;
    for (int i = 0; i < n; ++i) {
        const auto I = static_cast<std::size_t>(i);
        cplx div = 0.0, tors = 0.0, rhs = 0.0;
        for (int j = 0; j < n; ++j) {
            const auto J = static_cast<std::size_t>(j);
            div += jet.dg[J](i, j);
            tors += jet.dg[J](i, j) - jet.dg[I](j, j);
            rhs += jet.dg[J](i, j) + phi3[J](i, j);
        }
        // d_i tr(g^{-1} g') = tr(d_i g') - tr(d_i g g') at g = I.
        const PointMatrix dgp = jet.dg[I] + phi3[I];
        const cplx grad = dgp.trace() - (jet.dg[I] * gp).trace();
        out.divergence.push_back(div);
        out.torsion_trace.push_back(tors);
        out.divergence_norm = std::max(out.divergence_norm, std::abs(div));
        out.gradient_identity_error = std::max(out.gradient_identity_error, std::abs(grad - rhs));
    }
    out.holds = out.divergence_norm <= tol && out.gradient_identity_error <= tol;
    return out;
}

// Random instances for fuzzing.

inline cplx random_complex(std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> N(0.0, scale);
    return {N(rng), N(rng)};
}

inline PointMatrix random_hermitian(std::mt19937_64& rng, int n, double scale = 1.0)
{
    PointMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = std::normal_distribution<double>(0.0, scale)(rng);
        for (int j = i + 1; j < n; ++j) {
            m(i, j) = random_complex(rng, scale);
            m(j, i) = std::conj(m(i, j));
        }
    }
    return m;
}

/// A A^* + 0.1 I with Gaussian A: positive, with moderate condition number.
inline PointMatrix random_positive(std::mt19937_64& rng, int n)
{
    PointMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = random_complex(rng);
    PointMatrix p = a * a.adjoint() + 0.1 * PointMatrix::Identity(n, n);
    return 0.5 * (p + p.adjoint().eval());
}

inline Tensor3 random_tensor(std::mt19937_64& rng, int n, double scale = 1.0)
{
    Tensor3 t = zero_tensor(n);
    for (auto& m : t)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m(i, j) = random_complex(rng, scale);
    return t;
}

inline MetricJet random_jet(std::mt19937_64& rng, int n)
{
    return {random_positive(rng, n), random_tensor(rng, n), random_hermitian(rng, n)};
}

/// Random d_k phi_{i jbar}, symmetric in (k, i).
inline Tensor3 random_third_derivatives(std::mt19937_64& rng, int n)
{
    Tensor3 t = random_tensor(rng, n);
    for (int k = 0; k < n; ++k)
        for (int i = k + 1; i < n; ++i)
            for (int j = 0; j < n; ++j)
                t[static_cast<std::size_t>(i)](k, j) = t[static_cast<std::size_t>(k)](i, j);
    return t;
}

/**
 * Random jet in normal coordinates with diagonal Hessian and, optionally,
 * vanishing torsion trace (each row sum_j d_j g_{i jbar} projected to zero
 * over j != i; the j = i entry is already zero in this gauge).
 */
inline MetricJet random_normal_jet(std::mt19937_64& rng, int n, bool balanced)
{
    MetricJet jet;
    jet.g0 = PointMatrix::Identity(n, n);
    jet.dg = random_tensor(rng, n);
    jet.hess_phi = PointMatrix::Zero(n, n);
    std::uniform_real_distribution<double> eig(-0.9, 3.0);
    for (int i = 0; i < n; ++i) {
        jet.hess_phi(i, i) = eig(rng);
        for (int j = 0; j < n; ++j)
            jet.dg[static_cast<std::size_t>(j)](i, i) = 0.0;
    }
    if (balanced) {
        for (int i = 0; i < n; ++i) {
            cplx mean = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i)
                    mean += jet.dg[static_cast<std::size_t>(j)](i, j);
            mean /= static_cast<double>(n - 1);
            for (int j = 0; j < n; ++j)
                if (j != i)
                    jet.dg[static_cast<std::size_t>(j)](i, j) -= mean;
        }
    }
    return jet;
}

struct FuzzFailure {
    std::string check;
    int n = 0;
    double slack = 0.0;
    PointMatrix g, gp;           ///< trace checks
    std::vector<double> lambda;  ///< Cauchy-Schwarz check
    Tensor3 dgprime;
};

struct FuzzReport {
    int instances = 0;
    int trace_inequality_failures = 0;
    int trace_equality_failures = 0;
    int cs_chain_failures = 0;
    double worst_trace_slack = 0.0;
    double worst_equality_error = 0.0;
    double worst_cs_slack = 0.0;
    std::vector<FuzzFailure> failures; ///< first few offending instances

    int total_failures() const { return trace_inequality_failures + trace_equality_failures + cs_chain_failures; }
};

/// Random-matrix fuzz of the trace inequality, its n = 2 equality, and the Cauchy-Schwarz chain.
inline FuzzReport fuzz_identities(std::uint64_t seed, int instances, double tol = 1e-12, std::size_t keep = 5)
{
    std::mt19937_64 rng(seed);
    FuzzReport r;
    r.instances = instances;
    r.worst_trace_slack = std::numeric_limits<double>::infinity();
    r.worst_cs_slack = std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> lam(0.05, 5.0);
    for (int k = 0; k < instances; ++k) {
        const int n = 2 + (k % 2);
        const PointMatrix g = random_positive(rng, n), gp = random_positive(rng, n);
        const TraceCheck t = check_trace_inequality(g, gp);
        r.worst_trace_slack = std::min(r.worst_trace_slack, t.relative_slack);
        if (t.relative_slack < -tol) {
            ++r.trace_inequality_failures;
            if (r.failures.size() < keep)
                r.failures.push_back({"trace_inequality", n, t.relative_slack, g, gp, {}, {}});
        }
        if (n == 2) {
            const double err = std::abs(t.lhs - t.rhs) / (1.0 + t.lhs);
            r.worst_equality_error = std::max(r.worst_equality_error, err);
            if (err > tol) {
                ++r.trace_equality_failures;
                if (r.failures.size() < keep)
                    r.failures.push_back({"trace_equality", n, -err, g, gp, {}, {}});
            }
        }
        std::vector<double> lambda(static_cast<std::size_t>(n));
        for (double& l : lambda)
            l = lam(rng);
        const Tensor3 d = random_tensor(rng, n);
        const CsChain c = check_cs_chain(lambda, d);
        const double rel = c.slack / std::max(1.0, c.rhs);
        r.worst_cs_slack = std::min(r.worst_cs_slack, rel);
        if (rel < -tol || c.first_slack < -tol * std::max(1.0, c.middle) ||
            c.second_slack < -tol * std::max(1.0, c.rhs)) {
            ++r.cs_chain_failures;
            if (r.failures.size() < keep)
                r.failures.push_back({"cs_chain", n, rel, {}, {}, lambda, d});
        }
    }
    return r;
}

} // namespace cma::pointwise
