#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cma/calculus.hpp"

namespace cma {

struct GmresResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/**
 * Restarted GMRES with right preconditioning and modified Gram-Schmidt
 * (two passes). The reported residual is the true residual ||b - A x|| / ||b||,
 * recomputed at every restart. Stops early when a restart cycle fails to
 * reduce the true residual, which is how round-off stagnation shows up.
 */
template <class Apply, class Precond>
GmresResult gmres(Apply&& apply, Precond&& precond, const Eigen::VectorXd& b, Eigen::VectorXd x0, double tol,
                  int max_iters, int restart = 60)
{
    GmresResult out;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        out.x = Eigen::VectorXd::Zero(b.size());
        out.converged = true;
        return out;
    }
    out.x = std::move(x0);
    const Eigen::Index dim = b.size();
    const int m = restart;
    Eigen::MatrixXd V(dim, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs(m), sn(m), g(m + 1);

    double previous = std::numeric_limits<double>::infinity();
    while (true) {
        Eigen::VectorXd r = b - apply(out.x);
        const double beta = r.norm();
        out.relative_residual = beta / bnorm;
        if (out.relative_residual <= tol) {
            out.converged = true;
            return out;
        }
        if (out.iterations >= max_iters || out.relative_residual >= 0.999 * previous)
            return out;
        previous = out.relative_residual;

        V.col(0) = r / beta;
        g.setZero();
        g(0) = beta;
        H.setZero();
        int k = 0;
        for (int j = 0; j < m && out.iterations < max_iters; ++j) {
            Eigen::VectorXd w = apply(precond(V.col(j)));
            ++out.iterations;
            for (int pass = 0; pass < 2; ++pass) {
                for (int i = 0; i <= j; ++i) {
                    const double h = w.dot(V.col(i));
                    H(i, j) += h;
                    w -= h * V.col(i);
                }
            }
            H(j + 1, j) = w.norm();
            const bool breakdown = H(j + 1, j) <= 1e-300;
            if (!breakdown)
                V.col(j + 1) = w / H(j + 1, j);
            for (int i = 0; i < j; ++i) {
                const double t = cs(i) * H(i, j) + sn(i) * H(i + 1, j);
                H(i + 1, j) = -sn(i) * H(i, j) + cs(i) * H(i + 1, j);
                H(i, j) = t;
            }
            const double denom = std::hypot(H(j, j), H(j + 1, j));
            cs(j) = H(j, j) / denom;
            sn(j) = H(j + 1, j) / denom;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g(j + 1) = -sn(j) * g(j);
            g(j) = cs(j) * g(j);
            k = j + 1;
            if (std::abs(g(j + 1)) / bnorm <= 0.5 * tol || breakdown)
                break;
        }
        if (k == 0)
            return out;
        Eigen::VectorXd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
        out.x += precond(V.leftCols(k) * y);
    }
}

/// Result of a bordered solve: the field part and the scalar border unknown.
struct ConstrainedSolution {
    RealField eta;
    double beta = 0.0;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/**
 * Solves the bordered system
 *
 *     A eta + sigma * beta = r        (one equation per grid point)
 *     sum_p c_p eta_p        = t
 *
 * for a second-order elliptic A with one-dimensional kernel/cokernel. The
 * scalar beta absorbs the cokernel component of r, the weights c fix the
 * kernel component of eta. Preconditioned by the flat Laplacian scaled by
 * `flat_scale` (so A ~ flat_scale * sum_i d_i d_ibar).
 */
class ConstrainedSolver {
public:
    using Operator = std::function<RealField(const RealField&)>;

    ConstrainedSolver(GridPtr grid, Operator op, double sigma, RealField weights, double flat_scale)
        : grid_(std::move(grid)), op_(std::move(op)), sigma_(sigma), weights_(std::move(weights)),
          flat_scale_(flat_scale)
    {
        weight_sum_ = 0.0;
        for (double w : weights_.values())
            weight_sum_ += w;
        if (weight_sum_ == 0.0 || sigma_ == 0.0 || flat_scale_ == 0.0)
            throw Error(ErrorCode::invalid_argument, "degenerate bordered system");
    }

    ConstrainedSolution solve(const RealField& rhs, double rhs_constraint, double tol, int max_iters,
                              const RealField* initial = nullptr, double initial_beta = 0.0) const
    {
        const std::size_t P = grid_->size();
        Eigen::VectorXd b(static_cast<Eigen::Index>(P + 1));
        for (std::size_t p = 0; p < P; ++p)
            b(static_cast<Eigen::Index>(p)) = rhs[p];
        b(static_cast<Eigen::Index>(P)) = rhs_constraint;

        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P + 1));
        if (initial != nullptr) {
            for (std::size_t p = 0; p < P; ++p)
                x0(static_cast<Eigen::Index>(p)) = (*initial)[p];
            x0(static_cast<Eigen::Index>(P)) = initial_beta;
        }

        auto result = gmres([this](const Eigen::VectorXd& x) { return apply(x); },
                            [this](const Eigen::VectorXd& x) { return precondition(x); }, b, std::move(x0), tol,
                            max_iters);

        ConstrainedSolution out;
        out.eta = RealField(grid_);
        for (std::size_t p = 0; p < P; ++p)
            out.eta[p] = result.x(static_cast<Eigen::Index>(p));
        out.beta = result.x(static_cast<Eigen::Index>(P));
        out.iterations = result.iterations;
        out.relative_residual = result.relative_residual;
        out.converged = result.converged;
        return out;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const
    {
        const std::size_t P = grid_->size();
        RealField eta(grid_);
        for (std::size_t p = 0; p < P; ++p)
            eta[p] = x(static_cast<Eigen::Index>(p));
        const double beta = x(static_cast<Eigen::Index>(P));
        const RealField a = op_(eta);
        Eigen::VectorXd y(x.size());
        double constraint = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            y(static_cast<Eigen::Index>(p)) = a[p] + sigma_ * beta;
            constraint += weights_[p] * eta[p];
        }
        y(static_cast<Eigen::Index>(P)) = constraint;
        return y;
    }

    Eigen::VectorXd precondition(const Eigen::VectorXd& x) const
    {
        const std::size_t P = grid_->size();
        RealField r(grid_);
        double r_mean = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            r[p] = x(static_cast<Eigen::Index>(p));
            r_mean += r[p];
        }
        r_mean /= static_cast<double>(P);
        RealField eta = flat_poisson_solve(r);
        double c_eta = 0.0;
        for (std::size_t p = 0; p < P; ++p) {
            eta[p] /= flat_scale_;
            c_eta += weights_[p] * eta[p];
        }
        const double shift = (x(static_cast<Eigen::Index>(P)) - c_eta) / weight_sum_;
        Eigen::VectorXd y(x.size());
        for (std::size_t p = 0; p < P; ++p)
            y(static_cast<Eigen::Index>(p)) = eta[p] + shift;
        y(static_cast<Eigen::Index>(P)) = r_mean / sigma_;
        return y;
    }

private:
    GridPtr grid_;
    Operator op_;
    double sigma_;
    RealField weights_;
    double flat_scale_;
    double weight_sum_ = 0.0;
};

} // namespace cma
