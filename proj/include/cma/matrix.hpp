#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "cma/fields.hpp"

// Closed-form 2x2 / 3x3 algebra for per-point metric matrices.
namespace cma::matrix {

inline cplx det(const PointMatrix& m)
{
    if (m.rows() == 2)
        return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

/// Real determinant of a Hermitian matrix.
inline double hdet(const PointMatrix& m) { return det(m).real(); }

inline PointMatrix adjugate(const PointMatrix& m)
{
    PointMatrix a(m.rows(), m.cols());
    if (m.rows() == 2) {
        a(0, 0) = m(1, 1);
        a(0, 1) = -m(0, 1);
        a(1, 0) = -m(1, 0);
        a(1, 1) = m(0, 0);
        return a;
    }
    a(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    a(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
    a(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    a(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
    a(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
    a(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
    a(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
    a(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
    a(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return a;
}

inline PointMatrix inverse(const PointMatrix& m)
{
    const cplx d = det(m);
    const double scale = m.cwiseAbs().maxCoeff();
    if (!(std::abs(d) > 1e-300) || std::abs(d) <= 1e-14 * std::pow(scale, static_cast<double>(m.rows())))
        throw Error(ErrorCode::singular_matrix, "matrix inversion with determinant " + std::to_string(std::abs(d)));
    return adjugate(m) / d;
}

/// Smallest eigenvalue of a Hermitian matrix.
inline double min_eigenvalue(const PointMatrix& m)
{
    if (m.rows() == 2) {
        const double a = m(0, 0).real(), d = m(1, 1).real();
        const double half_gap = 0.5 * (a - d);
        return 0.5 * (a + d) - std::sqrt(half_gap * half_gap + std::norm(m(0, 1)));
    }
    Eigen::Matrix3cd full = m;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> solver(full, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

/// Sylvester criterion on leading principal minors.
inline bool is_positive(const PointMatrix& m)
{
    if (!(m(0, 0).real() > 0.0))
        return false;
    const double m2 = (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)).real();
    if (!(m2 > 0.0))
        return false;
    return m.rows() == 2 || hdet(m) > 0.0;
}

/// tr(A^{-1} B) = a^{i jbar} b_{i jbar}.
inline cplx trace_inv_product(const PointMatrix& a_inv, const PointMatrix& b)
{
    cplx s = 0.0;
    for (int i = 0; i < b.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j)
            s += a_inv(j, i) * b(i, j);
    return s;
}

} // namespace cma::matrix
