#pragma once

#include <string>
#include <vector>

#include "cma/fields.hpp"
#include "cma/matrix.hpp"

namespace cma {

namespace detail {

inline void check_axis(const GridPtr& grid, int j)
{
    if (j < 0 || j >= grid->n())
        throw Error(ErrorCode::axis_out_of_range,
                    "axis " + std::to_string(j) + " outside [0, " + std::to_string(grid->n()) + ")");
}

template <class T>
ComplexField apply_symbol(const ScalarField<T>& f, std::span<const cplx> symbol)
{
    const auto& grid = f.grid();
    const auto spec = grid->spectrum_of(f.values());
    return ComplexField(grid, grid->apply_symbol(spec, symbol));
}

} // namespace detail

/// d f / dz^j = (d_x - i d_y) f / 2 along complex axis j (0-based).
template <class T>
ComplexField d_holo(const ScalarField<T>& f, int j)
{
    detail::check_axis(f.grid(), j);
    return detail::apply_symbol(f, f.grid()->holo_symbol(j));
}

/// d f / dzbar^j = (d_x + i d_y) f / 2.
template <class T>
ComplexField d_antiholo(const ScalarField<T>& f, int j)
{
    detail::check_axis(f.grid(), j);
    return detail::apply_symbol(f, f.grid()->antiholo_symbol(j));
}

/// d_i d_jbar f for a possibly complex field.
template <class T>
ComplexField ddbar_component(const ScalarField<T>& f, int i, int j)
{
    detail::check_axis(f.grid(), i);
    detail::check_axis(f.grid(), j);
    return detail::apply_symbol(f, f.grid()->ddbar_symbol(i, j));
}

/// Complex Hessian (d_i d_jbar f) of a real function, symmetrized to be exactly Hermitian.
inline HermitianField ddbar(const RealField& f)
{
    const auto& grid = f.grid();
    const int n = grid->n();
    const auto spec = grid->spectrum_of(f.values());
    HermitianField out(grid);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const auto comp = grid->apply_symbol(spec, grid->ddbar_symbol(i, j));
            for (std::size_t p = 0; p < grid->size(); ++p) {
                if (i == j) {
                    out.entry(p, i, i) = comp[p].real();
                } else {
                    out.entry(p, i, j) = comp[p];
                    out.entry(p, j, i) = std::conj(comp[p]);
                }
            }
        }
    }
    return out;
}

/// Real part of sum_{i,j} d_i d_jbar P_{ij}, evaluated with one inverse transform.
inline RealField contracted_ddbar(const HermitianField& coeffs)
{
    const auto& grid = coeffs.grid();
    const int n = grid->n();
    const std::size_t size = grid->size();
    std::vector<cplx> acc(size, 0.0), comp(size), spec(size);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (std::size_t p = 0; p < size; ++p)
                comp[p] = coeffs.entry(p, i, j);
            grid->forward(comp.data(), spec.data());
            const auto symbol = grid->ddbar_symbol(i, j);
            for (std::size_t p = 0; p < size; ++p)
                acc[p] += spec[p] * symbol[p];
        }
    }
    grid->inverse(acc.data(), comp.data());
    RealField out(grid);
    for (std::size_t p = 0; p < size; ++p)
        out[p] = comp[p].real();
    return out;
}

/// Pseudo-inverse of the flat complex Laplacian sum_i d_i d_ibar; drops the mean.
inline RealField flat_poisson_solve(const RealField& rhs)
{
    const auto& grid = rhs.grid();
    auto spec = grid->spectrum_of(rhs.values());
    const auto pinv = grid->flat_laplacian_pinv_symbol();
    for (std::size_t p = 0; p < spec.size(); ++p)
        spec[p] *= pinv[p];
    std::vector<cplx> out(spec.size());
    grid->inverse(spec.data(), out.data());
    RealField result(grid);
    for (std::size_t p = 0; p < out.size(); ++p)
        result[p] = out[p].real();
    return result;
}

/// Throws not_metric unless every point matrix is positive definite.
inline void require_metric(const HermitianField& g, const std::string& what = "metric")
{
    for (std::size_t p = 0; p < g.points(); ++p) {
        if (!matrix::is_positive(g.at(p)))
            throw Error(ErrorCode::not_metric, what + " is not positive definite at grid point " + std::to_string(p));
    }
}

/// det g at every point (real part of the determinant of a Hermitian matrix).
inline RealField volume_density(const HermitianField& g)
{
    RealField out(g.grid());
    parallel_for(g.points(), [&](std::size_t p) { out[p] = matrix::hdet(g.at(p)); });
    return out;
}

inline RealField log_det(const HermitianField& g)
{
    RealField out(g.grid());
    parallel_for(g.points(), [&](std::size_t p) { out[p] = std::log(matrix::hdet(g.at(p))); });
    return out;
}

/// Pointwise inverse matrices.
inline HermitianField inverse(const HermitianField& g)
{
    HermitianField out(g.grid());
    for (std::size_t p = 0; p < g.points(); ++p)
        out.set(p, matrix::inverse(g.at(p)));
    return out;
}

/// Pointwise tr(a^{-1} b), given the already inverted a.
inline RealField trace_with(const HermitianField& a_inv, const HermitianField& b)
{
    require_same_grid(a_inv.grid(), b.grid());
    RealField out(b.grid());
    parallel_for(b.points(), [&](std::size_t p) {
        out[p] = matrix::trace_inv_product(a_inv.at(p), b.at(p)).real();
    });
    return out;
}

/**
 * Integral of f against omega^n, normalized so the flat unit torus has
 * volume one: integrate(f, g) = mean over grid points of f * det g. In form
 * language this is (1/n!) * integral of f omega^n, with the flat volume form
 * prod_k (i dz^k ^ dzbar^k) having total mass one.
 */
inline double integrate(const RealField& f, const HermitianField& g)
{
    require_same_grid(f.grid(), g.grid());
    require_metric(g);
    double sum = 0.0;
    for (std::size_t p = 0; p < f.size(); ++p)
        sum += f[p] * matrix::hdet(g.at(p));
    return sum / static_cast<double>(f.size());
}

/// Probability measure d mu = omega^n / integral omega^n as per-point weights summing to one.
class Measure {
public:
    explicit Measure(const HermitianField& g) : weights_(g.grid())
    {
        require_metric(g);
        const RealField density = volume_density(g);
        double total = 0.0;
        for (double d : density.values())
            total += d;
        for (std::size_t p = 0; p < density.size(); ++p)
            weights_[p] = density[p] / total;
    }

    const RealField& weights() const { return weights_; }

    double integrate(const RealField& f) const
    {
        double sum = 0.0;
        for (std::size_t p = 0; p < f.size(); ++p)
            sum += f[p] * weights_[p];
        return sum;
    }

    template <class Pred>
    double measure_of(const RealField& f, Pred&& pred) const
    {
        double sum = 0.0;
        for (std::size_t p = 0; p < f.size(); ++p)
            if (pred(f[p]))
                sum += weights_[p];
        return sum;
    }

private:
    RealField weights_;
};

} // namespace cma
