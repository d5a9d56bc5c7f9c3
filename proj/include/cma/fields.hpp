#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cma/grid.hpp"
#include "cma/parallel.hpp"

namespace cma {

/// A function sampled at every grid point. T is double or std::complex<double>;
/// real fields are real by type.
template <class T>
class ScalarField {
public:
    using value_type = T;

    ScalarField() = default;

    explicit ScalarField(GridPtr grid, T fill = T{}) : grid_(std::move(grid)), values_(grid_->size(), fill) {}

    ScalarField(GridPtr grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values))
    {
        if (values_.size() != grid_->size())
            throw Error(ErrorCode::shape_mismatch, "field has " + std::to_string(values_.size()) +
                                                       " samples, grid has " + std::to_string(grid_->size()));
    }

    template <class Fn>
    static ScalarField from_function(GridPtr grid, Fn&& fn)
    {
        ScalarField out(grid);
        parallel_for(grid->size(), [&](std::size_t p) { out.values_[p] = static_cast<T>(fn(grid->coords(p))); });
        return out;
    }

    const GridPtr& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    T operator[](std::size_t p) const { return values_[p]; }
    T& operator[](std::size_t p) { return values_[p]; }

    std::span<const T> values() const { return values_; }
    std::span<T> values() { return values_; }

    template <class Fn>
    auto map(Fn&& fn) const
    {
        using R = std::decay_t<decltype(fn(std::declval<T>()))>;
        ScalarField<R> out(grid_);
        auto dst = out.values();
        parallel_for(size(), [&](std::size_t p) { dst[p] = fn(values_[p]); });
        return out;
    }

    ScalarField& operator+=(const ScalarField& other)
    {
        require_same_grid(grid_, other.grid_);
        for (std::size_t p = 0; p < size(); ++p)
            values_[p] += other.values_[p];
        return *this;
    }
    ScalarField& operator-=(const ScalarField& other)
    {
        require_same_grid(grid_, other.grid_);
        for (std::size_t p = 0; p < size(); ++p)
            values_[p] -= other.values_[p];
        return *this;
    }
    ScalarField& operator*=(const ScalarField& other)
    {
        require_same_grid(grid_, other.grid_);
        for (std::size_t p = 0; p < size(); ++p)
            values_[p] *= other.values_[p];
        return *this;
    }
    ScalarField& operator*=(T s)
    {
        for (auto& v : values_)
            v *= s;
        return *this;
    }
    ScalarField& operator+=(T s)
    {
        for (auto& v : values_)
            v += s;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(ScalarField a, const ScalarField& b) { return a *= b; }
    friend ScalarField operator*(T s, ScalarField a) { return a *= s; }
    friend ScalarField operator*(ScalarField a, T s) { return a *= s; }
    friend ScalarField operator+(ScalarField a, T s) { return a += s; }
    friend ScalarField operator-(ScalarField a, T s) { return a += -s; }
    friend ScalarField operator-(ScalarField a) { return a *= T(-1); }

private:
    GridPtr grid_;
    std::vector<T> values_;
};

using RealField = ScalarField<double>;
using ComplexField = ScalarField<cplx>;

inline double max_value(const RealField& f) { return *std::max_element(f.values().begin(), f.values().end()); }
inline double min_value(const RealField& f) { return *std::min_element(f.values().begin(), f.values().end()); }

inline std::size_t argmax(const RealField& f)
{
    auto v = f.values();
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}
inline std::size_t argmin(const RealField& f)
{
    auto v = f.values();
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

template <class T>
double sup_norm(const ScalarField<T>& f)
{
    double m = 0.0;
    for (const T& v : f.values())
        m = std::max(m, std::abs(v));
    return m;
}

template <class T>
T mean(const ScalarField<T>& f)
{
    T sum{};
    for (const T& v : f.values())
        sum += v;
    return sum / static_cast<double>(f.size());
}

inline RealField real_part(const ComplexField& f) { return f.map([](cplx v) { return v.real(); }); }
inline RealField imag_part(const ComplexField& f) { return f.map([](cplx v) { return v.imag(); }); }
inline ComplexField to_complex(const RealField& f) { return f.map([](double v) { return cplx(v, 0.0); }); }

/// Per-point Hermitian matrix, at most 3x3, stored inline.
using PointMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, 3, 3>;

/**
 * Field of n x n complex matrices, one per grid point; used for metrics
 * g_{i jbar} and for coefficient matrices of real (1,1)-forms. Entry (i, j)
 * is the coefficient of dz^i ^ dzbar^j. Storage is point-major, entries
 * row-major within a point.
 */
class HermitianField {
public:
    HermitianField() = default;

    explicit HermitianField(GridPtr grid) : grid_(std::move(grid)), n_(grid_->n()),
        values_(grid_->size() * static_cast<std::size_t>(n_ * n_))
    {
    }

    HermitianField(GridPtr grid, std::vector<cplx> values) : grid_(std::move(grid)), n_(grid_->n()),
        values_(std::move(values))
    {
        if (values_.size() != grid_->size() * static_cast<std::size_t>(n_ * n_))
            throw Error(ErrorCode::shape_mismatch, "hermitian field has " + std::to_string(values_.size()) +
                                                       " entries, expected " +
                                                       std::to_string(grid_->size() * static_cast<std::size_t>(n_ * n_)));
    }

    static HermitianField identity(GridPtr grid, double scale = 1.0)
    {
        HermitianField out(std::move(grid));
        for (std::size_t p = 0; p < out.points(); ++p)
            for (int i = 0; i < out.n_; ++i)
                out.entry(p, i, i) = scale;
        return out;
    }

    /// Conformal rescaling e^h * (identity).
    static HermitianField conformal_flat(const RealField& h)
    {
        HermitianField out(h.grid());
        for (std::size_t p = 0; p < out.points(); ++p)
            for (int i = 0; i < out.n_; ++i)
                out.entry(p, i, i) = std::exp(h[p]);
        return out;
    }

    const GridPtr& grid() const { return grid_; }
    int n() const { return n_; }
    std::size_t points() const { return grid_->size(); }

    cplx entry(std::size_t p, int i, int j) const { return values_[offset(p, i, j)]; }
    cplx& entry(std::size_t p, int i, int j) { return values_[offset(p, i, j)]; }

    PointMatrix at(std::size_t p) const
    {
        PointMatrix m(n_, n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                m(i, j) = entry(p, i, j);
        return m;
    }

    void set(std::size_t p, const PointMatrix& m)
    {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                entry(p, i, j) = m(i, j);
    }

    ComplexField component(int i, int j) const
    {
        ComplexField out(grid_);
        for (std::size_t p = 0; p < points(); ++p)
            out[p] = entry(p, i, j);
        return out;
    }

    void set_component(int i, int j, const ComplexField& f)
    {
        require_same_grid(grid_, f.grid());
        for (std::size_t p = 0; p < points(); ++p)
            entry(p, i, j) = f[p];
    }

    std::span<const cplx> values() const { return values_; }
    std::span<cplx> values() { return values_; }

    HermitianField& operator+=(const HermitianField& o)
    {
        require_same_grid(grid_, o.grid_);
        for (std::size_t k = 0; k < values_.size(); ++k)
            values_[k] += o.values_[k];
        return *this;
    }
    HermitianField& operator-=(const HermitianField& o)
    {
        require_same_grid(grid_, o.grid_);
        for (std::size_t k = 0; k < values_.size(); ++k)
            values_[k] -= o.values_[k];
        return *this;
    }
    HermitianField& operator*=(double s)
    {
        for (auto& v : values_)
            v *= s;
        return *this;
    }
    friend HermitianField operator+(HermitianField a, const HermitianField& b) { return a += b; }
    friend HermitianField operator-(HermitianField a, const HermitianField& b) { return a -= b; }
    friend HermitianField operator*(double s, HermitianField a) { return a *= s; }

    /// Pointwise multiplication by a real scalar field.
    HermitianField scaled(const RealField& f) const
    {
        require_same_grid(grid_, f.grid());
        HermitianField out = *this;
        const std::size_t nn = static_cast<std::size_t>(n_ * n_);
        for (std::size_t p = 0; p < points(); ++p)
            for (std::size_t k = 0; k < nn; ++k)
                out.values_[p * nn + k] *= f[p];
        return out;
    }

    /// Largest |H - H^*| entry relative to the largest entry magnitude.
    double hermitian_defect() const
    {
        double worst = 0.0, scale = 0.0;
        for (std::size_t p = 0; p < points(); ++p)
            for (int i = 0; i < n_; ++i)
                for (int j = 0; j < n_; ++j) {
                    worst = std::max(worst, std::abs(entry(p, i, j) - std::conj(entry(p, j, i))));
                    scale = std::max(scale, std::abs(entry(p, i, j)));
                }
        return scale > 0.0 ? worst / scale : worst;
    }

    /// Largest coefficient magnitude over all points and entries.
    double sup_norm() const
    {
        double m = 0.0;
        for (const cplx& v : values_)
            m = std::max(m, std::abs(v));
        return m;
    }

private:
    std::size_t offset(std::size_t p, int i, int j) const
    {
        return p * static_cast<std::size_t>(n_ * n_) + static_cast<std::size_t>(i * n_ + j);
    }

    GridPtr grid_;
    int n_ = 0;
    std::vector<cplx> values_;
};

} // namespace cma
