#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "cma/error.hpp"

namespace cma {

using cplx = std::complex<double>;

/**
 * How derivatives are evaluated on the periodic grid.
 *
 * Both schemes are applied as Fourier multipliers: Fourier collocation uses
 * the exact symbols, central differences use the symbols of the periodic
 * stencils of the given order (2, 4 or 6).
 */
struct DiffScheme {
    enum class Kind { fourier_collocation, central_difference };

    Kind kind = Kind::fourier_collocation;
    int order = 0;

    static DiffScheme fourier() { return {}; }
    static DiffScheme central_difference(int order) { return {Kind::central_difference, order}; }

    bool operator==(const DiffScheme&) const = default;
};

/**
 * Periodic collocation grid on the torus C^n / (Z + iZ)^n.
 *
 * The 2n real axes are ordered (x^1, y^1, x^2, y^2, ...) with z^j = x^j + i y^j,
 * each axis sampled at N points {0, 1/N, ..., (N-1)/N}. Grid points are stored
 * row-major, axis 0 slowest.
 */
struct GridSpec {
    int complex_dim = 2;
    int points_per_axis = 16;
    DiffScheme scheme = DiffScheme::fourier();

    int real_axes() const { return 2 * complex_dim; }

    std::size_t size() const
    {
        std::size_t total = 1;
        for (int a = 0; a < real_axes(); ++a)
            total *= static_cast<std::size_t>(points_per_axis);
        return total;
    }

    void validate() const
    {
        if (complex_dim != 2 && complex_dim != 3)
            throw Error(ErrorCode::invalid_argument,
                        "complex_dim must be 2 or 3, got " + std::to_string(complex_dim));
        if (points_per_axis < 8 || points_per_axis % 2 != 0)
            throw Error(ErrorCode::invalid_argument,
                        "points_per_axis must be even and >= 8, got " + std::to_string(points_per_axis));
        if (scheme.kind == DiffScheme::Kind::central_difference &&
            scheme.order != 2 && scheme.order != 4 && scheme.order != 6)
            throw Error(ErrorCode::invalid_argument,
                        "central difference order must be 2, 4 or 6, got " + std::to_string(scheme.order));
    }

    bool operator==(const GridSpec&) const = default;
};

/// Real coordinates of one grid point.
struct Coords {
    std::array<double, 3> xs{};
    std::array<double, 3> ys{};
    double x(int j) const { return xs[static_cast<std::size_t>(j)]; }
    double y(int j) const { return ys[static_cast<std::size_t>(j)]; }
};

namespace detail {

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* plan) const
    {
        if (plan != nullptr)
            fftw_destroy_plan(plan);
    }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

inline std::mutex& fftw_planner_mutex()
{
    static std::mutex mutex;
    return mutex;
}

} // namespace detail

/**
 * Owns the transform plans and the derivative symbols of a GridSpec.
 *
 * Shared between fields through std::shared_ptr<const Grid>. All member
 * functions are const and safe for concurrent use: transforms go through the
 * new-array FFTW interface on caller-owned buffers.
 */
class Grid {
public:
    static std::shared_ptr<const Grid> create(const GridSpec& spec)
    {
        spec.validate();
        return std::shared_ptr<const Grid>(new Grid(spec));
    }

    const GridSpec& spec() const { return spec_; }
    int n() const { return spec_.complex_dim; }
    int points_per_axis() const { return spec_.points_per_axis; }
    std::size_t size() const { return size_; }

    Coords coords(std::size_t p) const
    {
        Coords c;
        const int N = spec_.points_per_axis;
        for (int a = spec_.real_axes() - 1; a >= 0; --a) {
            const double value = static_cast<double>(p % static_cast<std::size_t>(N)) / N;
            p /= static_cast<std::size_t>(N);
            if (a % 2 == 0)
                c.xs[static_cast<std::size_t>(a / 2)] = value;
            else
                c.ys[static_cast<std::size_t>(a / 2)] = value;
        }
        return c;
    }

    void forward(const cplx* in, cplx* out) const
    {
        fftw_execute_dft(forward_.get(), reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
    }

    /// Normalized inverse transform.
    void inverse(const cplx* in, cplx* out) const
    {
        fftw_execute_dft(inverse_.get(), reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                         reinterpret_cast<fftw_complex*>(out));
        const double scale = 1.0 / static_cast<double>(size_);
        for (std::size_t p = 0; p < size_; ++p)
            out[p] *= scale;
    }

    std::vector<cplx> spectrum(std::span<const cplx> values) const
    {
        std::vector<cplx> out(size_);
        forward(values.data(), out.data());
        return out;
    }

    template <class T>
    std::vector<cplx> spectrum_of(std::span<const T> values) const
    {
        std::vector<cplx> in(values.begin(), values.end());
        return spectrum(in);
    }

    /// Inverse transform of spectrum .* symbol.
    std::vector<cplx> apply_symbol(std::span<const cplx> spec, std::span<const cplx> symbol) const
    {
        std::vector<cplx> work(size_);
        for (std::size_t p = 0; p < size_; ++p)
            work[p] = spec[p] * symbol[p];
        std::vector<cplx> out(size_);
        inverse(work.data(), out.data());
        return out;
    }

    /// Symbol of d/dz^j (holomorphic) or d/dzbar^j.
    std::span<const cplx> holo_symbol(int j) const { return holo_[static_cast<std::size_t>(j)]; }
    std::span<const cplx> antiholo_symbol(int j) const { return antiholo_[static_cast<std::size_t>(j)]; }

    /// Symbol of d^2/dz^i dzbar^j.
    std::span<const cplx> ddbar_symbol(int i, int j) const
    {
        return ddbar_[static_cast<std::size_t>(i * n() + j)];
    }

    /// Symbol of the flat complex Laplacian sum_i d_i d_ibar (a quarter of the real one).
    std::span<const double> flat_laplacian_symbol() const { return flat_lap_; }

    /// Symbol of the pseudo-inverse of the flat complex Laplacian (zero on the kernel).
    std::span<const double> flat_laplacian_pinv_symbol() const { return flat_lap_pinv_; }

private:
    explicit Grid(const GridSpec& spec) : spec_(spec), size_(spec.size())
    {
        const int N = spec.points_per_axis;
        const int axes = spec.real_axes();
        build_axis_symbols();

        {
            std::vector<cplx> a(size_), b(size_);
            std::vector<int> dims(static_cast<std::size_t>(axes), N);
            std::lock_guard lock(detail::fftw_planner_mutex());
            forward_.reset(fftw_plan_dft(axes, dims.data(), reinterpret_cast<fftw_complex*>(a.data()),
                                         reinterpret_cast<fftw_complex*>(b.data()), FFTW_FORWARD,
                                         FFTW_ESTIMATE | FFTW_UNALIGNED));
            inverse_.reset(fftw_plan_dft(axes, dims.data(), reinterpret_cast<fftw_complex*>(a.data()),
                                         reinterpret_cast<fftw_complex*>(b.data()), FFTW_BACKWARD,
                                         FFTW_ESTIMATE | FFTW_UNALIGNED));
        }
        if (!forward_ || !inverse_)
            throw Error(ErrorCode::invalid_argument, "FFTW planning failed");

        const int n = spec.complex_dim;
        holo_.assign(static_cast<std::size_t>(n), std::vector<cplx>(size_));
        antiholo_.assign(static_cast<std::size_t>(n), std::vector<cplx>(size_));
        ddbar_.assign(static_cast<std::size_t>(n * n), std::vector<cplx>(size_));
        flat_lap_.assign(size_, 0.0);
        flat_lap_pinv_.assign(size_, 0.0);

        std::vector<int> idx(static_cast<std::size_t>(axes));
        const cplx I(0.0, 1.0);
        for (std::size_t p = 0; p < size_; ++p) {
            std::size_t rest = p;
            for (int a = axes - 1; a >= 0; --a) {
                idx[static_cast<std::size_t>(a)] = static_cast<int>(rest % static_cast<std::size_t>(N));
                rest /= static_cast<std::size_t>(N);
            }
            auto d1 = [&](int axis) { return d1_[static_cast<std::size_t>(axis)][static_cast<std::size_t>(idx[static_cast<std::size_t>(axis)])]; };
            auto d2 = [&](int axis) { return d2_[static_cast<std::size_t>(axis)][static_cast<std::size_t>(idx[static_cast<std::size_t>(axis)])]; };
            double lap = 0.0;
            for (int j = 0; j < n; ++j) {
                const cplx dx = d1(2 * j), dy = d1(2 * j + 1);
                holo_[static_cast<std::size_t>(j)][p] = 0.5 * (dx - I * dy);
                antiholo_[static_cast<std::size_t>(j)][p] = 0.5 * (dx + I * dy);
            }
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    cplx s;
                    if (i == j) {
                        s = 0.25 * (d2(2 * i) + d2(2 * i + 1));
                        lap += s.real();
                    } else {
                        s = holo_[static_cast<std::size_t>(i)][p] * antiholo_[static_cast<std::size_t>(j)][p];
                    }
                    ddbar_[static_cast<std::size_t>(i * n + j)][p] = s;
                }
            }
            flat_lap_[p] = lap;
            flat_lap_pinv_[p] = (p == 0 || lap == 0.0) ? 0.0 : 1.0 / lap;
        }
    }

    void build_axis_symbols()
    {
        const int N = spec_.points_per_axis;
        const double two_pi = 2.0 * std::numbers::pi;
        d1_.assign(static_cast<std::size_t>(spec_.real_axes()), std::vector<cplx>(static_cast<std::size_t>(N)));
        d2_.assign(static_cast<std::size_t>(spec_.real_axes()), std::vector<double>(static_cast<std::size_t>(N)));
        std::vector<cplx> first(static_cast<std::size_t>(N));
        std::vector<double> second(static_cast<std::size_t>(N));
        for (int m = 0; m < N; ++m) {
            const int k = (m <= N / 2) ? m : m - N;
            const double theta = two_pi * k / N;
            const double h = 1.0 / N;
            double s1 = 0.0, s2 = 0.0;
            if (spec_.scheme.kind == DiffScheme::Kind::fourier_collocation) {
                // Nyquist mode has no odd derivative on a real grid.
                s1 = (2 * m == N) ? 0.0 : two_pi * k;
                s2 = -(two_pi * k) * (two_pi * k);
            } else {
                switch (spec_.scheme.order) {
                case 2:
                    s1 = std::sin(theta) / h;
                    s2 = (2.0 * std::cos(theta) - 2.0) / (h * h);
                    break;
                case 4:
                    s1 = (8.0 * std::sin(theta) - std::sin(2.0 * theta)) / (6.0 * h);
                    s2 = (-2.0 * std::cos(2.0 * theta) + 32.0 * std::cos(theta) - 30.0) / (12.0 * h * h);
                    break;
                default:
                    s1 = (45.0 * std::sin(theta) - 9.0 * std::sin(2.0 * theta) + std::sin(3.0 * theta)) / (30.0 * h);
                    s2 = (4.0 * std::cos(3.0 * theta) - 54.0 * std::cos(2.0 * theta) + 540.0 * std::cos(theta) - 490.0) /
                         (180.0 * h * h);
                    break;
                }
                if (2 * m == N)
                    s1 = 0.0;
            }
            first[static_cast<std::size_t>(m)] = cplx(0.0, s1);
            second[static_cast<std::size_t>(m)] = s2;
        }
        for (int a = 0; a < spec_.real_axes(); ++a) {
            d1_[static_cast<std::size_t>(a)] = first;
            d2_[static_cast<std::size_t>(a)] = second;
        }
    }

    GridSpec spec_;
    std::size_t size_;
    detail::FftwPlan forward_;
    detail::FftwPlan inverse_;
    std::vector<std::vector<cplx>> d1_;
    std::vector<std::vector<double>> d2_;
    std::vector<std::vector<cplx>> holo_;
    std::vector<std::vector<cplx>> antiholo_;
    std::vector<std::vector<cplx>> ddbar_;
    std::vector<double> flat_lap_;
    std::vector<double> flat_lap_pinv_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline void require_same_grid(const GridPtr& a, const GridPtr& b)
{
    if (a.get() != b.get() && !(a && b && a->spec() == b->spec()))
        throw Error(ErrorCode::grid_mismatch, "fields live on different grids");
}

} // namespace cma
