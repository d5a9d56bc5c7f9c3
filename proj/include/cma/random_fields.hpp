#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cma/calculus.hpp"

// Seeded generators of smooth band-limited data on the torus.
namespace cma::random {

struct TrigMode {
    std::vector<int> freq; // one integer frequency per real axis
    double amplitude = 0.0;
    double phase = 0.0;
};

/// Random low-frequency trigonometric modes; `max_freq` bounds every axis frequency.
inline std::vector<TrigMode> random_modes(std::mt19937_64& rng, int real_axes, int terms, int max_freq)
{
    std::uniform_int_distribution<int> freq(-max_freq, max_freq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<TrigMode> modes;
    while (static_cast<int>(modes.size()) < terms) {
        TrigMode m;
        m.freq.resize(static_cast<std::size_t>(real_axes));
        bool nonzero = false;
        for (auto& k : m.freq) {
            k = freq(rng);
            nonzero = nonzero || k != 0;
        }
        if (!nonzero)
            continue;
        m.amplitude = 0.25 + 0.75 * unit(rng);
        m.phase = 2.0 * std::numbers::pi * unit(rng);
        modes.push_back(std::move(m));
    }
    return modes;
}

inline double evaluate(const std::vector<TrigMode>& modes, const Coords& c, int n)
{
    double s = 0.0;
    for (const auto& m : modes) {
        double arg = m.phase;
        for (int j = 0; j < n; ++j)
            arg += 2.0 * std::numbers::pi *
                   (m.freq[static_cast<std::size_t>(2 * j)] * c.x(j) + m.freq[static_cast<std::size_t>(2 * j + 1)] * c.y(j));
        s += m.amplitude * std::cos(arg);
    }
    return s;
}

/// Smooth real field with mean zero and grid sup-norm exactly `amplitude`.
inline RealField smooth_field(const GridPtr& grid, std::mt19937_64& rng, double amplitude, int terms = 4,
                              int max_freq = 1)
{
    const auto modes = random_modes(rng, 2 * grid->n(), terms, max_freq);
    RealField f = RealField::from_function(grid, [&](const Coords& c) { return evaluate(modes, c, grid->n()); });
    f += -mean(f);
    const double sup = sup_norm(f);
    if (sup > 0.0)
        f *= amplitude / sup;
    return f;
}

/**
 * Smooth Hermitian metric I + P with P a random Hermitian perturbation whose
 * entries have sup-norm at most `amplitude`. Generically neither Kaehler nor
 * balanced nor Gauduchon. Requires amplitude * n < 1 for positivity.
 */
inline HermitianField smooth_metric(const GridPtr& grid, std::mt19937_64& rng, double amplitude, int max_freq = 1)
{
    const int n = grid->n();
    HermitianField g = HermitianField::identity(grid);
    for (int i = 0; i < n; ++i) {
        const RealField d = smooth_field(grid, rng, amplitude, 3, max_freq);
        for (std::size_t p = 0; p < grid->size(); ++p)
            g.entry(p, i, i) += d[p];
        for (int j = i + 1; j < n; ++j) {
            const RealField re = smooth_field(grid, rng, amplitude / std::sqrt(2.0), 3, max_freq);
            const RealField im = smooth_field(grid, rng, amplitude / std::sqrt(2.0), 3, max_freq);
            for (std::size_t p = 0; p < grid->size(); ++p) {
                g.entry(p, i, j) += cplx(re[p], im[p]);
                g.entry(p, j, i) += cplx(re[p], -im[p]);
            }
        }
    }
    require_metric(g, "random metric");
    return g;
}

} // namespace cma::random
