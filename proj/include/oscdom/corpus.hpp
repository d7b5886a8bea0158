#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "oscdom/cube.hpp"
#include "oscdom/grid.hpp"
#include "oscdom/rng.hpp"

namespace oscdom {

struct CorpusMember {
    std::string name;
    int dim = 1;
    double support_radius = 1.0;  // supp f inside [-r, r]^n
    bool c1 = false;              // smooth enough for gradient-based suites
    std::function<double(Point)> fn;
};

namespace corpus_detail {

/// C^2 falloff: 1 at t <= 0, 0 at t >= 1 (quintic smoothstep).
inline double falloff(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// C^2 compactly supported bump on |x - c| < a.
inline double bump(double x, double c, double a) {
    const double u = (x - c) / a;
    const double s = 1.0 - u * u;
    return s > 0.0 ? s * s * s : 0.0;
}

inline double plateau(double x, double flat, double edge) {
    return falloff((std::fabs(x) - flat) / edge);
}

}  // namespace corpus_detail

/// The plateau member: height about 1 on [-1,1], C^2 edges, interior
/// ripples of amplitude 0.05.
inline CorpusMember plateau_member() {
    CorpusMember m;
    m.name = "plateau";
    m.dim = 1;
    m.support_radius = 1.25;
    m.c1 = true;
    m.fn = [](Point p) {
        using namespace corpus_detail;
        const double base = plateau(p[0], 1.0, 0.25);
        const double taper = plateau(p[0], 0.8, 0.15);
        return base + 0.05 * std::sin(10.0 * M_PI * p[0]) * taper;
    };
    return m;
}

inline std::vector<CorpusMember> corpus_1d(std::uint64_t seed) {
    using namespace corpus_detail;
    std::vector<CorpusMember> out;
    out.push_back(plateau_member());

    out.push_back({"plateau-soft", 1, 1.25, true, [](Point p) {
                       const double base = plateau(p[0], 0.85, 0.4);
                       const double taper = plateau(p[0], 0.7, 0.1);
                       return base + 0.05 * std::sin(6.0 * M_PI * p[0]) * taper;
                   }});
    out.push_back({"bump-wide", 1, 1.2, true,
                   [](Point p) { return bump(p[0], 0.0, 1.2); }});
    out.push_back({"bump-narrow", 1, 0.85, true,
                   [](Point p) { return 1.4 * bump(p[0], 0.3, 0.5); }});
    out.push_back({"bump-pair", 1, 1.1, true, [](Point p) {
                       return bump(p[0], -0.6, 0.45) + 0.7 * bump(p[0], 0.55, 0.5);
                   }});
    out.push_back({"trig-low", 1, 1.2, true, [](Point p) {
                       return std::cos(2.0 * M_PI * p[0]) * bump(p[0], 0.0, 1.2);
                   }});
    out.push_back({"trig-mid", 1, 1.2, true, [](Point p) {
                       return (0.8 * std::sin(5.0 * M_PI * p[0]) +
                               0.4 * std::cos(3.0 * M_PI * p[0])) *
                              bump(p[0], 0.0, 1.2);
                   }});
    out.push_back({"trig-high", 1, 1.2, true, [](Point p) {
                       return std::sin(7.0 * M_PI * p[0] + 0.5) * bump(p[0], 0.1, 1.1);
                   }});

    for (int k = 0; k < 4; ++k) {
        RngStream rng(seed, "corpus-1d-random", static_cast<std::uint64_t>(k));
        struct Piece {
            double amp, center, width;
        };
        std::vector<Piece> bumps;
        const int nb = 2 + static_cast<int>(rng.uniform_index(3));
        for (int b = 0; b < nb; ++b)
            bumps.push_back({rng.uniform(-1.5, 1.5), rng.uniform(-0.8, 0.8),
                             rng.uniform(0.15, 0.5)});
        // one genuine jump: rough members are only integrable, not C^1
        const double step_amp = rng.uniform(-1.0, 1.0);
        const double step_lo = rng.uniform(-0.9, 0.2);
        const double step_hi = step_lo + rng.uniform(0.2, 0.7);
        out.push_back({"piecewise-" + std::to_string(k), 1, 1.3, false,
                       [bumps, step_amp, step_lo, step_hi](Point p) {
                           double v = 0.0;
                           for (const auto& b : bumps) v += b.amp * bump(p[0], b.center, b.width);
                           if (p[0] >= step_lo && p[0] <= step_hi) v += step_amp;
                           return v;
                       }});
    }
    return out;
}

inline std::vector<CorpusMember> corpus_2d(std::uint64_t /*seed*/) {
    using namespace corpus_detail;
    std::vector<CorpusMember> out;
    out.push_back({"radial-bump", 2, 1.0, true, [](Point p) {
                       const double r = std::hypot(p[0], p[1]);
                       return bump(r, 0.0, 1.0);
                   }});
    out.push_back({"bump-pair-2d", 2, 1.1, true, [](Point p) {
                       const double r1 = std::hypot(p[0] + 0.45, p[1] - 0.2);
                       const double r2 = std::hypot(p[0] - 0.4, p[1] + 0.3);
                       return bump(r1, 0.0, 0.6) + 0.8 * bump(r2, 0.0, 0.55);
                   }});
    out.push_back({"trig-bump-2d", 2, 1.1, true, [](Point p) {
                       const double r = std::hypot(p[0], p[1]);
                       return std::cos(3.0 * p[0]) * std::sin(2.0 * p[1] + 0.4) *
                              bump(r, 0.0, 1.1);
                   }});
    return out;
}

/// Sample a member onto a grid; values are exactly zero outside the
/// support radius.
inline GridFunction sample_member(const CorpusMember& m, const Grid& grid) {
    GridFunction f = GridFunction::sample(grid, m.fn);
    f.support_hint = grid.snap(
        Cube{{0.0, 0.0}, 2.0 * m.support_radius, m.dim}, 1, /*clip=*/true);
    return f;
}

}  // namespace oscdom
