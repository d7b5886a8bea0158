#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "oscdom/czo.hpp"
#include "oscdom/dyadic.hpp"
#include "oscdom/errors.hpp"
#include "oscdom/fft.hpp"
#include "oscdom/grid.hpp"
#include "oscdom/local_stats.hpp"

namespace oscdom {

// ---------------------------------------------------------------------------
// Riesz potential I_1 g = g * |.|^{-1} in the plane, with exact per-cell
// weights (the singular cell integrates to 4 log(1+sqrt 2) h).
// ---------------------------------------------------------------------------

namespace detail {

inline double riesz_potential_weight(const Grid& g, std::int64_t dx, std::int64_t dy) {
    const double h = g.spacing();
    RealBox b;
    b.dim = 2;
    b.lo = {(static_cast<double>(dx) - 0.5) * h, (static_cast<double>(dy) - 0.5) * h};
    b.hi = {(static_cast<double>(dx) + 0.5) * h, (static_cast<double>(dy) + 0.5) * h};
    return inv_distance_box_integral({0.0, 0.0}, b);
}

}  // namespace detail

inline GridFunction riesz_potential(const GridFunction& g) {
    if (g.grid.dim() != 2)
        throw DimensionUnsupported("riesz_potential is defined for n = 2 only");
    Conv2dFFT conv(g.grid.cells_per_axis, [&](std::int64_t dx, std::int64_t dy) {
        return detail::riesz_potential_weight(g.grid, dx, dy);
    });
    GridFunction out(g.grid);
    out.values = conv.apply(g.values);
    return out;
}

/// Direct double-loop evaluation with the same exact cell weights; the
/// independent route for checking the transform-accelerated path.
inline GridFunction riesz_potential_direct(const GridFunction& g) {
    if (g.grid.dim() != 2)
        throw DimensionUnsupported("riesz_potential is defined for n = 2 only");
    const std::int64_t n = g.grid.cells_per_axis;
    GridFunction out(g.grid);
    for (std::int64_t oy = 0; oy < n; ++oy)
        for (std::int64_t ox = 0; ox < n; ++ox) {
            double sum = 0.0;
            for (std::int64_t jy = 0; jy < n; ++jy)
                for (std::int64_t jx = 0; jx < n; ++jx) {
                    const double v = g.at(jy * n + jx);
                    if (v != 0.0)
                        sum += detail::riesz_potential_weight(g.grid, ox - jx, oy - jy) * v;
                }
            out.at(oy * n + ox) = sum;
        }
    return out;
}

// ---------------------------------------------------------------------------
// (1,1) Poincare inequality: C_Q = Omega(f;Q) / (|Q|^{1/n} <|grad f|>_Q).
// ---------------------------------------------------------------------------

struct PoincareRow {
    Cube cube;
    double constant = 0.0;
    bool skipped = false;  // ZeroGradient
};

struct PoincareReport {
    std::vector<PoincareRow> rows;
    double max_constant = 0.0;
    std::int64_t skipped = 0;
};

inline PoincareReport poincare_check(const GridFunction& f, const std::vector<Cube>& cubes) {
    PoincareReport rep;
    const GridFunction grad = gradient_norm(f);
    for (const Cube& q : cubes) {
        PoincareRow row;
        row.cube = q;
        const double denom = std::pow(q.measure(), 1.0 / q.dim) * average(grad, q);
        if (denom <= 0.0) {
            row.skipped = true;
            ++rep.skipped;
        } else {
            row.constant = mean_oscillation(f, q) / denom;
            rep.max_constant = std::max(rep.max_constant, row.constant);
        }
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Dyadic-sum-to-Riesz-potential comparison (one lattice, one point):
//   lhs = sum over lattice cubes Q containing x of |Q|^{-(1-1/n)} int_Q g,
//   rhs = I_1 g(x).
// ---------------------------------------------------------------------------

inline double dyadic_riesz_lhs(const GridFunction& g, const PrefixSum& sums,
                               const ShiftedLatticeSet& lattices, int lattice,
                               const Point& x) {
    const Grid& grid = g.grid;
    if (grid.dim() != 2) throw DimensionUnsupported("dyadic sum needs n = 2");
    const double h = grid.spacing();
    double l1 = sums.range_sum(grid.full_range()) * grid.cell_measure();
    const int p_min = static_cast<int>(std::ceil(std::log2(h)));
    const int p_max = static_cast<int>(std::ceil(std::log2(4.0 * grid.box.side)));
    double lhs = 0.0;
    for (int p = p_min; p <= p_max; ++p) {
        const Cube q = lattices.cube_at(lattice, p, x);
        const CellRange r = grid.snap(q, 0, /*clip=*/true);
        const double integral = sums.range_sum(r) * grid.cell_measure();
        lhs += integral / q.side;  // |Q|^{1/2} = side for n = 2
    }
    // scales above p_max: the cube contains the whole box, the integral is
    // ||g||_1 and the weights sum geometrically
    lhs += l1 / std::ldexp(1.0, p_max);
    return lhs;
}

inline std::pair<double, double> dyadic_riesz_bound(const GridFunction& g,
                                                    const ShiftedLatticeSet& lattices,
                                                    int lattice, const Point& x,
                                                    const GridFunction& i1g) {
    PrefixSum sums(g);
    const double lhs = dyadic_riesz_lhs(g, sums, lattices, lattice, x);
    const CellRange cell = g.grid.snap(
        Cube{{x[0], x[1]}, g.grid.spacing(), 2}, 1, /*clip=*/true);
    const std::int64_t flat = g.grid.flat_index(cell.lo[0], cell.lo[1]);
    return {lhs, i1g.at(flat)};
}

// ---------------------------------------------------------------------------
// Sobolev-type domination |Tf| <= C I_1(|grad f|) and the necessity probe.
// ---------------------------------------------------------------------------

struct SobolevReport {
    double best_constant = 0.0;
    std::int64_t evaluated_cells = 0;
    std::vector<std::int64_t> violations;
    double violation_fraction = 0.0;
    GridFunction tf;
    GridFunction potential;  // I_1 |grad f|
};

inline SobolevReport sobolev_check(const OperatorSpec& T, const GridFunction& f) {
    if (f.grid.dim() != 2)
        throw DimensionUnsupported("the pointwise Sobolev suite needs n = 2");
    SobolevReport rep;
    rep.tf = apply(T, f);
    rep.potential = riesz_potential(gradient_norm(f));
    double max_tf = 0.0;
    for (double v : rep.tf.values) max_tf = std::max(max_tf, std::fabs(v));
    const double zero_tol = 1e-8 * max_tf;
    for (std::int64_t i = 0; i < f.grid.total_cells(); ++i) {
        ++rep.evaluated_cells;
        const double pot = rep.potential.at(i);
        const double t = std::fabs(rep.tf.at(i));
        if (pot > 0.0)
            rep.best_constant = std::max(rep.best_constant, t / pot);
        else if (t > zero_tol)
            rep.violations.push_back(i);
    }
    rep.violation_fraction = static_cast<double>(rep.violations.size()) /
                             static_cast<double>(rep.evaluated_cells);
    return rep;
}

struct NecessityReport {
    ProbeResult probe;
    std::vector<std::pair<double, double>> premise_sups;  // (R, sup I_1 |grad theta_R|)
    bool premise_uniform = false;
    bool consistent = false;  // verdict matches T(1) in L^infty
};

/// Necessity side of the Sobolev characterization: verifies the premise
/// that sup I_1(|grad theta_R|) is R-independent, then reads the T(theta_R)
/// probe verdict.
inline NecessityReport necessity_probe(const OperatorSpec& T, const ProbeConfig& probe) {
    NecessityReport rep;
    rep.probe = t1_probe(T, probe, 2);
    for (double R : probe.radii) {
        const Cube box = Cube::square(0.0, 0.0, probe.box_factor * R);
        const Grid grid(box, probe.cells_2d);
        GridFunction slope = GridFunction::sample(grid, [R](Point p) {
            return theta_profile_slope(std::hypot(p[0], p[1]) / R) / R;
        });
        GridFunction pot = riesz_potential(slope);
        double sup = 0.0;
        const double w = probe.obs_fraction * R;
        for (std::int64_t i = 0; i < grid.total_cells(); ++i) {
            const Point p = grid.cell_center(i);
            if (std::fabs(p[0]) <= w && std::fabs(p[1]) <= w)
                sup = std::max(sup, pot.at(i));
        }
        rep.premise_sups.emplace_back(R, sup);
    }
    double mx = 0.0, mn = 1e300;
    for (const auto& [R, sup] : rep.premise_sups) {
        mx = std::max(mx, sup);
        mn = std::min(mn, sup);
    }
    rep.premise_uniform = mx > 0.0 && (mx - mn) / mx < 0.10;
    rep.consistent = rep.probe.bounded;
    return rep;
}

}  // namespace oscdom
