#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oscdom/cube.hpp"
#include "oscdom/errors.hpp"

namespace oscdom {

/// Half-open per-axis cell index box [lo, hi).
struct CellRange {
    std::array<std::int64_t, 2> lo{0, 0};
    std::array<std::int64_t, 2> hi{0, 0};
    int dim = 1;

    std::int64_t extent(int axis) const { return hi[axis] - lo[axis]; }
    std::int64_t count() const {
        std::int64_t c = 1;
        for (int a = 0; a < dim; ++a) c *= std::max<std::int64_t>(0, extent(a));
        return c;
    }
    bool empty() const { return count() == 0; }
    bool contains(const CellRange& r) const {
        for (int a = 0; a < dim; ++a)
            if (r.lo[a] < lo[a] || r.hi[a] > hi[a]) return false;
        return true;
    }
};

/// Uniform grid of N^n cells over a bounding cube; values live at cell
/// midpoints (cell-constant model).
struct Grid {
    Cube box;
    std::int64_t cells_per_axis = 0;

    Grid() = default;
    Grid(const Cube& b, std::int64_t n_cells) : box(b), cells_per_axis(n_cells) {
        if (n_cells <= 0) throw Error("Grid: cellsPerAxis must be positive");
    }

    int dim() const { return box.dim; }
    double spacing() const { return box.side / static_cast<double>(cells_per_axis); }
    std::int64_t total_cells() const {
        return dim() == 1 ? cells_per_axis : cells_per_axis * cells_per_axis;
    }
    double cell_measure() const {
        return dim() == 1 ? spacing() : spacing() * spacing();
    }

    double axis_origin(int axis) const { return box.lo(axis); }

    double midpoint(int axis, std::int64_t i) const {
        return axis_origin(axis) + (static_cast<double>(i) + 0.5) * spacing();
    }

    std::array<double, 2> cell_center(std::int64_t flat) const {
        if (dim() == 1) return {midpoint(0, flat), 0.0};
        return {midpoint(0, flat % cells_per_axis), midpoint(1, flat / cells_per_axis)};
    }

    std::int64_t flat_index(std::int64_t ix, std::int64_t iy = 0) const {
        return dim() == 1 ? ix : iy * cells_per_axis + ix;
    }

    CellRange full_range() const {
        CellRange r;
        r.dim = dim();
        for (int a = 0; a < dim(); ++a) {
            r.lo[a] = 0;
            r.hi[a] = cells_per_axis;
        }
        return r;
    }

    /// Snap a cube to cell boundaries (nearest-boundary per face). The
    /// pipeline only produces cubes whose faces are exactly on (or within
    /// rounding of) boundaries; `min_cells` guards degenerate snaps.
    CellRange snap(const Cube& q, std::int64_t min_cells = 1,
                   bool clip_to_domain = false) const {
        if (q.dim != dim()) throw Error("snap: dimension mismatch");
        const double h = spacing();
        CellRange r;
        r.dim = dim();
        for (int a = 0; a < dim(); ++a) {
            double lo_f = (q.lo(a) - axis_origin(a)) / h;
            double hi_f = (q.hi(a) - axis_origin(a)) / h;
            std::int64_t lo = static_cast<std::int64_t>(std::llround(lo_f));
            std::int64_t hi = static_cast<std::int64_t>(std::llround(hi_f));
            if (clip_to_domain) {
                lo = std::max<std::int64_t>(lo, 0);
                hi = std::min<std::int64_t>(hi, cells_per_axis);
            } else if (lo < 0 || hi > cells_per_axis) {
                throw CubeOutsideDomain("cube exceeds grid box on axis " +
                                        std::to_string(a));
            }
            if (hi - lo < min_cells)
                throw CubeBelowResolution("cube covers " + std::to_string(hi - lo) +
                                          " cells on axis " + std::to_string(a) +
                                          ", needs " + std::to_string(min_cells));
            r.lo[a] = lo;
            r.hi[a] = hi;
        }
        return r;
    }

    bool same_layout(const Grid& o) const {
        return dim() == o.dim() && cells_per_axis == o.cells_per_axis &&
               box.side == o.box.side && box.center == o.box.center;
    }
};

struct GridFunction {
    Grid grid;
    std::vector<double> values;
    std::optional<CellRange> support_hint;

    GridFunction() = default;
    explicit GridFunction(const Grid& g)
        : grid(g), values(static_cast<std::size_t>(g.total_cells()), 0.0) {}

    double& at(std::int64_t flat) { return values[static_cast<std::size_t>(flat)]; }
    double at(std::int64_t flat) const { return values[static_cast<std::size_t>(flat)]; }

    /// Sample a callable at all cell midpoints.
    static GridFunction sample(const Grid& g,
                               const std::function<double(std::array<double, 2>)>& fn) {
        GridFunction f(g);
        for (std::int64_t i = 0; i < g.total_cells(); ++i)
            f.values[static_cast<std::size_t>(i)] = fn(g.cell_center(i));
        return f;
    }
};

namespace detail {

template <typename Body>
inline void for_each_cell(const Grid& g, const CellRange& r, Body&& body) {
    if (g.dim() == 1) {
        for (std::int64_t i = r.lo[0]; i < r.hi[0]; ++i) body(i);
    } else {
        for (std::int64_t iy = r.lo[1]; iy < r.hi[1]; ++iy)
            for (std::int64_t ix = r.lo[0]; ix < r.hi[0]; ++ix)
                body(iy * g.cells_per_axis + ix);
    }
}

/// Range sum with bisection-aligned association: the range splits at its
/// midpoint along the longer axis (ties split the y axis), so the sum over
/// a grid-aligned cube equals the sum of the sums over its dyadic halves
/// bit for bit.
inline double bisection_sum(const GridFunction& f, const CellRange& r) {
    std::int64_t longest = 0;
    for (int a = 1; a < r.dim; ++a)
        if (r.extent(a) >= r.extent(longest)) longest = a;
    if (r.count() <= 4 || r.extent(longest) < 2) {
        double sum = 0.0;
        for_each_cell(f.grid, r, [&](std::int64_t i) { sum += f.at(i); });
        return sum;
    }
    CellRange lo = r, hi = r;
    const std::int64_t mid = r.lo[longest] + r.extent(longest) / 2;
    lo.hi[longest] = mid;
    hi.lo[longest] = mid;
    return bisection_sum(f, lo) + bisection_sum(f, hi);
}

}  // namespace detail

/// Midpoint-rule integral of f over q (q snapped to the grid).
inline double integrate(const GridFunction& f, const Cube& q) {
    CellRange r = f.grid.snap(q);
    return detail::bisection_sum(f, r) * f.grid.cell_measure();
}

inline double cube_measure_snapped(const Grid& g, const CellRange& r) {
    return static_cast<double>(r.count()) * g.cell_measure();
}

/// <f>_Q, with |Q| taken at cell granularity so that averages of
/// indicator data stay exact.
inline double average(const GridFunction& f, const Cube& q) {
    CellRange r = f.grid.snap(q);
    return detail::bisection_sum(f, r) / static_cast<double>(r.count());
}

/// f * indicator(q).
inline GridFunction restrict_to(const GridFunction& f, const Cube& q) {
    CellRange r = f.grid.snap(q);
    GridFunction out(f.grid);
    detail::for_each_cell(f.grid, r, [&](std::int64_t i) { out.at(i) = f.at(i); });
    out.support_hint = r;
    return out;
}

/// Central differences in the interior, one-sided at the boundary.
inline std::vector<GridFunction> gradient(const GridFunction& f) {
    const Grid& g = f.grid;
    const double h = g.spacing();
    const std::int64_t n = g.cells_per_axis;
    std::vector<GridFunction> out;
    if (g.dim() == 1) {
        GridFunction d(g);
        for (std::int64_t i = 0; i < n; ++i) {
            if (i == 0)
                d.at(i) = (f.at(1) - f.at(0)) / h;
            else if (i == n - 1)
                d.at(i) = (f.at(n - 1) - f.at(n - 2)) / h;
            else
                d.at(i) = (f.at(i + 1) - f.at(i - 1)) / (2.0 * h);
        }
        out.push_back(std::move(d));
        return out;
    }
    GridFunction dx(g), dy(g);
    auto v = [&](std::int64_t ix, std::int64_t iy) { return f.at(iy * n + ix); };
    for (std::int64_t iy = 0; iy < n; ++iy) {
        for (std::int64_t ix = 0; ix < n; ++ix) {
            double gx, gy;
            if (ix == 0)
                gx = (v(1, iy) - v(0, iy)) / h;
            else if (ix == n - 1)
                gx = (v(n - 1, iy) - v(n - 2, iy)) / h;
            else
                gx = (v(ix + 1, iy) - v(ix - 1, iy)) / (2.0 * h);
            if (iy == 0)
                gy = (v(ix, 1) - v(ix, 0)) / h;
            else if (iy == n - 1)
                gy = (v(ix, n - 1) - v(ix, n - 2)) / h;
            else
                gy = (v(ix, iy + 1) - v(ix, iy - 1)) / (2.0 * h);
            dx.at(iy * n + ix) = gx;
            dy.at(iy * n + ix) = gy;
        }
    }
    out.push_back(std::move(dx));
    out.push_back(std::move(dy));
    return out;
}

/// Euclidean norm of the gradient field.
inline GridFunction gradient_norm(const GridFunction& f) {
    auto g = gradient(f);
    GridFunction out(f.grid);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double s = 0.0;
        for (const auto& c : g) s += c.values[i] * c.values[i];
        out.values[i] = std::sqrt(s);
    }
    return out;
}

/// Inclusive prefix sums for O(1) box sums (summed-area table in 2D).
class PrefixSum {
public:
    explicit PrefixSum(const GridFunction& f, bool absolute = false) : grid_(f.grid) {
        const std::int64_t n = grid_.cells_per_axis;
        if (grid_.dim() == 1) {
            table_.assign(static_cast<std::size_t>(n + 1), 0.0);
            for (std::int64_t i = 0; i < n; ++i) {
                double v = absolute ? std::fabs(f.at(i)) : f.at(i);
                table_[static_cast<std::size_t>(i + 1)] =
                    table_[static_cast<std::size_t>(i)] + v;
            }
        } else {
            stride_ = n + 1;
            table_.assign(static_cast<std::size_t>(stride_ * stride_), 0.0);
            for (std::int64_t iy = 0; iy < n; ++iy)
                for (std::int64_t ix = 0; ix < n; ++ix) {
                    double v = absolute ? std::fabs(f.at(iy * n + ix)) : f.at(iy * n + ix);
                    at(ix + 1, iy + 1) = v + at(ix, iy + 1) + at(ix + 1, iy) - at(ix, iy);
                }
        }
    }

    /// Sum of values over a cell range (not scaled by cell measure).
    double range_sum(const CellRange& r) const {
        if (r.empty()) return 0.0;
        if (grid_.dim() == 1)
            return table_[static_cast<std::size_t>(r.hi[0])] -
                   table_[static_cast<std::size_t>(r.lo[0])];
        return at(r.hi[0], r.hi[1]) - at(r.lo[0], r.hi[1]) - at(r.hi[0], r.lo[1]) +
               at(r.lo[0], r.lo[1]);
    }

private:
    double& at(std::int64_t ix, std::int64_t iy) {
        return table_[static_cast<std::size_t>(iy * stride_ + ix)];
    }
    double at(std::int64_t ix, std::int64_t iy) const {
        return table_[static_cast<std::size_t>(iy * stride_ + ix)];
    }

    Grid grid_;
    std::int64_t stride_ = 0;
    std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// GridFunction I/O: CSV (cell,value) and a compact binary layout.
// Binary: magic "OSDF", u32 version, u32 dim, u64 N, box center (dim f64),
// box side (f64), then row-major values as little-endian f64.
// ---------------------------------------------------------------------------

inline void write_csv(const GridFunction& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("write_csv: cannot open " + path);
    out << "cell,value\n";
    char buf[64];
    for (std::int64_t i = 0; i < f.grid.total_cells(); ++i) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g\n", static_cast<long long>(i), f.at(i));
        out << buf;
    }
}

inline void write_binary(const GridFunction& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_binary: cannot open " + path);
    const char magic[4] = {'O', 'S', 'D', 'F'};
    out.write(magic, 4);
    std::uint32_t version = 1, dim = static_cast<std::uint32_t>(f.grid.dim());
    std::uint64_t n = static_cast<std::uint64_t>(f.grid.cells_per_axis);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(&n), 8);
    for (std::uint32_t a = 0; a < dim; ++a) {
        double c = f.grid.box.center[a];
        out.write(reinterpret_cast<const char*>(&c), 8);
    }
    double side = f.grid.box.side;
    out.write(reinterpret_cast<const char*>(&side), 8);
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

inline GridFunction read_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_binary: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "OSDF", 4) != 0) throw Error("read_binary: bad magic");
    std::uint32_t version = 0, dim = 0;
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&dim), 4);
    in.read(reinterpret_cast<char*>(&n), 8);
    if (version != 1 || dim < 1 || dim > 2) throw Error("read_binary: bad header");
    Cube box;
    box.dim = static_cast<int>(dim);
    for (std::uint32_t a = 0; a < dim; ++a)
        in.read(reinterpret_cast<char*>(&box.center[a]), 8);
    in.read(reinterpret_cast<char*>(&box.side), 8);
    GridFunction f(Grid(box, static_cast<std::int64_t>(n)));
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!in) throw Error("read_binary: truncated file");
    return f;
}

}  // namespace oscdom
