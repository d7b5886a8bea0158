#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "oscdom/dyadic.hpp"
#include "oscdom/errors.hpp"
#include "oscdom/grid.hpp"

namespace oscdom {

namespace detail {

inline std::vector<double> cell_values(const GridFunction& f, const CellRange& r) {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(r.count()));
    for_each_cell(f.grid, r, [&](std::int64_t i) { v.push_back(f.at(i)); });
    return v;
}

/// Rearrangement level of a value multiset at fraction lambda: the
/// smallest alpha >= 0 such that at most floor(lambda*k) entries of |v|
/// exceed alpha.
inline double rearrangement_level(std::vector<double> absv, double lambda) {
    const auto k = static_cast<std::int64_t>(absv.size());
    auto j = static_cast<std::int64_t>(std::floor(lambda * static_cast<double>(k) + 1e-9));
    if (j >= k) return 0.0;
    std::nth_element(absv.begin(), absv.begin() + j, absv.end(), std::greater<double>());
    return absv[static_cast<std::size_t>(j)];
}

/// Lower median of a value multiset (all cells carry equal weight).
inline double lower_median(std::vector<double> v) {
    const std::size_t k = v.size();
    const std::size_t idx = (k - 1) / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
    return v[idx];
}

}  // namespace detail

/// (f chi_Q)*(lambda |Q|): smallest alpha >= 0 with
/// |{x in Q : |f(x)| > alpha}| <= lambda |Q|.
inline double rearrangement(const GridFunction& f, const Cube& q, double lambda) {
    if (!(lambda > 0.0 && lambda <= 1.0))
        throw LambdaOutOfRange("lambda = " + std::to_string(lambda));
    CellRange r = f.grid.snap(q);
    std::vector<double> v = detail::cell_values(f, r);
    for (double& x : v) x = std::fabs(x);
    return detail::rearrangement_level(std::move(v), lambda);
}

/// Median value m_f(Q); lower-median tie break over cell values.
inline double median(const GridFunction& f, const Cube& q) {
    return detail::lower_median(detail::cell_values(f, f.grid.snap(q)));
}

/// Mean oscillation Omega(f;Q) = |Q|^{-1} int_Q |f - <f>_Q|.
inline double mean_oscillation(const GridFunction& f, const Cube& q) {
    std::vector<double> v = detail::cell_values(f, f.grid.snap(q));
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double dev = 0.0;
    for (double x : v) dev += std::fabs(x - mean);
    return dev / static_cast<double>(v.size());
}

/// |Q|^{-1} int_Q |f - m_f(Q)|.
inline double median_oscillation(const GridFunction& f, const Cube& q) {
    std::vector<double> v = detail::cell_values(f, f.grid.snap(q));
    const double m = detail::lower_median(v);
    double dev = 0.0;
    for (double x : v) dev += std::fabs(x - m);
    return dev / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// Hardy-Littlewood maximal function over the 3^n shifted lattices. At each
// cell the sup runs over every lattice cube containing the cell midpoint,
// all scales from single cells up to cubes swallowing the whole box, with
// f extended by zero outside the grid. Sub-cell scales collapse to the
// cell itself, which keeps M f >= |f| exact.
// ---------------------------------------------------------------------------

inline GridFunction hl_maximal(const GridFunction& f, const ShiftedLatticeSet& lattices) {
    const Grid& g = f.grid;
    if (g.dim() != lattices.dim) throw Error("hl_maximal: dimension mismatch");
    const double h = g.spacing();
    GridFunction out(g);
    for (std::int64_t i = 0; i < g.total_cells(); ++i) out.at(i) = std::fabs(f.at(i));

    PrefixSum abs_sum(f, /*absolute=*/true);
    const int p_min = static_cast<int>(std::ceil(std::log2(h)));
    const int p_max = static_cast<int>(std::ceil(std::log2(6.0 * g.box.side))) + 1;
    const std::int64_t n = g.cells_per_axis;

    for (int j = 0; j < lattices.count(); ++j) {
        for (int p = p_min; p <= p_max; ++p) {
            const double w = std::ldexp(1.0, p);
            const double inv_measure = 1.0 / (g.dim() == 1 ? w : w * w);
            // lattice cell index bounds intersecting the box, per axis
            std::array<std::int64_t, 2> cell_lo{0, 0}, cell_hi{0, 0};
            for (int a = 0; a < g.dim(); ++a) {
                const double sh = ShiftedLatticeSet::axis_shift(j, a, p);
                cell_lo[a] = static_cast<std::int64_t>(std::floor(g.box.lo(a) / w - sh));
                cell_hi[a] = static_cast<std::int64_t>(std::floor(g.box.hi(a) / w - sh)) + 1;
            }
            auto axis_cells = [&](int a, std::int64_t idx, std::int64_t& lo,
                                  std::int64_t& hi) {
                const double sh = ShiftedLatticeSet::axis_shift(j, a, p);
                const double qlo = w * (static_cast<double>(idx) + sh);
                lo = std::max<std::int64_t>(
                    0, std::llround((qlo - g.axis_origin(a)) / h));
                hi = std::min<std::int64_t>(
                    n, std::llround((qlo + w - g.axis_origin(a)) / h));
            };
            if (g.dim() == 1) {
                for (std::int64_t ix = cell_lo[0]; ix < cell_hi[0]; ++ix) {
                    CellRange r;
                    r.dim = 1;
                    axis_cells(0, ix, r.lo[0], r.hi[0]);
                    if (r.empty()) continue;
                    const double avg = abs_sum.range_sum(r) * h * inv_measure;
                    for (std::int64_t i = r.lo[0]; i < r.hi[0]; ++i)
                        out.at(i) = std::max(out.at(i), avg);
                }
            } else {
                for (std::int64_t iy = cell_lo[1]; iy < cell_hi[1]; ++iy) {
                    for (std::int64_t ix = cell_lo[0]; ix < cell_hi[0]; ++ix) {
                        CellRange r;
                        r.dim = 2;
                        axis_cells(0, ix, r.lo[0], r.hi[0]);
                        axis_cells(1, iy, r.lo[1], r.hi[1]);
                        if (r.empty()) continue;
                        const double avg =
                            abs_sum.range_sum(r) * h * h * inv_measure;
                        for (std::int64_t cy = r.lo[1]; cy < r.hi[1]; ++cy)
                            for (std::int64_t cx = r.lo[0]; cx < r.hi[0]; ++cx) {
                                double& o = out.at(cy * n + cx);
                                o = std::max(o, avg);
                            }
                    }
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sharp maximal function of a cube-indexed family {f_Q}:
//   m_Q^# f(x) = sup over R in D(Q), x in R, of osc_R(f_Q - f_R),
// with osc = max - min over the cells of R.
// ---------------------------------------------------------------------------

/// Maps tree nodes to grid cell ranges; the root range must split evenly
/// down to max_depth so node cells partition exactly.
struct TreeGridMap {
    DyadicTree tree;
    Grid grid;
    CellRange root_range;

    TreeGridMap() = default;
    TreeGridMap(const DyadicTree& t, const Grid& g) : tree(t), grid(g) {
        root_range = grid.snap(t.root, 1);
        for (int a = 0; a < g.dim(); ++a) {
            const std::int64_t len = root_range.extent(a);
            if (len % (std::int64_t{1} << t.max_depth) != 0)
                throw Error("TreeGridMap: root cells (" + std::to_string(len) +
                            ") not divisible by 2^depth");
        }
    }

    CellRange range_of(const NodeId& id) const {
        CellRange r;
        r.dim = grid.dim();
        for (int a = 0; a < grid.dim(); ++a) {
            const std::int64_t len = root_range.extent(a) >> id.depth;
            r.lo[a] = root_range.lo[a] + id.index[a] * len;
            r.hi[a] = r.lo[a] + len;
        }
        return r;
    }

    /// Row-major offset of a grid cell inside a node's value block.
    std::size_t offset_in(const CellRange& r, std::int64_t flat) const {
        if (grid.dim() == 1) return static_cast<std::size_t>(flat - r.lo[0]);
        const std::int64_t ix = flat % grid.cells_per_axis;
        const std::int64_t iy = flat / grid.cells_per_axis;
        return static_cast<std::size_t>((iy - r.lo[1]) * r.extent(0) + (ix - r.lo[0]));
    }
};

/// Oscillation over node R of (f_P - f_R), given value blocks for both
/// nodes (each row-major over its own range).
inline double node_difference_oscillation(const TreeGridMap& map, const NodeId& r_id,
                                          const CellRange& p_range,
                                          const std::vector<double>& f_p,
                                          const std::vector<double>& f_r) {
    const CellRange r = map.range_of(r_id);
    double mx = -1e300, mn = 1e300;
    std::size_t k = 0;
    detail::for_each_cell(map.grid, r, [&](std::int64_t i) {
        const double d = f_p[map.offset_in(p_range, i)] - f_r[k++];
        mx = std::max(mx, d);
        mn = std::min(mn, d);
    });
    return mx - mn;
}

/// m_Q^# f at a single point; `values_of` supplies the f_R block for any
/// tree node (row-major over range_of(node)).
template <typename ValuesFn>
double sharp_maximal(const TreeGridMap& map, ValuesFn&& values_of,
                     const std::array<double, 2>& x) {
    if (map.tree.max_depth == 0)
        throw DepthExhausted("sharp_maximal needs a tree of positive depth");
    const auto chain = map.tree.chain_containing(x);
    if (chain.empty()) throw CubeOutsideDomain("sharp_maximal: point outside root");
    const CellRange root_range = map.range_of(chain.front());
    // copy: the provider may invalidate references when memoizing new nodes
    const std::vector<double> f_root = values_of(chain.front());
    double best = 0.0;
    for (const NodeId& r_id : chain) {
        const double osc = node_difference_oscillation(map, r_id, root_range, f_root,
                                                       values_of(r_id));
        best = std::max(best, osc);
    }
    return best;
}

/// m_P^# f over every cell of the node `top`, taking the sup over all
/// R in the subtree of `top` (relative family f_top - f_R). Output is
/// row-major over range_of(top).
template <typename ValuesFn>
std::vector<double> sharp_maximal_field(const TreeGridMap& map, const NodeId& top,
                                        ValuesFn&& values_of) {
    const CellRange top_range = map.range_of(top);
    // copy: the provider may invalidate references when memoizing new nodes
    const std::vector<double> f_top = values_of(top);
    std::vector<double> out(static_cast<std::size_t>(top_range.count()), 0.0);

    struct Frame {
        NodeId node;
        double acc;
    };
    std::vector<Frame> stack{{top, 0.0}};
    while (!stack.empty()) {
        Frame fr = stack.back();
        stack.pop_back();
        const double osc = node_difference_oscillation(map, fr.node, top_range, f_top,
                                                       values_of(fr.node));
        const double acc = std::max(fr.acc, osc);
        auto kids = map.tree.node_children(fr.node);
        if (kids.empty()) {
            // write the accumulated chain maximum onto the leaf's cells
            detail::for_each_cell(map.grid, map.range_of(fr.node), [&](std::int64_t i) {
                out[map.offset_in(top_range, i)] = acc;
            });
        } else {
            for (const auto& k : kids) stack.push_back({k, acc});
        }
    }
    return out;
}

}  // namespace oscdom
