#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "oscdom/cube.hpp"
#include "oscdom/errors.hpp"
#include "oscdom/grid.hpp"

namespace oscdom {

// ---------------------------------------------------------------------------
// DyadicTree: the lattice D(Q0) of cubes dyadic with respect to a root,
// addressed by (depth, per-axis index). Nodes are not materialized.
// ---------------------------------------------------------------------------

struct NodeId {
    int depth = 0;
    std::array<std::int64_t, 2> index{0, 0};

    bool operator==(const NodeId&) const = default;

    /// Packed key for memoization (depth <= 28, index < 2^depth each axis).
    std::uint64_t key() const {
        return (static_cast<std::uint64_t>(depth) << 58) |
               (static_cast<std::uint64_t>(index[0]) << 29) |
               static_cast<std::uint64_t>(index[1]);
    }
};

struct DyadicTree {
    Cube root;
    int max_depth = 0;

    DyadicTree() = default;
    DyadicTree(const Cube& r, int depth) : root(r), max_depth(depth) {
        if (depth < 0) throw Error("DyadicTree: negative depth");
    }

    int dim() const { return root.dim; }

    Cube cube_of(const NodeId& id) const {
        const double s = root.side / static_cast<double>(std::int64_t{1} << id.depth);
        Cube q = root;
        q.side = s;
        for (int a = 0; a < dim(); ++a)
            q.center[a] = root.lo(a) + (static_cast<double>(id.index[a]) + 0.5) * s;
        return q;
    }

    std::vector<NodeId> node_children(const NodeId& id) const {
        std::vector<NodeId> out;
        if (id.depth >= max_depth) return out;
        const int count = 1 << dim();
        out.reserve(count);
        for (int m = 0; m < count; ++m) {
            NodeId c;
            c.depth = id.depth + 1;
            for (int a = 0; a < dim(); ++a)
                c.index[a] = 2 * id.index[a] + (m >> a & 1);
            out.push_back(c);
        }
        return out;
    }

    /// The chain of nodes containing a point, from the root downward.
    std::vector<NodeId> chain_containing(const std::array<double, 2>& x) const {
        std::vector<NodeId> out;
        if (!root.contains_point(x)) return out;
        for (int d = 0; d <= max_depth; ++d) {
            const double s = root.side / static_cast<double>(std::int64_t{1} << d);
            NodeId id;
            id.depth = d;
            for (int a = 0; a < dim(); ++a) {
                auto i = static_cast<std::int64_t>(std::floor((x[a] - root.lo(a)) / s));
                id.index[a] = std::clamp<std::int64_t>(i, 0, (std::int64_t{1} << d) - 1);
            }
            out.push_back(id);
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// ShiftedLatticeSet: the 3^n dyadic lattices with per-axis shifts from
// {0, 1/3, 2/3}, sign-alternating across scales so that each family is a
// genuine nested lattice: at scale 2^p the axis-a grid lines sit at
// 2^p (m + (-1)^p t_a/3), m in Z.  Consecutive scales nest because
// 3 * (-1)^p * (t/3) is an integer.
// ---------------------------------------------------------------------------

struct ShiftedLatticeSet {
    int dim = 1;

    explicit ShiftedLatticeSet(int n = 1) : dim(n) {
        if (n < 1 || n > 2) throw DimensionUnsupported("lattices need n in {1,2}");
    }

    int count() const { return dim == 1 ? 3 : 9; }

    /// t (in {0,1,2}) for a lattice index and axis.
    static int shift_digit(int lattice, int axis) {
        return axis == 0 ? lattice % 3 : (lattice / 3) % 3;
    }

    /// Axis offset of the scale-p grid (side 2^p) for a lattice.
    static double axis_shift(int lattice, int axis, int scale_exp) {
        const double sgn = (scale_exp % 2 == 0) ? 1.0 : -1.0;
        return sgn * static_cast<double>(shift_digit(lattice, axis)) / 3.0;
    }

    /// The lattice cube of side 2^p containing x (ties resolved downward).
    Cube cube_at(int lattice, int scale_exp, const std::array<double, 2>& x) const {
        const double w = std::ldexp(1.0, scale_exp);
        Cube q;
        q.dim = dim;
        q.side = w;
        for (int a = 0; a < dim; ++a) {
            const double sh = axis_shift(lattice, a, scale_exp);
            const double i = std::floor(x[a] / w - sh);
            q.center[a] = w * (i + sh + 0.5);
        }
        return q;
    }
};

/// Smallest-scale lattice cube R with q contained in R and
/// side(R) <= 6 side(q): pick the dyadic scale in [3 s, 6 s); an interval of
/// length s <= 2^p/3 avoids the grid lines of at least one of the three
/// shifted axis grids, so a full match exists among the 3^n lattices.
inline std::pair<int, Cube> containing_dyadic(const Cube& q,
                                              const ShiftedLatticeSet& lattices) {
    if (q.dim != lattices.dim)
        throw Error("containing_dyadic: dimension mismatch");
    const int p = static_cast<int>(std::ceil(std::log2(3.0 * q.side) - 1e-12));
    const double w = std::ldexp(1.0, p);
    const double tol = q.tol();
    for (int j = 0; j < lattices.count(); ++j) {
        Cube cand;
        cand.dim = q.dim;
        cand.side = w;
        bool ok = true;
        for (int a = 0; a < q.dim && ok; ++a) {
            const double sh = ShiftedLatticeSet::axis_shift(j, a, p);
            const double i = std::floor(q.lo(a) / w - sh + 1e-12);
            const double lo = w * (i + sh);
            if (q.hi(a) > lo + w + tol) ok = false;
            cand.center[a] = lo + w / 2.0;
        }
        if (ok && cand.contains_cube(q)) return {j, cand};
    }
    throw Error("containing_dyadic: construction invariant violated");
}

// ---------------------------------------------------------------------------
// SparseFamily and the greedy sparseness audit.
// ---------------------------------------------------------------------------

struct SparseEntry {
    Cube cube;
    std::vector<std::int64_t> e_cells;  // disjoint portion, set by the audit
};

struct SparseAudit {
    double achieved_eta = 0.0;        // min over entries of |E_Q| / |Q|
    double achieved_eta_slack = 0.0;  // same with one extra cell granted per cube
    std::size_t worst_entry = 0;
};

struct SparseFamily {
    std::vector<SparseEntry> entries;
    double eta = 0.0;  // target sparseness constant
    bool audited = false;
    SparseAudit audit;
};

/// Greedy disjoint-portion assignment, smallest cubes first. Each cube
/// claims every not-yet-claimed grid cell it covers; achievedEta is the
/// worst claimed fraction relative to the exact cube measure.
inline SparseAudit audit_sparseness(SparseFamily& fam, const Grid& grid) {
    std::vector<std::size_t> order(fam.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const Cube &qa = fam.entries[a].cube, &qb = fam.entries[b].cube;
        if (qa.side != qb.side) return qa.side < qb.side;
        if (qa.center[0] != qb.center[0]) return qa.center[0] < qb.center[0];
        return qa.center[1] < qb.center[1];
    });

    std::vector<char> claimed(static_cast<std::size_t>(grid.total_cells()), 0);
    SparseAudit report;
    report.achieved_eta = fam.entries.empty() ? 1.0 : 1e300;
    report.achieved_eta_slack = report.achieved_eta;

    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        SparseEntry& e = fam.entries[order[pos]];
        CellRange r = grid.snap(e.cube, 2);
        e.e_cells.clear();
        detail::for_each_cell(grid, r, [&](std::int64_t i) {
            if (!claimed[static_cast<std::size_t>(i)]) {
                claimed[static_cast<std::size_t>(i)] = 1;
                e.e_cells.push_back(i);
            }
        });
        const double portion =
            static_cast<double>(e.e_cells.size()) * grid.cell_measure();
        const double eta_q = portion / e.cube.measure();
        const double eta_q_slack =
            (portion + grid.cell_measure()) / e.cube.measure();
        if (eta_q < report.achieved_eta) {
            report.achieved_eta = eta_q;
            report.worst_entry = order[pos];
        }
        report.achieved_eta_slack = std::min(report.achieved_eta_slack, eta_q_slack);
    }
    fam.audited = true;
    fam.audit = report;
    return report;
}

inline nlohmann::json to_json(const SparseFamily& fam) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : fam.entries) entries.push_back(to_json(e.cube));
    nlohmann::json j{{"entries", entries}, {"eta", fam.eta}};
    if (fam.audited) j["achievedEta"] = fam.audit.achieved_eta;
    return j;
}

}  // namespace oscdom
