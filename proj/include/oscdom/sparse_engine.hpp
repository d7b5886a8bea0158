#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "oscdom/czo.hpp"
#include "oscdom/dyadic.hpp"
#include "oscdom/errors.hpp"
#include "oscdom/grid.hpp"
#include "oscdom/kernels.hpp"
#include "oscdom/local_stats.hpp"

namespace oscdom {

// ---------------------------------------------------------------------------
// Engine configuration. Zero-valued fields resolve to the dimensional
// defaults: lambda_n = 2^{-n-3}, dilation 5 sqrt(n), target sparseness
// 1 / (2 (5 sqrt n)^n).
// ---------------------------------------------------------------------------

struct EngineConfig {
    double lambda = 0.0;
    double dilation = 0.0;
    double target_eta = 0.0;
    int max_depth = 0;  // dyadic tree depth and recursion round budget
    double selection_fraction = 0.5;
    double stopping_slack = 1.0;  // C1 multiplier on alpha_P
    int rings = 2;
    double tail_tol_rel = 0.15;

    EngineConfig resolved(int dim) const {
        EngineConfig c = *this;
        if (c.lambda == 0.0) c.lambda = std::ldexp(1.0, -dim - 3);
        if (c.dilation == 0.0) c.dilation = star_factor(dim);
        if (c.target_eta == 0.0)
            c.target_eta = 0.5 / std::pow(c.dilation, static_cast<double>(dim));
        if (c.max_depth == 0) c.max_depth = dim == 1 ? 8 : 6;
        if (!(c.lambda > 0.0 && c.lambda < 1.0)) throw ConfigError("lambda out of (0,1)");
        if (c.max_depth < 1) throw ConfigError("maxDepth must be >= 1");
        if (c.stopping_slack < 1.0) throw ConfigError("stopping slack C1 must be >= 1");
        return c;
    }
};

// ---------------------------------------------------------------------------
// LocalFamily: the assignment Q -> f_Q = T((f - m_f(Q*)) chi_{Q*}),
// memoized per tree node, each block holding f_Q on Q's own cells.
// ---------------------------------------------------------------------------

class LocalFamily {
public:
    LocalFamily(const GridFunction& f, const Applier& applier, const TreeGridMap& map,
                double dilation)
        : f_(&f), applier_(&applier), map_(map), dilation_(dilation) {
        try {
            map_.grid.snap(star(map_.tree.root));
        } catch (const CubeOutsideDomain&) {
            throw DomainTooSmall("root dilation exceeds the computation box");
        }
    }

    const TreeGridMap& map() const { return map_; }

    Cube cube_star(const NodeId& id) const {
        return dilate(map_.tree.cube_of(id), dilation_);
    }

    double median_star(const NodeId& id) {
        auto it = median_memo_.find(id.key());
        if (it != median_memo_.end()) return it->second;
        const CellRange r = map_.grid.snap(cube_star(id));
        const double m = detail::lower_median(detail::cell_values(*f_, r));
        median_memo_.emplace(id.key(), m);
        return m;
    }

    /// f_Q on Q's cells (row-major block).
    const std::vector<double>& values(const NodeId& id) {
        auto it = memo_.find(id.key());
        if (it != memo_.end()) return it->second;
        const CellRange star_range = map_.grid.snap(cube_star(id));
        const double m = median_star(id);
        GridFunction g(map_.grid);
        detail::for_each_cell(map_.grid, star_range,
                              [&](std::int64_t i) { g.at(i) = f_->at(i) - m; });
        g.support_hint = star_range;
        std::vector<double> block =
            applier_->apply_on(g, star_range, map_.range_of(id));
        return memo_.emplace(id.key(), std::move(block)).first->second;
    }

private:
    const GridFunction* f_;
    const Applier* applier_;
    TreeGridMap map_;
    double dilation_;
    std::unordered_map<std::uint64_t, std::vector<double>> memo_;
    std::unordered_map<std::uint64_t, double> median_memo_;
};

// ---------------------------------------------------------------------------
// Theorem-opfr stopping construction inside one dyadic tree.
// ---------------------------------------------------------------------------

struct LocalEntry {
    NodeId node;
    Cube cube;  // undilated P
    double alpha = 0.0;
    double alpha_values = 0.0;  // (f_P chi_P)*(lambda |P|)
    double alpha_sharp = 0.0;   // (m_P^# f)*(lambda |P|)
    int round = 0;
    std::vector<double> sharp_field;  // m_P^# f over P's cells
};

struct LocalSparseResult {
    std::vector<LocalEntry> entries;
    bool incomplete = false;
    /// max over root cells of |f_{Q0}(x)| / sum_P alpha_P chi_P(x)
    double pointwise_constant = 0.0;
};

inline LocalSparseResult local_sparse(LocalFamily& fam, const EngineConfig& raw_cfg) {
    const TreeGridMap& map = fam.map();
    const Grid& grid = map.grid;
    const EngineConfig cfg = raw_cfg.resolved(grid.dim());
    LocalSparseResult res;

    struct Pending {
        NodeId node;
        int round;
    };
    std::vector<Pending> queue{{NodeId{}, 0}};

    while (!queue.empty()) {
        const Pending cur = queue.back();
        queue.pop_back();
        const NodeId P = cur.node;
        const CellRange p_range = map.range_of(P);
        const auto p_cells = p_range.count();

        // copies: the memo may rehash while the subtree fills in
        const std::vector<double> f_p = fam.values(P);
        std::vector<double> sharp = sharp_maximal_field(
            map, P, [&fam](const NodeId& id) -> const std::vector<double>& {
                return fam.values(id);
            });

        std::vector<double> abs_fp(f_p.size());
        for (std::size_t i = 0; i < f_p.size(); ++i) abs_fp[i] = std::fabs(f_p[i]);
        const double a_val = detail::rearrangement_level(abs_fp, cfg.lambda);
        const double a_sharp = detail::rearrangement_level(sharp, cfg.lambda);
        const double alpha = a_val + a_sharp;
        const double threshold = cfg.stopping_slack * alpha;

        // exceptional set E inside P; by the choice of the rearrangement
        // levels |E| <= 2 floor(lambda |P|)
        std::vector<char> exceptional(f_p.size(), 0);
        std::int64_t e_count = 0;
        for (std::size_t i = 0; i < f_p.size(); ++i) {
            if (abs_fp[i] > threshold || sharp[i] > threshold) {
                exceptional[i] = 1;
                ++e_count;
            }
        }
        const auto lambda_cells = static_cast<std::int64_t>(
            std::floor(cfg.lambda * static_cast<double>(p_cells) + 1e-9));
        if (e_count > 2 * lambda_cells)
            throw Error("local_sparse: exceptional set exceeds 2 lambda |P|");

        LocalEntry entry{P, map.tree.cube_of(P), alpha, a_val, a_sharp, cur.round,
                         std::move(sharp)};
        res.entries.push_back(std::move(entry));

        if (e_count == 0) continue;

        // maximal dyadic R strictly below P with |R cap E| > 1/2 |R|
        auto count_in = [&](const CellRange& r) {
            std::int64_t c = 0;
            detail::for_each_cell(grid, r, [&](std::int64_t i) {
                c += exceptional[map.offset_in(p_range, i)];
            });
            return c;
        };
        std::vector<NodeId> selected;
        std::vector<NodeId> walk = map.tree.node_children(P);
        std::int64_t selected_cells = 0;
        while (!walk.empty()) {
            const NodeId R = walk.back();
            walk.pop_back();
            const CellRange r_range = map.range_of(R);
            const std::int64_t cnt = count_in(r_range);
            if (cnt == 0) continue;
            if (2 * cnt > r_range.count()) {
                selected.push_back(R);
                selected_cells += r_range.count();
            } else {
                for (const NodeId& c : map.tree.node_children(R)) walk.push_back(c);
            }
        }
        if (selected_cells > 4 * lambda_cells)
            throw Error("local_sparse: selection exceeds the measure budget");

        if (selected.empty()) continue;
        if (cur.round + 1 > cfg.max_depth) {
            res.incomplete = true;  // budget exhausted with a live selection
            continue;
        }
        // deterministic order: sort by node address
        std::sort(selected.begin(), selected.end(), [](const NodeId& a, const NodeId& b) {
            if (a.depth != b.depth) return a.depth < b.depth;
            if (a.index[0] != b.index[0]) return a.index[0] < b.index[0];
            return a.index[1] < b.index[1];
        });
        for (const NodeId& R : selected) queue.push_back({R, cur.round + 1});
    }

    // pointwise audit: |f_{Q0}| against sum alpha_P chi_P on the root block
    const CellRange root_range = map.range_of(NodeId{});
    const std::vector<double> f_root = fam.values(NodeId{});
    std::vector<double> bound(f_root.size(), 0.0);
    for (const LocalEntry& e : res.entries) {
        const CellRange r = map.range_of(e.node);
        detail::for_each_cell(grid, r, [&](std::int64_t i) {
            bound[map.offset_in(root_range, i)] += e.alpha;
        });
    }
    for (std::size_t i = 0; i < f_root.size(); ++i)
        if (bound[i] > 0.0)
            res.pointwise_constant =
                std::max(res.pointwise_constant, std::fabs(f_root[i]) / bound[i]);
    return res;
}

// ---------------------------------------------------------------------------
// Global assembly over the ring partition: S, then rings of 3^k S \ 3^{k-1} S
// covered by 3^n - 1 congruent cubes each; every piece gets the local
// construction and the final family is the dilated union {P*}.
// ---------------------------------------------------------------------------

struct TreeResult {
    Cube root;  // partition cube Q_j
    int depth = 0;
    LocalSparseResult local;
};

struct GlobalFamily {
    SparseFamily family;  // dilated cubes, audited
    std::vector<std::pair<int, int>> origin;  // entry -> (tree, local entry)
    std::vector<TreeResult> trees;
    Cube covered;            // 3^rings S
    double tail_bound = 0.0;  // analytic sup |Tf| outside covered
    double tail_tol_abs = 0.0;
    double max_abs_tf = 0.0;
    bool incomplete = false;
    double pointwise_constant = 0.0;  // worst over trees
};

namespace detail {

inline std::vector<Cube> ring_partition(const Cube& S, int rings) {
    std::vector<Cube> cubes{S};
    for (int k = 1; k <= rings; ++k) {
        const double w = std::pow(3.0, k - 1) * S.side;
        if (S.dim == 1) {
            for (double sgn : {-1.0, 1.0}) {
                Cube q = S;
                q.side = w;
                q.center[0] = S.center[0] + sgn * w;
                cubes.push_back(q);
            }
        } else {
            for (int jy = -1; jy <= 1; ++jy)
                for (int jx = -1; jx <= 1; ++jx) {
                    if (jx == 0 && jy == 0) continue;
                    Cube q = S;
                    q.side = w;
                    q.center[0] = S.center[0] + jx * w;
                    q.center[1] = S.center[1] + jy * w;
                    cubes.push_back(q);
                }
        }
    }
    return cubes;
}

inline int tree_depth_for(const CellRange& range, int requested) {
    int depth = requested;
    for (int a = 0; a < range.dim; ++a) {
        const std::int64_t len = range.extent(a);
        int by_parity = 0;
        while (by_parity < depth && (len >> by_parity) % 2 == 0 &&
               (len >> (by_parity + 1)) >= 4)
            ++by_parity;
        depth = std::min(depth, by_parity);
    }
    return depth;
}

}  // namespace detail

inline GlobalFamily assemble_global(const GridFunction& f, const OperatorSpec& T,
                                    const EngineConfig& raw_cfg, const Cube& S) {
    const Grid& grid = f.grid;
    const EngineConfig cfg = raw_cfg.resolved(grid.dim());
    if (cfg.rings < 1) throw ConfigError("ringCount must be >= 1");

    // support containment in S, checked cell by cell
    const CellRange s_range = grid.snap(S);
    for (std::int64_t i = 0; i < grid.total_cells(); ++i) {
        if (f.at(i) == 0.0) continue;
        const Point p = grid.cell_center(i);
        if (!S.contains_point(p))
            throw SupportNotContained("f does not vanish outside S");
    }

    GlobalFamily out;
    out.covered = dilate(S, std::pow(3.0, cfg.rings));

    Applier applier(T, grid);
    const GridFunction tf = applier.apply(f);
    for (double v : tf.values) out.max_abs_tf = std::max(out.max_abs_tf, std::fabs(v));

    std::int64_t support_cells = 0;
    double l1_norm = 0.0;
    for (double v : f.values) {
        if (v != 0.0) ++support_cells;
        l1_norm += std::fabs(v);
    }
    l1_norm *= grid.cell_measure();

    for (const Cube& q : detail::ring_partition(S, cfg.rings)) {
        const Cube qstar = dilate(q, cfg.dilation);
        // paper-side partition checks
        if (!dilate(q, 3.0).contains_cube(S) || !qstar.contains_cube(dilate(q, 3.0)))
            throw Error("assemble_global: ring cube fails S in 3Q in Q*");
        CellRange star_range;
        try {
            star_range = grid.snap(qstar);
        } catch (const CubeOutsideDomain&) {
            throw DomainTooSmall("ring cube dilation exceeds the computation box; "
                                 "shrink ringCount or enlarge the grid");
        }
        if (2 * support_cells >= star_range.count())
            throw SupportNotContained("|supp f| must be < 1/2 |Q_j*|");
        {
            const double m = detail::lower_median(detail::cell_values(f, star_range));
            if (m != 0.0) throw Error("assemble_global: median over Q_j* is not 0");
        }

        const CellRange q_range = grid.snap(q);
        const int depth = detail::tree_depth_for(q_range, cfg.max_depth);
        if (depth < 1) throw CubeBelowResolution("partition cube too coarse for a tree");
        TreeGridMap map(DyadicTree(q, depth), grid);
        LocalFamily fam(f, applier, map, cfg.dilation);
        TreeResult tr{q, depth, local_sparse(fam, cfg)};
        out.incomplete = out.incomplete || tr.local.incomplete;
        out.pointwise_constant =
            std::max(out.pointwise_constant, tr.local.pointwise_constant);
        out.trees.push_back(std::move(tr));
    }

    // emitted family: every selected cube replaced by its dilation
    out.family.eta = cfg.target_eta;
    for (int t = 0; t < static_cast<int>(out.trees.size()); ++t) {
        const auto& entries = out.trees[static_cast<std::size_t>(t)].local.entries;
        for (int e = 0; e < static_cast<int>(entries.size()); ++e) {
            out.family.entries.push_back(
                {dilate(entries[static_cast<std::size_t>(e)].cube, cfg.dilation), {}});
            out.origin.emplace_back(t, e);
        }
    }
    audit_sparseness(out.family, grid);

    // truncation audit: outside the covered region the kernel tail bounds
    // |Tf| by C_K ||f||_1 / dist^n
    if (T.kernel) {
        const double dist = (out.covered.side - S.side) / 2.0;
        out.tail_bound = T.kernel->size_constant * l1_norm /
                         std::pow(dist, static_cast<double>(grid.dim()));
    }
    out.tail_tol_abs = cfg.tail_tol_rel * out.max_abs_tf;
    if (out.tail_bound > out.tail_tol_abs)
        throw RingBudgetExceeded("tail bound " + std::to_string(out.tail_bound) +
                                 " exceeds tolerance " + std::to_string(out.tail_tol_abs));
    (void)s_range;
    return out;
}

// ---------------------------------------------------------------------------
// Sparse bound evaluation and the domination report.
// ---------------------------------------------------------------------------

enum class BoundKind { oscillation, average };

inline GridFunction eval_sparse_bound(const SparseFamily& S, const GridFunction& f,
                                      BoundKind kind) {
    GridFunction bound(f.grid);
    GridFunction absf(f.grid);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        absf.values[i] = std::fabs(f.values[i]);
    for (const SparseEntry& e : S.entries) {
        const double stat = kind == BoundKind::oscillation
                                ? mean_oscillation(f, e.cube)
                                : average(absf, e.cube);
        const CellRange r = f.grid.snap(e.cube);
        detail::for_each_cell(f.grid, r, [&](std::int64_t i) { bound.at(i) += stat; });
    }
    return bound;
}

inline double eval_oscillation_bound(const SparseFamily& S, const GridFunction& f,
                                     const Point& x) {
    double total = 0.0;
    for (const SparseEntry& e : S.entries)
        if (e.cube.contains_point(x)) total += mean_oscillation(f, e.cube);
    return total;
}

inline double eval_average_bound(const SparseFamily& S, const GridFunction& f,
                                 const Point& x) {
    GridFunction absf(f.grid);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        absf.values[i] = std::fabs(f.values[i]);
    double total = 0.0;
    for (const SparseEntry& e : S.entries)
        if (e.cube.contains_point(x)) total += average(absf, e.cube);
    return total;
}

struct DominationReport {
    BoundKind kind = BoundKind::oscillation;
    std::string refinement_tag;
    double best_constant = 0.0;
    std::int64_t evaluated_cells = 0;
    std::vector<std::int64_t> violations;  // cells with zero bound but |Tf| > tol
    double violation_fraction = 0.0;
    GridFunction tf;
    GridFunction bound;
};

inline DominationReport domination_report(const OperatorSpec& T, const GridFunction& f,
                                          const GlobalFamily& G, BoundKind kind,
                                          const std::string& tag = "") {
    if (!G.family.audited) throw UnauditedFamily("audit the family before reporting");
    DominationReport rep;
    rep.kind = kind;
    rep.refinement_tag = tag;
    rep.tf = apply(T, f);
    rep.bound = eval_sparse_bound(G.family, f, kind);

    double max_tf = 0.0;
    for (double v : rep.tf.values) max_tf = std::max(max_tf, std::fabs(v));
    const double zero_tol = 1e-8 * max_tf;

    const CellRange covered = f.grid.snap(G.covered, 1, /*clip=*/true);
    detail::for_each_cell(f.grid, covered, [&](std::int64_t i) {
        ++rep.evaluated_cells;
        const double b = rep.bound.at(i);
        const double t = std::fabs(rep.tf.at(i));
        if (b > 0.0)
            rep.best_constant = std::max(rep.best_constant, t / b);
        else if (t > zero_tol)
            rep.violations.push_back(i);
    });
    rep.violation_fraction =
        rep.evaluated_cells == 0
            ? 0.0
            : static_cast<double>(rep.violations.size()) /
                  static_cast<double>(rep.evaluated_cells);
    return rep;
}

/// Proof-chain check: m_P^# f <= C * M((f - m_f(P*)) chi_{P*}) cellwise,
/// with one constant over all selected cubes of the family.
inline double sharp_maximal_domination_constant(const GridFunction& f,
                                                const GlobalFamily& G,
                                                const EngineConfig& raw_cfg,
                                                const ShiftedLatticeSet& lattices) {
    const Grid& grid = f.grid;
    const EngineConfig cfg = raw_cfg.resolved(grid.dim());
    double worst = 0.0;
    for (const TreeResult& tr : G.trees) {
        TreeGridMap map(DyadicTree(tr.root, tr.depth), grid);
        for (const LocalEntry& e : tr.local.entries) {
            if (e.sharp_field.empty()) continue;
            const Cube pstar = dilate(e.cube, cfg.dilation);
            const CellRange star_range = grid.snap(pstar);
            const double m = detail::lower_median(detail::cell_values(f, star_range));
            GridFunction g(grid);
            detail::for_each_cell(grid, star_range,
                                  [&](std::int64_t i) { g.at(i) = f.at(i) - m; });
            g.support_hint = star_range;
            const GridFunction M = hl_maximal(g, lattices);
            const CellRange p_range = map.range_of(e.node);
            std::size_t k = 0;
            double local_max = 0.0;
            detail::for_each_cell(grid, p_range, [&](std::int64_t i) {
                const double denom = M.at(i);
                const double num = e.sharp_field[k++];
                if (denom > 1e-14) local_max = std::max(local_max, num / denom);
            });
            worst = std::max(worst, local_max);
        }
    }
    return worst;
}

}  // namespace oscdom
