#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oscdom/corpus.hpp"
#include "oscdom/sparse_engine.hpp"
#include "oscdom/suites.hpp"

using namespace oscdom;

namespace {

GridFunction indicator(const Grid& g, const Cube& q) {
    GridFunction f(g);
    CellRange r = g.snap(q);
    detail::for_each_cell(g, r, [&](std::int64_t i) { f.at(i) = 1.0; });
    f.support_hint = r;
    return f;
}

}  // namespace

TEST_CASE("engine config resolves dimensional defaults") {
    EngineConfig cfg;
    const EngineConfig c1 = cfg.resolved(1);
    CHECK(c1.lambda == Catch::Approx(1.0 / 16.0));
    CHECK(c1.dilation == Catch::Approx(5.0));
    CHECK(c1.target_eta == Catch::Approx(0.1));
    CHECK(c1.max_depth == 8);
    const EngineConfig c2 = cfg.resolved(2);
    CHECK(c2.lambda == Catch::Approx(1.0 / 32.0));
    CHECK(c2.target_eta == Catch::Approx(0.5 / 50.0));

    EngineConfig bad;
    bad.stopping_slack = 0.5;
    CHECK_THROWS_AS(bad.resolved(1), ConfigError);
}

TEST_CASE("local family satisfies its defining identity") {
    Grid g(Cube::interval(-8.0, 8.0), 1024);
    GridFunction f = GridFunction::sample(g, [](Point p) {
        return std::fabs(p[0]) < 1.0 ? std::cos(2.0 * p[0]) + 0.3 : 0.0;
    });
    OperatorSpec T = make_operator("hilbert");
    Applier ap(T, g);
    Cube root = Cube::interval(-1.25, 1.25);
    TreeGridMap map(DyadicTree(root, 3), g);
    LocalFamily fam(f, ap, map, 5.0);

    NodeId node{2, {1, 0}};
    const std::vector<double> got = fam.values(node);

    // reference: T((f - m_f(Q*)) chi_{Q*}) evaluated on Q's cells
    const Cube qstar = dilate(map.tree.cube_of(node), 5.0);
    const double m = median(f, qstar);
    GridFunction shifted(g);
    for (std::int64_t i = 0; i < g.total_cells(); ++i) shifted.at(i) = f.at(i) - m;
    GridFunction arg = restrict_to(shifted, qstar);
    GridFunction ref = ap.apply(arg);
    const CellRange r = map.range_of(node);
    std::size_t k = 0;
    detail::for_each_cell(g, r, [&](std::int64_t i) {
        CHECK(got[k++] == Catch::Approx(ref.at(i)).margin(1e-10));
    });
}

TEST_CASE("local_sparse on the zero function returns only the root") {
    Grid g(Cube::interval(-8.0, 8.0), 512);
    GridFunction zero(g);
    OperatorSpec T = make_operator("hilbert");
    Applier ap(T, g);
    TreeGridMap map(DyadicTree(Cube::interval(-1.0, 1.0), 3), g);
    LocalFamily fam(zero, ap, map, 5.0);
    EngineConfig cfg;
    const LocalSparseResult res = local_sparse(fam, cfg);
    REQUIRE(res.entries.size() == 1);
    CHECK(res.entries[0].alpha == 0.0);
    CHECK(res.entries[0].node.depth == 0);
    CHECK_FALSE(res.incomplete);
    CHECK(res.pointwise_constant == 0.0);
}

TEST_CASE("local_sparse: constant f gives a vanishing family function") {
    Grid g(Cube::interval(-8.0, 8.0), 512);
    GridFunction c = GridFunction::sample(g, [](Point) { return 2.0; });
    OperatorSpec T = make_operator("diag:one");
    Applier ap(T, g);
    TreeGridMap map(DyadicTree(Cube::interval(-1.0, 1.0), 2), g);
    LocalFamily fam(c, ap, map, 5.0);
    for (double v : fam.values(NodeId{})) CHECK(v == 0.0);
}

TEST_CASE("local_sparse: small support means the root family function is Tf") {
    Grid g(Cube::interval(-16.0, 16.0), 2048);
    GridFunction f = indicator(g, Cube::interval(-1.0, 1.0));
    OperatorSpec T = make_operator("hilbert");
    Applier ap(T, g);
    // |supp f| = 2 < (1/2)|Q0*| with Q0 = [-1.25, 1.25], Q0* 12.5 wide
    Cube root = Cube::interval(-1.25, 1.25);
    TreeGridMap map(DyadicTree(root, 3), g);
    LocalFamily fam(f, ap, map, 5.0);
    CHECK(fam.median_star(NodeId{}) == 0.0);

    GridFunction tf = ap.apply(f);
    const std::vector<double> root_vals = fam.values(NodeId{});
    const CellRange r = map.range_of(NodeId{});
    std::size_t k = 0;
    detail::for_each_cell(g, r, [&](std::int64_t i) {
        CHECK(root_vals[k++] == Catch::Approx(tf.at(i)).margin(1e-10));
    });
}

TEST_CASE("local_sparse emits a half-sparse family with a finite constant") {
    Grid g(Cube::interval(-16.0, 16.0), 2048);
    GridFunction f = GridFunction::sample(g, [](Point p) {
        using namespace corpus_detail;
        return bump(p[0], 0.0, 1.0) + 0.6 * bump(p[0], 0.4, 0.3);
    });
    f.support_hint = g.snap(Cube::interval(-1.0, 1.0), 1, true);
    OperatorSpec T = make_operator("hilbert");
    Applier ap(T, g);
    TreeGridMap map(DyadicTree(Cube::interval(-1.25, 1.25), 5), g);
    LocalFamily fam(f, ap, map, 5.0);
    EngineConfig cfg;
    const LocalSparseResult res = local_sparse(fam, cfg);

    REQUIRE(!res.entries.empty());
    CHECK(std::isfinite(res.pointwise_constant));

    SparseFamily undilated;
    undilated.eta = 0.5;
    for (const LocalEntry& e : res.entries) undilated.entries.push_back({e.cube, {}});
    const SparseAudit audit = audit_sparseness(undilated, g);
    CHECK(audit.achieved_eta_slack >= 0.5 - 1e-12);
}

TEST_CASE("assemble_global: ring partition counts and audited eta") {
    EngineConfig cfg;
    cfg.rings = 2;
    CorpusMember m = plateau_member();
    const MrLayout lay = mr_layout(m, 1024, cfg);
    const GridFunction f = sample_member(m, lay.grid);
    OperatorSpec T = make_operator("hilbert");
    const GlobalFamily G = assemble_global(f, T, cfg, lay.S);

    CHECK(G.trees.size() == 1 + 2 * 2);  // S plus 2 cubes per ring in 1d
    CHECK(G.family.audited);
    CHECK(G.family.audit.achieved_eta_slack >= 0.1 - 1e-12);
    CHECK(G.covered.side == Catch::Approx(9.0 * lay.S.side));
    CHECK(G.tail_bound <= G.tail_tol_abs);
    CHECK(std::isfinite(G.pointwise_constant));

    SECTION("domination report on the oscillation bound") {
        const DominationReport rep =
            domination_report(T, f, G, BoundKind::oscillation, "unit");
        CHECK(rep.violation_fraction <= 0.01);
        CHECK(std::isfinite(rep.best_constant));
        CHECK(rep.best_constant > 0.0);
    }
    SECTION("unaudited families are rejected") {
        GlobalFamily bad = G;
        bad.family.audited = false;
        CHECK_THROWS_AS(domination_report(T, f, bad, BoundKind::oscillation, ""),
                        UnauditedFamily);
    }
}

TEST_CASE("assemble_global rejects functions that leak outside S") {
    EngineConfig cfg;
    CorpusMember m = plateau_member();
    const MrLayout lay = mr_layout(m, 1024, cfg);
    GridFunction f = sample_member(m, lay.grid);
    f.values.front() = 1.0;  // poke a value far outside S
    CHECK_THROWS_AS(assemble_global(f, make_operator("hilbert"), cfg, lay.S),
                    SupportNotContained);
}

TEST_CASE("assemble_global on the zero function yields zero bounds") {
    EngineConfig cfg;
    CorpusMember m = plateau_member();
    const MrLayout lay = mr_layout(m, 1024, cfg);
    GridFunction zero(lay.grid);
    OperatorSpec T = make_operator("hilbert");
    const GlobalFamily G = assemble_global(zero, T, cfg, lay.S);
    const DominationReport rep = domination_report(T, zero, G, BoundKind::oscillation, "");
    CHECK(rep.best_constant == 0.0);
    CHECK(rep.violations.empty());
}

TEST_CASE("bound evaluators: empty, single cube, nested pair") {
    Grid g(Cube::interval(0.0, 1.0), 128);
    GridFunction f = GridFunction::sample(g, [](Point p) { return p[0] < 0.5 ? 1.0 : 0.0; });

    SparseFamily empty;
    CHECK(eval_oscillation_bound(empty, f, {0.3, 0.0}) == 0.0);
    CHECK(eval_average_bound(empty, f, {0.3, 0.0}) == 0.0);

    SparseFamily one;
    one.entries.push_back({Cube::interval(0.0, 1.0), {}});
    const double omega = mean_oscillation(f, Cube::interval(0.0, 1.0));
    CHECK(eval_oscillation_bound(one, f, {0.3, 0.0}) == Catch::Approx(omega));
    CHECK(eval_oscillation_bound(one, f, {1.3, 0.0}) == 0.0);
    CHECK(eval_average_bound(one, f, {0.3, 0.0}) == Catch::Approx(0.5));

    SparseFamily nested = one;
    nested.entries.push_back({Cube::interval(0.25, 0.75), {}});
    const double inner = mean_oscillation(f, Cube::interval(0.25, 0.75));
    CHECK(eval_oscillation_bound(nested, f, {0.5 - 1e-3, 0.0}) ==
          Catch::Approx(omega + inner));

    GridFunction field = eval_sparse_bound(nested, f, BoundKind::oscillation);
    for (std::int64_t i = 0; i < g.total_cells(); ++i) {
        const Point x = g.cell_center(i);
        CHECK(field.at(i) == Catch::Approx(eval_oscillation_bound(nested, f, x)));
    }
}

TEST_CASE("same-family oscillation bound never exceeds twice the average bound") {
    EngineConfig cfg;
    CorpusMember m = plateau_member();
    const MrLayout lay = mr_layout(m, 2048, cfg);
    const GridFunction f = sample_member(m, lay.grid);
    OperatorSpec T = make_operator("hilbert");
    const GlobalFamily G = assemble_global(f, T, cfg, lay.S);
    const GridFunction osc = eval_sparse_bound(G.family, f, BoundKind::oscillation);
    const GridFunction avg = eval_sparse_bound(G.family, f, BoundKind::average);
    double scale = 0.0;
    for (double v : avg.values) scale = std::max(scale, v);
    for (std::int64_t i = 0; i < lay.grid.total_cells(); ++i)
        CHECK(osc.at(i) <= 2.0 * avg.at(i) + 1e-12 * scale);
}

TEST_CASE("planar engine smoke test") {
    EngineConfig cfg;
    cfg.rings = 1;
    cfg.max_depth = 2;
    CorpusMember m = corpus_2d(1)[0];
    const MrLayout lay = mr_layout(m, 192, cfg);
    const GridFunction f = sample_member(m, lay.grid);
    OperatorSpec T = make_operator("riesz1");
    const GlobalFamily G = assemble_global(f, T, cfg, lay.S);
    CHECK(G.trees.size() == 1 + 8);  // 3^2 - 1 cubes per ring
    CHECK(G.family.audited);
    CHECK(G.family.audit.achieved_eta_slack >= cfg.resolved(2).target_eta - 1e-12);
    const DominationReport rep = domination_report(T, f, G, BoundKind::oscillation, "");
    CHECK(std::isfinite(rep.best_constant));
    CHECK(rep.violation_fraction <= 0.01);
}
