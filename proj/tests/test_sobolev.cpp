#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oscdom/corpus.hpp"
#include "oscdom/rng.hpp"
#include "oscdom/sobolev.hpp"

using namespace oscdom;

TEST_CASE("riesz potential: dimension guard, zero, monotone") {
    Grid g1(Cube::interval(0.0, 1.0), 32);
    CHECK_THROWS_AS(riesz_potential(GridFunction(g1)), DimensionUnsupported);

    Grid g(Cube::square(0.0, 0.0, 2.0), 32);
    GridFunction zero(g);
    const GridFunction pz = riesz_potential(zero);
    for (double v : pz.values) CHECK(v == Catch::Approx(0.0).margin(1e-14));

    RngStream rng(2, "riesz-monotone");
    GridFunction a = GridFunction::sample(g, [&](Point) { return rng.uniform(0.0, 1.0); });
    GridFunction b = a;
    for (double& v : b.values) v += 0.25;
    const GridFunction pa = riesz_potential(a);
    const GridFunction pb = riesz_potential(b);
    for (std::size_t i = 0; i < pa.values.size(); ++i)
        CHECK(pa.values[i] <= pb.values[i] + 1e-10);
}

TEST_CASE("riesz potential transform path matches the direct loop") {
    Grid g(Cube::square(0.0, 0.0, 2.0), 32);
    RngStream rng(7, "riesz-oracle");
    GridFunction f = GridFunction::sample(g, [&](Point) { return rng.uniform(-1.0, 1.0); });
    const GridFunction fast = riesz_potential(f);
    const GridFunction slow = riesz_potential_direct(f);
    double scale = 0.0;
    for (double v : slow.values) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < fast.values.size(); ++i)
        CHECK(std::fabs(fast.values[i] - slow.values[i]) <= 1e-6 * scale);
}

TEST_CASE("riesz potential of the unit ball at the origin") {
    Grid g(Cube::square(0.0, 0.0, 3.0), 256);
    GridFunction chi = GridFunction::sample(g, [](Point p) {
        return std::hypot(p[0], p[1]) <= 1.0 ? 1.0 : 0.0;
    });
    const GridFunction pot = riesz_potential(chi);
    const std::int64_t n = g.cells_per_axis;
    const double center = (pot.at(n / 2 * n + n / 2) + pot.at(n / 2 * n + n / 2 - 1) +
                           pot.at((n / 2 - 1) * n + n / 2) +
                           pot.at((n / 2 - 1) * n + n / 2 - 1)) /
                          4.0;
    CHECK(center == Catch::Approx(2.0 * M_PI).margin(2e-2));
}

TEST_CASE("poincare check: linear profile and zero-gradient skip") {
    Grid g(Cube::square(0.5, 0.5, 1.0), 64);
    GridFunction lin = GridFunction::sample(g, [](Point p) { return p[0]; });
    const PoincareReport rep = poincare_check(lin, {Cube::square(0.5, 0.5, 1.0)});
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.max_constant == Catch::Approx(0.25).margin(5e-3));

    GridFunction flat = GridFunction::sample(g, [](Point) { return 3.0; });
    const PoincareReport skip = poincare_check(flat, {Cube::square(0.5, 0.5, 1.0)});
    CHECK(skip.skipped == 1);
    CHECK(skip.rows[0].skipped);
}

TEST_CASE("dyadic riesz sum: zero function and homogeneity") {
    Grid g(Cube::square(0.0, 0.0, 4.0), 64);
    ShiftedLatticeSet lat(2);
    GridFunction zero(g);
    const GridFunction pz = riesz_potential(zero);
    const auto [l0, r0] = dyadic_riesz_bound(zero, lat, 0, {0.1, -0.2}, pz);
    CHECK(l0 == 0.0);
    CHECK(r0 == Catch::Approx(0.0).margin(1e-14));

    GridFunction ball = GridFunction::sample(g, [](Point p) {
        return std::hypot(p[0], p[1]) <= 1.0 ? 1.0 : 0.0;
    });
    GridFunction twice = ball;
    for (double& v : twice.values) v *= 2.0;
    PrefixSum s1(ball), s2(twice);
    for (int j : {0, 4, 8}) {
        const double a = dyadic_riesz_lhs(ball, s1, lat, j, {0.3, 0.4});
        const double b = dyadic_riesz_lhs(twice, s2, lat, j, {0.3, 0.4});
        CHECK(b == Catch::Approx(2.0 * a).epsilon(1e-12));
    }
}

TEST_CASE("dyadic riesz sum is controlled by the potential") {
    Grid g(Cube::square(0.0, 0.0, 4.8), 128);
    ShiftedLatticeSet lat(2);
    GridFunction ball = GridFunction::sample(g, [](Point p) {
        return std::hypot(p[0], p[1]) <= 1.0 ? 1.0 : 0.0;
    });
    const GridFunction pot = riesz_potential(ball);
    PrefixSum sums(ball);
    RngStream rng(11, "cum-unit");
    double worst = 0.0;
    for (int k = 0; k < 25; ++k) {
        const Point x{rng.uniform(-1.4, 1.4), rng.uniform(-1.4, 1.4)};
        for (int j : {0, 4, 8}) {
            const auto [lhs, rhs] = dyadic_riesz_bound(ball, lat, j, x, pot);
            REQUIRE(rhs > 0.0);
            worst = std::max(worst, lhs / rhs);
        }
    }
    CHECK(std::isfinite(worst));
    CHECK(worst < 20.0);  // dimensional constant, recorded not asserted tightly
}

TEST_CASE("sobolev_check: zero function, diagonal operator, riesz transform") {
    Grid g(Cube::square(0.0, 0.0, 4.8), 96);
    GridFunction zero(g);
    const SobolevReport rz = sobolev_check(make_operator("diag:one"), zero);
    CHECK(rz.best_constant == 0.0);

    const CorpusMember m = corpus_2d(1)[0];
    const GridFunction f = sample_member(m, g);
    const SobolevReport rd = sobolev_check(make_operator("diag:one"), f);
    CHECK(rd.best_constant > 0.0);
    CHECK(rd.best_constant < 1.0);  // classical constant is 1/(2 pi)
    CHECK(rd.violation_fraction == 0.0);

    const SobolevReport rr = sobolev_check(make_operator("riesz1"), f);
    CHECK(std::isfinite(rr.best_constant));
    CHECK(rr.best_constant > 0.0);
    CHECK(rr.violation_fraction == 0.0);

    Grid g1(Cube::interval(0.0, 1.0), 32);
    CHECK_THROWS_AS(sobolev_check(make_operator("hilbert"), GridFunction(g1)),
                    DimensionUnsupported);
}

TEST_CASE("necessity probe premise: I_1 |grad theta_R| is R-uniform") {
    ProbeConfig probe;
    probe.cells_2d = 96;
    probe.radii = {10.0, 20.0, 40.0};
    const NecessityReport rep = necessity_probe(make_operator("riesz1"), probe);
    CHECK(rep.premise_uniform);
    CHECK(rep.consistent);
    REQUIRE(rep.premise_sups.size() == 3);
    for (const auto& [R, sup] : rep.premise_sups) {
        CHECK(sup > 0.0);
        CHECK(sup == Catch::Approx(rep.premise_sups.front().second).epsilon(0.10));
    }
}
