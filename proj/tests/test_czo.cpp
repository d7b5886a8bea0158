#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oscdom/czo.hpp"
#include "oscdom/rng.hpp"

using namespace oscdom;

namespace {

GridFunction box_indicator(const Grid& g, const Cube& q) {
    GridFunction f(g);
    CellRange r = g.snap(q);
    detail::for_each_cell(g, r, [&](std::int64_t i) { f.at(i) = 1.0; });
    f.support_hint = r;
    return f;
}

/// Midpoint quadrature oracle for box integrals of a kernel.
double box_integral_quadrature(const KernelSpec& K, const Point& x, const RealBox& b,
                               int subdiv) {
    double sum = 0.0;
    if (K.dim == 1) {
        const double h = (b.hi[0] - b.lo[0]) / subdiv;
        for (int i = 0; i < subdiv; ++i)
            sum += K.eval(x, {b.lo[0] + (i + 0.5) * h, 0.0}) * h;
    } else {
        const double hx = (b.hi[0] - b.lo[0]) / subdiv;
        const double hy = (b.hi[1] - b.lo[1]) / subdiv;
        for (int iy = 0; iy < subdiv; ++iy)
            for (int ix = 0; ix < subdiv; ++ix)
                sum += K.eval(x, {b.lo[0] + (ix + 0.5) * hx, b.lo[1] + (iy + 0.5) * hy}) *
                       hx * hy;
    }
    return sum;
}

}  // namespace

TEST_CASE("closed-form box integrals match quadrature") {
    SECTION("hilbert") {
        KernelSpec K = hilbert_kernel();
        RealBox b;
        b.dim = 1;
        b.lo[0] = 0.7;
        b.hi[0] = 1.9;
        const Point x{0.2, 0.0};
        CHECK(K.box_integral(x, b) ==
              Catch::Approx(box_integral_quadrature(K, x, b, 4000)).epsilon(1e-6));
    }
    SECTION("riesz components") {
        for (int c = 0; c < 2; ++c) {
            KernelSpec K = riesz_kernel(c);
            RealBox b;
            b.dim = 2;
            b.lo = {0.4, -0.9};
            b.hi = {1.3, -0.1};
            const Point x{-0.3, 0.6};
            CHECK(K.box_integral(x, b) ==
                  Catch::Approx(box_integral_quadrature(K, x, b, 600)).margin(1e-5));
        }
    }
    SECTION("inverse distance, x outside and the singular cell") {
        RealBox b;
        b.dim = 2;
        b.lo = {0.5, 0.5};
        b.hi = {1.5, 1.5};
        KernelSpec inv;
        inv.dim = 2;
        inv.eval = [](const Point& x, const Point& y) {
            return 1.0 / std::hypot(x[0] - y[0], x[1] - y[1]);
        };
        const Point x{-0.25, 0.0};
        CHECK(inv_distance_box_integral(x, b) ==
              Catch::Approx(box_integral_quadrature(inv, x, b, 600)).epsilon(1e-5));

        // centered unit cell: 4 asinh(1) = 4 log(1 + sqrt 2)
        RealBox cell;
        cell.dim = 2;
        cell.lo = {-0.5, -0.5};
        cell.hi = {0.5, 0.5};
        CHECK(inv_distance_box_integral({0.0, 0.0}, cell) ==
              Catch::Approx(4.0 * std::log(1.0 + std::sqrt(2.0))).epsilon(1e-12));
    }
}

TEST_CASE("apply: identity diagonal reproduces the input") {
    Grid g(Cube::interval(-2.0, 2.0), 128);
    RngStream rng(3, "apply-identity");
    GridFunction f = GridFunction::sample(g, [&](Point) { return rng.uniform(-1.0, 1.0); });
    GridFunction out = apply(make_operator("diag:one"), f);
    CHECK(out.values == f.values);
}

TEST_CASE("apply: Hilbert transform of an interval indicator") {
    Grid g(Cube::interval(-4.0, 4.0), 8192);
    GridFunction f = box_indicator(g, Cube::interval(-1.0, 1.0));
    GridFunction Tf = apply(make_operator("hilbert"), f);

    // exact: T chi(x) = log|x+1| - log|x-1|; cell-aligned cut makes the
    // per-cell antiderivative sum telescope, so exterior cells are exact
    const std::int64_t i2 = g.snap(Cube::interval(2.0, 4.0)).lo[0];
    CHECK(Tf.at(i2 - 1) != 0.0);
    double worst = 0.0;
    for (std::int64_t i = 0; i < g.total_cells(); ++i) {
        const double x = g.midpoint(0, i);
        if (std::fabs(x) <= 1.0 + g.spacing()) continue;
        worst = std::max(worst,
                         std::fabs(Tf.at(i) - std::log(std::fabs((x + 1.0) / (x - 1.0)))));
    }
    CHECK(worst < 1e-10);

    const std::int64_t at2 = g.snap(Cube::interval(2.0 - g.spacing() / 2, 2.0 + g.spacing() / 2)).lo[0];
    CHECK(Tf.at(at2) == Catch::Approx(std::log(3.0)).margin(1e-3));

    const std::int64_t at0 = g.total_cells() / 2;
    CHECK(std::fabs(Tf.at(at0) + Tf.at(at0 - 1)) < 1e-12);  // odd around 0
}

TEST_CASE("apply is linear and odd-kernel parity holds") {
    Grid g(Cube::interval(-2.0, 2.0), 256);
    RngStream rng(5, "apply-linearity");
    GridFunction f = GridFunction::sample(g, [&](Point) { return rng.uniform(-1.0, 1.0); });
    GridFunction h = GridFunction::sample(g, [&](Point) { return rng.uniform(-1.0, 1.0); });
    OperatorSpec T = make_operator("hilbert");
    Applier ap(T, g);

    GridFunction combo(g);
    for (std::size_t i = 0; i < combo.values.size(); ++i)
        combo.values[i] = 0.75 * f.values[i] - 1.5 * h.values[i];
    GridFunction lhs = ap.apply(combo);
    GridFunction tf = ap.apply(f), th = ap.apply(h);
    double scale = 0.0;
    for (double v : lhs.values) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < lhs.values.size(); ++i)
        CHECK(std::fabs(lhs.values[i] - (0.75 * tf.values[i] - 1.5 * th.values[i])) <=
              1e-12 * std::max(1.0, scale));

    // even input -> odd output
    GridFunction even = GridFunction::sample(g, [](Point p) {
        return std::exp(-4.0 * p[0] * p[0]);
    });
    GridFunction odd = ap.apply(even);
    const std::int64_t n = g.total_cells();
    for (std::int64_t i = 0; i < n; ++i)
        CHECK(std::fabs(odd.at(i) + odd.at(n - 1 - i)) < 1e-9);
}

TEST_CASE("kernel smoothness audit") {
    SECTION("hilbert passes with omega(t) = 2t") {
        auto rep = kernel_smoothness_check(hilbert_kernel(), 20000);
        CHECK(rep.passed());
        CHECK(rep.max_ratio <= 1.0 + 1e-6);
        CHECK(rep.max_ratio > 0.5);  // the bound is attained up to sampling
    }
    SECTION("riesz kernels pass with omega(t) = 16t") {
        for (int c = 0; c < 2; ++c) {
            auto rep = kernel_smoothness_check(riesz_kernel(c), 20000);
            CHECK(rep.passed());
        }
    }
    SECTION("zero kernel has ratio zero") {
        KernelSpec z;
        z.name = "zero";
        z.dim = 1;
        z.modulus = {1.0, 1.0};
        z.eval = [](const Point&, const Point&) { return 0.0; };
        auto rep = kernel_smoothness_check(z, 1000);
        CHECK(rep.max_ratio == 0.0);
    }
    SECTION("sign-broken control is flagged") {
        auto rep = kernel_smoothness_check(broken_sign_kernel(), 20000);
        CHECK_FALSE(rep.passed());
        CHECK(rep.max_ratio > 2.0);
    }
}

TEST_CASE("tail integral F_Q against the closed form") {
    KernelSpec K = hilbert_kernel();
    Cube q = Cube::interval(-0.5, 0.5);
    const double tol = 1e-3;
    auto exact = [](double x) { return std::log((5.0 + 2.0 * x) / (5.0 - 2.0 * x)); };

    CHECK(tail_integral_FQ(K, q, {0.0, 0.0}, tol) == Catch::Approx(0.0).margin(1e-12));
    CHECK(tail_integral_FQ(K, q, {0.25, 0.0}, tol) == Catch::Approx(exact(0.25)).margin(tol));
    CHECK(tail_integral_FQ(K, q, {0.5, 0.0}, tol) == Catch::Approx(exact(0.5)).margin(tol));
    CHECK_THROWS_AS(tail_integral_FQ(K, q, {0.7, 0.0}, tol), Error);

    SECTION("riesz tail converges and is finite") {
        KernelSpec R1 = riesz_kernel(0);
        Cube sq = Cube::square(0.0, 0.0, 1.0);
        const double v = tail_integral_FQ(R1, sq, {0.25, -0.1}, 1e-3);
        CHECK(std::isfinite(v));
    }

    SECTION("F_Q bound is scale invariant for convolution kernels") {
        std::vector<double> observed;
        for (int s = -3; s <= 3; ++s) {
            const double side = std::ldexp(1.0, s);
            Cube qs = Cube::interval(-side / 2.0, side / 2.0);
            double mx = 0.0;
            for (double rel : {-0.45, -0.2, 0.1, 0.35, 0.5})
                mx = std::max(mx, std::fabs(tail_integral_FQ(K, qs, {rel * side, 0.0}, 1e-6)));
            observed.push_back(mx);
        }
        for (double v : observed)
            CHECK(v == Catch::Approx(observed.front()).epsilon(0.05));
    }
}

TEST_CASE("indicator oscillation of T chi_{Q*}") {
    SECTION("hilbert at the unit scale") {
        Grid g(Cube::interval(-4.0, 4.0), 1024);
        const double osc = indicator_oscillation(make_operator("hilbert"),
                                                 Cube::interval(-0.5, 0.5), g);
        CHECK(osc == Catch::Approx(2.0 * std::log(1.5)).margin(1e-2));
    }
    SECTION("pure diagonal is flat inside Q*") {
        Grid g(Cube::interval(-4.0, 4.0), 512);
        const double osc = indicator_oscillation(make_operator("diag:one"),
                                                 Cube::interval(-0.5, 0.5), g);
        CHECK(osc == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("scale invariance across 2^-3 .. 2^3") {
        std::vector<double> osc;
        for (int s = -3; s <= 3; ++s) {
            const double side = std::ldexp(1.0, s);
            Grid g(Cube::interval(-6.25 * side, 6.25 * side), 1024);
            osc.push_back(indicator_oscillation(make_operator("hilbert"),
                                                Cube::interval(-side / 2.0, side / 2.0), g));
        }
        for (double v : osc) CHECK(v == Catch::Approx(osc.front()).epsilon(0.05));
    }
}

TEST_CASE("compose and decompose round trip") {
    OperatorSpec hil = make_operator("hilbert");
    OperatorSpec sum = compose(hil, make_diag("one"));
    CHECK(sum.label == "sum:hilbert+one");

    Grid g(Cube::interval(-2.0, 2.0), 256);
    GridFunction f = GridFunction::sample(g, [](Point p) {
        return std::fabs(p[0]) < 1.0 ? std::cos(p[0]) : 0.0;
    });
    f.support_hint = g.snap(Cube::interval(-1.0, 1.0));
    GridFunction a = apply(sum, f);
    GridFunction b = apply(hil, f);
    for (std::int64_t i = 0; i < g.total_cells(); ++i)
        CHECK(a.at(i) == Catch::Approx(b.at(i) + f.at(i)).margin(1e-14));

    auto [tilde, diag] = decompose(sum);
    CHECK(tilde.label == "hilbert");
    CHECK(diag.name == "one");
    CHECK_THROWS_AS(decompose(make_operator("hilbert")), NoDiagonalPart);

    OperatorSpec with_zero = compose(make_operator("hilbert"), make_diag("zero"));
    GridFunction c = apply(with_zero, f);
    for (std::int64_t i = 0; i < g.total_cells(); ++i)
        CHECK(c.at(i) == b.at(i));
}

TEST_CASE("t1 probe: bounded kernels, flat diagonal, growing control") {
    ProbeConfig probe;
    probe.cells_1d = 1024;

    SECTION("hilbert is bounded with stable sups") {
        auto res = t1_probe(make_operator("hilbert"), probe, 1);
        CHECK(res.bounded);
        const auto& s = res.sup_norms;
        double mx = 0.0, mn = 1e300;
        for (std::size_t i = s.size() - 3; i < s.size(); ++i) {
            mx = std::max(mx, s[i].second);
            mn = std::min(mn, s[i].second);
        }
        CHECK((mx - mn) / mx < 0.10);
    }
    SECTION("constant diagonal reports the constant") {
        auto res = t1_probe(make_operator("diag:p7"), probe, 1);
        CHECK(res.bounded);
        for (const auto& [R, sup] : res.sup_norms) CHECK(sup == Catch::Approx(0.7));
    }
    SECTION("log-growing diagonal is unbounded") {
        auto res = t1_probe(make_operator("diag:loggrow"), probe, 1);
        CHECK_FALSE(res.bounded);
        const auto& s = res.sup_norms;
        for (std::size_t i = 1; i < s.size(); ++i) {
            const double growth = s[i].second - s[i - 1].second;
            CHECK(growth >= 0.5 * std::log(s[i].first / s[i - 1].first));
        }
    }
    SECTION("undersized box is rejected") {
        ProbeConfig bad = probe;
        bad.box_factor = 3.0;
        CHECK_THROWS_AS(t1_probe(make_operator("hilbert"), bad, 1), DomainTooSmall);
    }
}
