#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "oscdom/errors.hpp"

namespace oscdom {

using Point = std::array<double, 2>;

/// Axis-aligned cube in dimension 1 or 2. Cubes are closed; geometric
/// predicates use a relative tolerance so that measure-zero boundary
/// effects never flip a decision.
struct Cube {
    std::array<double, 2> center{0.0, 0.0};
    double side = 1.0;
    int dim = 1;

    static Cube interval(double lo, double hi) {
        return Cube{{(lo + hi) / 2.0, 0.0}, hi - lo, 1};
    }
    static Cube square(double cx, double cy, double side) {
        return Cube{{cx, cy}, side, 2};
    }

    double measure() const { return dim == 1 ? side : side * side; }
    double diameter() const { return side * std::sqrt(static_cast<double>(dim)); }
    double lo(int axis) const { return center[axis] - side / 2.0; }
    double hi(int axis) const { return center[axis] + side / 2.0; }

    double tol() const { return 1e-12 * side; }

    bool contains_point(const std::array<double, 2>& x) const {
        for (int a = 0; a < dim; ++a)
            if (x[a] < lo(a) - tol() || x[a] > hi(a) + tol()) return false;
        return true;
    }

    bool contains_cube(const Cube& q) const {
        for (int a = 0; a < dim; ++a)
            if (q.lo(a) < lo(a) - tol() || q.hi(a) > hi(a) + tol()) return false;
        return true;
    }
};

/// Concentric dilation: same center, side scaled by `factor`.
inline Cube dilate(const Cube& q, double factor) {
    if (!(factor > 0.0)) throw Error("dilate: factor must be positive");
    Cube r = q;
    r.side = q.side * factor;
    return r;
}

/// The 5*sqrt(n) dilation used for all starred cubes.
inline double star_factor(int dim) { return 5.0 * std::sqrt(static_cast<double>(dim)); }

inline Cube star(const Cube& q) { return dilate(q, star_factor(q.dim)); }

/// The 2^n congruent half-side cubes partitioning q.
inline std::vector<Cube> children(const Cube& q) {
    std::vector<Cube> out;
    const double h = q.side / 2.0;
    const int count = 1 << q.dim;
    out.reserve(count);
    for (int m = 0; m < count; ++m) {
        Cube c = q;
        c.side = h;
        for (int a = 0; a < q.dim; ++a)
            c.center[a] = q.center[a] + ((m >> a & 1) ? h / 2.0 : -h / 2.0);
        out.push_back(c);
    }
    return out;
}

inline nlohmann::json to_json(const Cube& q) {
    nlohmann::json c = nlohmann::json::array();
    for (int a = 0; a < q.dim; ++a) c.push_back(q.center[a]);
    return nlohmann::json{{"center", c}, {"side", q.side}, {"dim", q.dim}};
}

inline Cube cube_from_json(const nlohmann::json& j) {
    Cube q;
    q.dim = j.at("dim").get<int>();
    q.side = j.at("side").get<double>();
    auto c = j.at("center");
    for (int a = 0; a < q.dim; ++a) q.center[a] = c.at(a).get<double>();
    return q;
}

}  // namespace oscdom
