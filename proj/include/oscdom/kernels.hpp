#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "oscdom/cube.hpp"
#include "oscdom/errors.hpp"
#include "oscdom/grid.hpp"

namespace oscdom {

/// Power-type modulus of continuity omega(t) = scale * t^exponent,
/// exponent in (0,1]; Dini integral and dyadic tail sums in closed form.
struct DiniModulus {
    double scale = 1.0;
    double exponent = 1.0;

    double operator()(double t) const { return scale * std::pow(t, exponent); }

    double dini_integral() const {
        if (!(exponent > 0.0)) return std::numeric_limits<double>::infinity();
        return scale / exponent;
    }

    /// sum_{j >= j0} omega(c * 2^{-j})  (c > 0).
    double dyadic_tail(double c, int j0) const {
        const double q = std::pow(0.5, exponent);
        return scale * std::pow(c, exponent) * std::pow(q, j0) / (1.0 - q);
    }
};

/// Axis-aligned box with real endpoints (integration region in y).
struct RealBox {
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{0.0, 0.0};
    int dim = 1;

    static RealBox of(const Cube& q) {
        RealBox b;
        b.dim = q.dim;
        for (int a = 0; a < q.dim; ++a) {
            b.lo[a] = q.lo(a);
            b.hi[a] = q.hi(a);
        }
        return b;
    }
};

namespace detail {

/// log(u2 + sqrt(t^2 + u2^2)) evaluated stably for u2 < 0 via
/// (u2 + r)(r - u2) = t^2.
inline double log_u_plus_r(double t, double u2) {
    const double r = std::hypot(t, u2);
    if (u2 >= 0.0) return std::log(u2 + r);
    return 2.0 * std::log(std::fabs(t)) - std::log(r - u2);
}

/// log((b + r_b)/(a + r_a)) for fixed transverse offset t, stable when
/// t == 0 (the offending logs cancel provided a, b have one sign).
inline double log_diff_along(double t, double a, double b) {
    if (t == 0.0) {
        if (a > 0.0 && b > 0.0) return std::log(b / a);
        if (a < 0.0 && b < 0.0) return std::log(a / b);
        throw SingularCellUnhandled("integration box touches the kernel diagonal");
    }
    return log_u_plus_r(t, b) - log_u_plus_r(t, a);
}

}  // namespace detail

/// Exact integral over y in box of the Hilbert kernel 1/(x - y), x outside.
inline double hilbert_box_integral(double x, const RealBox& b) {
    return std::log(std::fabs(x - b.lo[0])) - std::log(std::fabs(x - b.hi[0]));
}

/// Exact integral over y in box of (x_c - y_c)/|x - y|^3 (n = 2), x outside.
/// With u = x - y, integrand u_c/|u|^3 has double antiderivative
/// -log(u_other + |u|); corners are grouped along u_c for stability.
inline double riesz_box_integral(int c, const std::array<double, 2>& x,
                                 const RealBox& b) {
    const int o = 1 - c;
    const double A_c = x[c] - b.hi[c], B_c = x[c] - b.lo[c];
    const double A_o = x[o] - b.hi[o], B_o = x[o] - b.lo[o];
    return -(detail::log_diff_along(B_c, A_o, B_o) -
             detail::log_diff_along(A_c, A_o, B_o));
}

/// Exact integral over y in box of 1/|x - y| (n = 2), valid also when x
/// lies inside the box (the antiderivative is continuous through u = 0).
inline double inv_distance_box_integral(const std::array<double, 2>& x,
                                        const RealBox& b) {
    auto H = [](double u1, double u2) {
        double t1 = (u1 == 0.0) ? 0.0 : u1 * detail::log_u_plus_r(u1, u2);
        double t2 = (u2 == 0.0) ? 0.0 : u2 * detail::log_u_plus_r(u2, u1);
        return t1 + t2;
    };
    const double A1 = x[0] - b.hi[0], B1 = x[0] - b.lo[0];
    const double A2 = x[1] - b.hi[1], B2 = x[1] - b.lo[1];
    return H(B1, B2) - H(A1, B2) - H(B1, A2) + H(A1, A2);
}

// ---------------------------------------------------------------------------
// Kernel and operator specifications.
// ---------------------------------------------------------------------------

struct KernelSpec {
    std::string name;
    int dim = 1;
    DiniModulus modulus;
    bool is_convolution = false;
    bool is_odd = false;
    double size_constant = 1.0;  // |K(x,y)| <= C / |x-y|^n
    std::function<double(const Point&, const Point&)> eval;
    /// Exact integral of K(x, .) over a box not containing x; empty if the
    /// kernel has no closed-form antiderivative.
    std::function<double(const Point&, const RealBox&)> box_integral;
};

inline KernelSpec hilbert_kernel() {
    KernelSpec k;
    k.name = "hilbert";
    k.dim = 1;
    k.modulus = {2.0, 1.0};
    k.is_convolution = true;
    k.is_odd = true;
    k.size_constant = 1.0;
    k.eval = [](const Point& x, const Point& y) { return 1.0 / (x[0] - y[0]); };
    k.box_integral = [](const Point& x, const RealBox& b) {
        return hilbert_box_integral(x[0], b);
    };
    return k;
}

/// Planar Riesz transform kernel K_j(x,y) = (x_j - y_j)/|x-y|^3.
/// Mean-value bound: |grad K| <= 2/|u|^3, so omega(t) = 16 t on the
/// admissible region |x-x'| <= |x-y|/2.
inline KernelSpec riesz_kernel(int component) {
    KernelSpec k;
    k.name = component == 0 ? "riesz1" : "riesz2";
    k.dim = 2;
    k.modulus = {16.0, 1.0};
    k.is_convolution = true;
    k.is_odd = true;
    k.size_constant = 1.0;
    k.eval = [component](const Point& x, const Point& y) {
        const double u0 = x[0] - y[0], u1 = x[1] - y[1];
        const double r = std::hypot(u0, u1);
        return (component == 0 ? u0 : u1) / (r * r * r);
    };
    k.box_integral = [component](const Point& x, const RealBox& b) {
        return riesz_box_integral(component, x, b);
    };
    return k;
}

/// Deliberately non-smooth control kernel sign(x)/(x - y): the jump in x
/// across 0 violates the modulus bound for pairs straddling the origin.
inline KernelSpec broken_sign_kernel() {
    KernelSpec k;
    k.name = "broken-sign";
    k.dim = 1;
    k.modulus = {2.0, 1.0};
    k.is_convolution = false;
    k.is_odd = false;
    k.size_constant = 1.0;
    k.eval = [](const Point& x, const Point& y) {
        return (x[0] >= 0.0 ? 1.0 : -1.0) / (x[0] - y[0]);
    };
    return k;
}

/// Bounded (or control) multiplication symbol b(x).
struct DiagSpec {
    std::string name;
    std::function<double(const Point&)> fn;
};

inline DiagSpec diag_constant(double value, const std::string& name) {
    return DiagSpec{name, [value](const Point&) { return value; }};
}

inline DiagSpec diag_log_growth() {
    return DiagSpec{"loggrow", [](const Point& x) {
                        return std::log(2.0 + std::hypot(x[0], x[1]));
                    }};
}

/// T = (kernel part) + b I; at least one part must be present.
struct OperatorSpec {
    std::optional<KernelSpec> kernel;
    std::optional<DiagSpec> diagonal;
    std::string label;

    void validate() const {
        if (!kernel && !diagonal)
            throw Error("OperatorSpec '" + label + "' has neither kernel nor diagonal");
    }
};

inline OperatorSpec compose(const OperatorSpec& tilde, const DiagSpec& b) {
    if (tilde.diagonal)
        throw Error("compose: kernel part already carries a diagonal");
    OperatorSpec t = tilde;
    t.diagonal = b;
    t.label = "sum:" + tilde.label + "+" + b.name;
    return t;
}

inline std::pair<OperatorSpec, DiagSpec> decompose(const OperatorSpec& T) {
    if (!T.diagonal)
        throw NoDiagonalPart("operator '" + T.label + "' has no explicit diagonal");
    OperatorSpec tilde;
    tilde.kernel = T.kernel;
    tilde.label = T.kernel ? T.kernel->name : "zero";
    return {tilde, *T.diagonal};
}

/// Registry of shipped operators, addressed by label:
/// "hilbert" | "riesz1" | "riesz2" | "diag:<name>" | "sum:<kernel>+<diag>"
/// with diag names "one", "p7", "zero", "loggrow".
inline DiagSpec make_diag(const std::string& name) {
    if (name == "one") return diag_constant(1.0, "one");
    if (name == "p7") return diag_constant(0.7, "p7");
    if (name == "zero") return diag_constant(0.0, "zero");
    if (name == "loggrow") return diag_log_growth();
    throw ConfigError("unknown diagonal symbol '" + name + "'");
}

inline OperatorSpec make_operator(const std::string& label) {
    OperatorSpec T;
    T.label = label;
    if (label == "hilbert") {
        T.kernel = hilbert_kernel();
    } else if (label == "riesz1") {
        T.kernel = riesz_kernel(0);
    } else if (label == "riesz2") {
        T.kernel = riesz_kernel(1);
    } else if (label.rfind("diag:", 0) == 0) {
        T.diagonal = make_diag(label.substr(5));
    } else if (label.rfind("sum:", 0) == 0) {
        const std::string rest = label.substr(4);
        const auto plus = rest.find('+');
        if (plus == std::string::npos)
            throw ConfigError("bad operator label '" + label + "'");
        OperatorSpec base = make_operator(rest.substr(0, plus));
        return compose(base, make_diag(rest.substr(plus + 1)));
    } else {
        throw ConfigError("unknown operator label '" + label + "'");
    }
    return T;
}

inline int operator_dim(const OperatorSpec& T) {
    return T.kernel ? T.kernel->dim : 0;  // 0: diagonal-only, any dimension
}

}  // namespace oscdom
