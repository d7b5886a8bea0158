#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "oscdom/errors.hpp"
#include "oscdom/fft.hpp"
#include "oscdom/grid.hpp"
#include "oscdom/kernels.hpp"
#include "oscdom/rng.hpp"

namespace oscdom {

// ---------------------------------------------------------------------------
// Applier: an OperatorSpec bound to a grid. Convolution kernels get exact
// per-cell difference weights (antiderivative through each cell); the
// singular cell carries 0 for odd kernels (symmetric principal value under
// the cell-constant model) and is rejected otherwise.
// ---------------------------------------------------------------------------

class Applier {
public:
    Applier(const OperatorSpec& T, const Grid& grid) : T_(T), grid_(grid) {
        T_.validate();
        if (T_.kernel && T_.kernel->dim != grid.dim())
            throw Error("Applier: kernel dimension mismatch");
        if (convolution_weights_available()) build_weight_table();
    }

    const Grid& grid() const { return grid_; }
    const OperatorSpec& op() const { return T_; }

    /// Full-grid application T f (kernel part + diagonal part).
    GridFunction apply(const GridFunction& f) const {
        GridFunction out(grid_);
        if (T_.kernel) {
            const CellRange in = f.support_hint ? *f.support_hint : grid_.full_range();
            if (grid_.dim() == 2 && convolution_weights_available()) {
                check_singular_use(f, in, grid_.full_range());
                if (!conv_)
                    conv_ = std::make_unique<Conv2dFFT>(
                        grid_.cells_per_axis, [&](std::int64_t dx, std::int64_t dy) {
                            return weight2(dx, dy);
                        });
                out.values = conv_->apply(f.values);
            } else {
                kernel_apply_direct(f, in, grid_.full_range(), out.values.data());
            }
        }
        add_diagonal(f, grid_.full_range(), out.values.data());
        return out;
    }

    /// Restricted application: output over `out_range` (row-major block),
    /// reading f only on `in_range` (f is treated as zero elsewhere).
    std::vector<double> apply_on(const GridFunction& f, const CellRange& in_range,
                                 const CellRange& out_range) const {
        std::vector<double> out(static_cast<std::size_t>(out_range.count()), 0.0);
        if (T_.kernel) kernel_apply_direct(f, in_range, out_range, out.data());
        add_diagonal_block(f, in_range, out_range, out.data());
        return out;
    }

private:
    bool convolution_weights_available() const {
        return T_.kernel && T_.kernel->is_convolution &&
               static_cast<bool>(T_.kernel->box_integral);
    }

    void build_weight_table() {
        const double h = grid_.spacing();
        const std::int64_t n = grid_.cells_per_axis;
        const Point origin{0.0, 0.0};
        if (grid_.dim() == 1) {
            w1_.assign(static_cast<std::size_t>(2 * n - 1), 0.0);
            for (std::int64_t d = -(n - 1); d <= n - 1; ++d) {
                if (d == 0) continue;  // odd p.v. or rejected at use
                RealBox b;
                b.dim = 1;
                b.lo[0] = -(static_cast<double>(d) + 0.5) * h;
                b.hi[0] = -(static_cast<double>(d) - 0.5) * h;
                w1_[static_cast<std::size_t>(d + n - 1)] = T_.kernel->box_integral(origin, b);
            }
        } else {
            w2_.assign(static_cast<std::size_t>((2 * n - 1) * (2 * n - 1)), 0.0);
            for (std::int64_t dy = -(n - 1); dy <= n - 1; ++dy)
                for (std::int64_t dx = -(n - 1); dx <= n - 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    RealBox b;
                    b.dim = 2;
                    b.lo[0] = -(static_cast<double>(dx) + 0.5) * h;
                    b.hi[0] = -(static_cast<double>(dx) - 0.5) * h;
                    b.lo[1] = -(static_cast<double>(dy) + 0.5) * h;
                    b.hi[1] = -(static_cast<double>(dy) - 0.5) * h;
                    w2_[w2_index(dx, dy)] = T_.kernel->box_integral(origin, b);
                }
        }
        if (!T_.kernel->is_odd) singular_rejects_ = true;
    }

    std::size_t w2_index(std::int64_t dx, std::int64_t dy) const {
        const std::int64_t n = grid_.cells_per_axis;
        return static_cast<std::size_t>((dy + n - 1) * (2 * n - 1) + (dx + n - 1));
    }
    double weight2(std::int64_t dx, std::int64_t dy) const {
        return w2_[w2_index(dx, dy)];
    }

    void check_singular_use(const GridFunction& f, const CellRange& in,
                            const CellRange& out) const {
        if (!singular_rejects_) return;
        // the diagonal cell weight is undefined; any overlap with nonzero
        // input cannot be represented
        CellRange overlap = in;
        bool nonempty = true;
        for (int a = 0; a < grid_.dim(); ++a) {
            overlap.lo[a] = std::max(in.lo[a], out.lo[a]);
            overlap.hi[a] = std::min(in.hi[a], out.hi[a]);
            nonempty = nonempty && overlap.lo[a] < overlap.hi[a];
        }
        if (!nonempty) return;
        bool any = false;
        detail::for_each_cell(grid_, overlap, [&](std::int64_t i) {
            if (f.at(i) != 0.0) any = true;
        });
        if (any)
            throw SingularCellUnhandled("kernel '" + T_.kernel->name +
                                        "' has no principal-value rule");
    }

    void kernel_apply_direct(const GridFunction& f, const CellRange& in,
                             const CellRange& out_range, double* out) const {
        const KernelSpec& K = *T_.kernel;
        const std::int64_t n = grid_.cells_per_axis;
        const double h = grid_.spacing();
        if (!w1_.empty()) {
            check_singular_use(f, in, out_range);
            std::size_t pos = 0;
            for (std::int64_t i = out_range.lo[0]; i < out_range.hi[0]; ++i, ++pos) {
                double sum = 0.0;
                for (std::int64_t j = in.lo[0]; j < in.hi[0]; ++j)
                    sum += w1_[static_cast<std::size_t>(i - j + n - 1)] * f.at(j);
                out[pos] += sum;
            }
            return;
        }
        if (!w2_.empty()) {
            check_singular_use(f, in, out_range);
            std::size_t pos = 0;
            for (std::int64_t oy = out_range.lo[1]; oy < out_range.hi[1]; ++oy)
                for (std::int64_t ox = out_range.lo[0]; ox < out_range.hi[0]; ++ox, ++pos) {
                    double sum = 0.0;
                    for (std::int64_t jy = in.lo[1]; jy < in.hi[1]; ++jy)
                        for (std::int64_t jx = in.lo[0]; jx < in.hi[0]; ++jx)
                            sum += weight2(ox - jx, oy - jy) * f.at(jy * n + jx);
                    out[pos] += sum;
                }
            return;
        }
        // generic kernel: exact per-cell integral when available, else
        // midpoint; diagonal cell must be zero-valued
        const double cell = grid_.cell_measure();
        std::size_t pos = 0;
        detail::for_each_cell(grid_, out_range, [&](std::int64_t i) {
            const Point x = grid_.cell_center(i);
            double sum = 0.0;
            detail::for_each_cell(grid_, in, [&](std::int64_t j) {
                const double fj = f.at(j);
                if (fj == 0.0) return;
                if (i == j) {
                    if (K.is_convolution && K.is_odd) return;  // p.v. = 0
                    throw SingularCellUnhandled("kernel '" + K.name +
                                                "' hit its own cell");
                }
                if (K.box_integral) {
                    const Point y = grid_.cell_center(j);
                    RealBox b;
                    b.dim = grid_.dim();
                    for (int a = 0; a < grid_.dim(); ++a) {
                        b.lo[a] = y[a] - h / 2.0;
                        b.hi[a] = y[a] + h / 2.0;
                    }
                    sum += K.box_integral(x, b) * fj;
                } else {
                    sum += K.eval(x, grid_.cell_center(j)) * cell * fj;
                }
            });
            out[pos++] += sum;
        });
    }

    void add_diagonal(const GridFunction& f, const CellRange& range, double* out) const {
        if (!T_.diagonal) return;
        std::size_t pos = 0;
        detail::for_each_cell(grid_, range, [&](std::int64_t i) {
            out[pos++] += T_.diagonal->fn(grid_.cell_center(i)) * f.at(i);
        });
    }

    void add_diagonal_block(const GridFunction& f, const CellRange& in,
                            const CellRange& out_range, double* out) const {
        if (!T_.diagonal) return;
        std::size_t pos = 0;
        detail::for_each_cell(grid_, out_range, [&](std::int64_t i) {
            bool inside = true;
            const std::int64_t ix = grid_.dim() == 1 ? i : i % grid_.cells_per_axis;
            const std::int64_t iy = grid_.dim() == 1 ? 0 : i / grid_.cells_per_axis;
            inside = ix >= in.lo[0] && ix < in.hi[0];
            if (grid_.dim() == 2) inside = inside && iy >= in.lo[1] && iy < in.hi[1];
            if (inside) out[pos] += T_.diagonal->fn(grid_.cell_center(i)) * f.at(i);
            ++pos;
        });
    }

    OperatorSpec T_;
    Grid grid_;
    std::vector<double> w1_, w2_;
    bool singular_rejects_ = false;
    mutable std::unique_ptr<Conv2dFFT> conv_;
};

inline GridFunction apply(const OperatorSpec& T, const GridFunction& f) {
    return Applier(T, f.grid).apply(f);
}

// ---------------------------------------------------------------------------
// Kernel smoothness audit against the modulus bound
//   |K(x,y) - K(x',y)| <= omega(|x-x'| / |x-y|) / |x-y|^n,  |x-x'| <= |x-y|/2.
// ---------------------------------------------------------------------------

struct SmoothnessReport {
    double max_ratio = 0.0;
    std::int64_t violations = 0;
    std::int64_t samples = 0;
    bool passed() const { return violations == 0; }
};

inline SmoothnessReport kernel_smoothness_check(const KernelSpec& K,
                                                std::int64_t samples,
                                                std::uint64_t seed = 42) {
    if (samples < 1) throw Error("kernel_smoothness_check: samples >= 1");
    RngStream rng(seed, "kernel-audit:" + K.name);
    SmoothnessReport rep;
    rep.samples = samples;
    for (std::int64_t s = 0; s < samples; ++s) {
        Point x{rng.uniform(-1.0, 1.0), 0.0};
        if (K.dim == 2) x[1] = rng.uniform(-1.0, 1.0);
        const double dist = std::pow(10.0, rng.uniform(-3.0, 1.0));
        Point dir{1.0, 0.0};
        if (K.dim == 2) {
            const double ang = rng.uniform(0.0, 2.0 * M_PI);
            dir = {std::cos(ang), std::sin(ang)};
        } else {
            dir[0] = rng.next_double() < 0.5 ? -1.0 : 1.0;
        }
        Point y{x[0] + dist * dir[0], x[1] + dist * dir[1]};
        const double t = rng.uniform(0.05, 0.5);
        Point dir2{1.0, 0.0};
        if (K.dim == 2) {
            const double ang = rng.uniform(0.0, 2.0 * M_PI);
            dir2 = {std::cos(ang), std::sin(ang)};
        } else {
            dir2[0] = rng.next_double() < 0.5 ? -1.0 : 1.0;
        }
        Point xp{x[0] + t * dist * dir2[0], x[1] + t * dist * dir2[1]};
        const double lhs = std::fabs(K.eval(x, y) - K.eval(xp, y));
        const double bound = K.modulus(t) / std::pow(dist, K.dim);
        const double ratio = lhs / bound;
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        if (ratio > 1.0 + 1e-6) ++rep.violations;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Kernel tail integral F_Q(x) = int_{R^n \ Q*} (K(x_Q, y) - K(x, y)) dy,
// accumulated annulus by annulus with a modulus-certified stopping rule.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<RealBox> annulus_boxes(const Cube& outer, const Cube& inner) {
    std::vector<RealBox> out;
    if (outer.dim == 1) {
        RealBox left, right;
        left.dim = right.dim = 1;
        left.lo[0] = outer.lo(0);
        left.hi[0] = inner.lo(0);
        right.lo[0] = inner.hi(0);
        right.hi[0] = outer.hi(0);
        out.push_back(left);
        out.push_back(right);
    } else {
        RealBox bottom, top, left, right;
        bottom.dim = top.dim = left.dim = right.dim = 2;
        bottom.lo = {outer.lo(0), outer.lo(1)};
        bottom.hi = {outer.hi(0), inner.lo(1)};
        top.lo = {outer.lo(0), inner.hi(1)};
        top.hi = {outer.hi(0), outer.hi(1)};
        left.lo = {outer.lo(0), inner.lo(1)};
        left.hi = {inner.lo(0), inner.hi(1)};
        right.lo = {inner.hi(0), inner.lo(1)};
        right.hi = {outer.hi(0), outer.hi(1)};
        out = {bottom, top, left, right};
    }
    return out;
}

}  // namespace detail

inline double tail_integral_FQ(const KernelSpec& K, const Cube& q, const Point& x,
                               double tol) {
    if (q.dim != K.dim) throw Error("tail_integral_FQ: dimension mismatch");
    if (!q.contains_point(x)) throw Error("tail_integral_FQ: x must lie in Q");
    if (!K.box_integral)
        throw TailNotConvergent("kernel '" + K.name + "' lacks an antiderivative");
    if (!std::isfinite(K.modulus.dini_integral()))
        throw TailNotConvergent("modulus has no finite Dini integral");

    const Cube qstar = star(q);
    const Point xq = qstar.center;
    const double delta = std::hypot(x[0] - xq[0], (q.dim == 2) ? x[1] - xq[1] : 0.0);
    const double S = qstar.side;
    const double cn = (std::pow(2.0, q.dim) - 1.0) * std::pow(2.0, q.dim);

    double acc = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const Cube outer = dilate(qstar, std::ldexp(1.0, k));
        const Cube inner = dilate(qstar, std::ldexp(1.0, k - 1));
        for (const RealBox& b : detail::annulus_boxes(outer, inner))
            acc += K.box_integral(xq, b) - K.box_integral(x, b);
        // remaining tail: for y outside 2^k Q*, |x_Q - y| >= 2^k S / 2 and
        // the argument of omega is delta / |x_Q - y| <= 2 delta / (2^k S)
        const double d_k = std::ldexp(S, k) / 2.0;
        if (delta <= d_k / 2.0 && (delta == 0.0 || 2.0 * delta / (S * std::ldexp(1.0, k)) <= 1.0)) {
            const double tail =
                delta == 0.0 ? 0.0 : cn * K.modulus.dyadic_tail(2.0 * delta / S, k);
            if (tail < tol) return acc;
        }
    }
    throw TailNotConvergent("annulus accumulation did not certify tol");
}

/// esssup-esssup oscillation of T(chi_{Q*}) over the cells of q.
inline double indicator_oscillation(const OperatorSpec& T, const Cube& q,
                                    const Grid& grid) {
    const Cube qstar = star(q);
    const CellRange star_range = grid.snap(qstar);  // throws if Q* exceeds box
    GridFunction chi(grid);
    detail::for_each_cell(grid, star_range, [&](std::int64_t i) { chi.at(i) = 1.0; });
    chi.support_hint = star_range;
    Applier ap(T, grid);
    const CellRange q_range = grid.snap(q);
    std::vector<double> vals = ap.apply_on(chi, star_range, q_range);
    const auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    return *mx - *mn;
}

// ---------------------------------------------------------------------------
// T(1) probe via theta_R = theta(./R): C^2 radial cutoff, 1 on |x| < 1,
// 0 on |x| > 2 (quintic smoothstep in between). Each radius gets its own
// scaled grid; the observation window scales with R so that
// dilation-invariant kernels report R-independent sup norms.
// ---------------------------------------------------------------------------

inline double theta_profile(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double u = t - 1.0;
    return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

/// |d theta / dt| of the radial profile.
inline double theta_profile_slope(double t) {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    const double u = t - 1.0;
    return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

struct ProbeConfig {
    std::vector<double> radii{10.0, 20.0, 40.0, 80.0};
    double box_factor = 4.25;     // grid box side = box_factor * R
    double obs_fraction = 0.5;    // observation window |x|_inf <= obs_fraction * R
    std::int64_t cells_1d = 2048;
    std::int64_t cells_2d = 192;
};

struct ProbeResult {
    std::vector<std::pair<double, double>> sup_norms;  // (R, sup)
    bool bounded = false;
    std::string verdict;
};

inline GridFunction sample_theta_r(const Grid& grid, double R) {
    return GridFunction::sample(grid, [R, dim = grid.dim()](Point p) {
        const double r = dim == 1 ? std::fabs(p[0]) : std::hypot(p[0], p[1]);
        return theta_profile(r / R);
    });
}

inline ProbeResult t1_probe(const OperatorSpec& T, const ProbeConfig& probe, int dim) {
    if (probe.box_factor < 4.0)
        throw DomainTooSmall("probe box must cover the support of theta_R");
    ProbeResult res;
    for (double R : probe.radii) {
        const Cube box = dim == 1 ? Cube::interval(-probe.box_factor * R / 2.0,
                                                   probe.box_factor * R / 2.0)
                                  : Cube::square(0.0, 0.0, probe.box_factor * R);
        const Grid grid(box, dim == 1 ? probe.cells_1d : probe.cells_2d);
        GridFunction f = sample_theta_r(grid, R);
        GridFunction Tf = Applier(T, grid).apply(f);
        double sup = 0.0;
        const double w = probe.obs_fraction * R;
        for (std::int64_t i = 0; i < grid.total_cells(); ++i) {
            const Point p = grid.cell_center(i);
            if (std::fabs(p[0]) <= w && (dim == 1 || std::fabs(p[1]) <= w))
                sup = std::max(sup, std::fabs(Tf.at(i)));
        }
        res.sup_norms.emplace_back(R, sup);
    }
    // bounded: nonincreasing after the maximum, or < 10% relative variation
    // over the last three radii
    const auto& s = res.sup_norms;
    std::size_t arg_max = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].second > s[arg_max].second) arg_max = i;
    // a maximum attained at the largest radius means the sups are still
    // growing, never a bounded verdict by this branch
    bool nonincreasing = s.size() < 2 || arg_max + 1 < s.size();
    for (std::size_t i = arg_max + 1; i < s.size(); ++i)
        if (s[i].second > s[i - 1].second * (1.0 + 1e-9)) nonincreasing = false;
    bool stable_tail = false;
    if (s.size() >= 3) {
        double mx = 0.0, mn = 1e300;
        for (std::size_t i = s.size() - 3; i < s.size(); ++i) {
            mx = std::max(mx, s[i].second);
            mn = std::min(mn, s[i].second);
        }
        stable_tail = mx > 0.0 && (mx - mn) / mx < 0.10;
    }
    res.bounded = nonincreasing || stable_tail;
    res.verdict = res.bounded ? "bounded" : "unbounded";
    return res;
}

}  // namespace oscdom
