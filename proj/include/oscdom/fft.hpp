#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <fftw3.h>

#include "oscdom/errors.hpp"

namespace oscdom {

/// Exact linear 2D convolution out(i) = sum_j W(i-j) f(j) for an N x N
/// grid, done as a cyclic convolution of size 2N (no aliasing: f is zero
/// padded and every difference in [-(N-1), N-1]^2 has a unique slot).
/// Plans use FFTW_ESTIMATE, which is deterministic for a fixed size.
class Conv2dFFT {
public:
    Conv2dFFT(std::int64_t n, const std::function<double(std::int64_t, std::int64_t)>& weight)
        : n_(n), m_(2 * n) {
        const std::size_t real_count = static_cast<std::size_t>(m_ * m_);
        const std::size_t cplx_count = static_cast<std::size_t>(m_ * (m_ / 2 + 1));
        real_buf_ = fftw_alloc_real(real_count);
        cplx_buf_ = fftw_alloc_complex(cplx_count);
        w_hat_ = fftw_alloc_complex(cplx_count);
        if (!real_buf_ || !cplx_buf_ || !w_hat_) throw Error("Conv2dFFT: allocation failed");
        fwd_ = fftw_plan_dft_r2c_2d(static_cast<int>(m_), static_cast<int>(m_),
                                    real_buf_, cplx_buf_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_2d(static_cast<int>(m_), static_cast<int>(m_),
                                    cplx_buf_, real_buf_, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw Error("Conv2dFFT: planning failed");

        // padded weight table: wrap difference (dx,dy) into [0, M)^2
        for (std::size_t i = 0; i < real_count; ++i) real_buf_[i] = 0.0;
        for (std::int64_t dy = -(n_ - 1); dy <= n_ - 1; ++dy)
            for (std::int64_t dx = -(n_ - 1); dx <= n_ - 1; ++dx) {
                const std::int64_t px = (dx + m_) % m_;
                const std::int64_t py = (dy + m_) % m_;
                real_buf_[static_cast<std::size_t>(py * m_ + px)] = weight(dx, dy);
            }
        fftw_execute(fwd_);
        for (std::size_t i = 0; i < cplx_count; ++i) {
            w_hat_[i][0] = cplx_buf_[i][0];
            w_hat_[i][1] = cplx_buf_[i][1];
        }
    }

    Conv2dFFT(const Conv2dFFT&) = delete;
    Conv2dFFT& operator=(const Conv2dFFT&) = delete;

    ~Conv2dFFT() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_buf_);
        fftw_free(cplx_buf_);
        fftw_free(w_hat_);
    }

    /// values: row-major N^2 input; returns row-major N^2 output.
    std::vector<double> apply(const std::vector<double>& values) const {
        const std::size_t real_count = static_cast<std::size_t>(m_ * m_);
        const std::size_t cplx_count = static_cast<std::size_t>(m_ * (m_ / 2 + 1));
        for (std::size_t i = 0; i < real_count; ++i) real_buf_[i] = 0.0;
        for (std::int64_t iy = 0; iy < n_; ++iy)
            for (std::int64_t ix = 0; ix < n_; ++ix)
                real_buf_[static_cast<std::size_t>(iy * m_ + ix)] =
                    values[static_cast<std::size_t>(iy * n_ + ix)];
        fftw_execute(fwd_);
        for (std::size_t i = 0; i < cplx_count; ++i) {
            const double re = cplx_buf_[i][0] * w_hat_[i][0] - cplx_buf_[i][1] * w_hat_[i][1];
            const double im = cplx_buf_[i][0] * w_hat_[i][1] + cplx_buf_[i][1] * w_hat_[i][0];
            cplx_buf_[i][0] = re;
            cplx_buf_[i][1] = im;
        }
        fftw_execute(bwd_);
        const double scale = 1.0 / static_cast<double>(m_ * m_);
        std::vector<double> out(static_cast<std::size_t>(n_ * n_));
        for (std::int64_t iy = 0; iy < n_; ++iy)
            for (std::int64_t ix = 0; ix < n_; ++ix)
                out[static_cast<std::size_t>(iy * n_ + ix)] =
                    real_buf_[static_cast<std::size_t>(iy * m_ + ix)] * scale;
        return out;
    }

private:
    std::int64_t n_, m_;
    double* real_buf_ = nullptr;
    fftw_complex* cplx_buf_ = nullptr;
    fftw_complex* w_hat_ = nullptr;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

}  // namespace oscdom
