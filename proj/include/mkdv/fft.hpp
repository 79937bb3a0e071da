#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace mkdv::fft {

/// FFTW planning is not thread-safe; execution on distinct buffers is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

/// Real-to-complex / complex-to-real transform pair of fixed length n with
/// its own scratch buffers. FFTW_ESTIMATE planning keeps results deterministic.
class RealPlan {
public:
    explicit RealPlan(std::size_t n)
        : n_(n),
          real_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
          cplx_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, cplx_, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), cplx_, real_, FFTW_ESTIMATE);
    }

    RealPlan(const RealPlan&) = delete;
    RealPlan& operator=(const RealPlan&) = delete;

    ~RealPlan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(backward_);
        fftw_destroy_plan(forward_);
        fftw_free(cplx_);
        fftw_free(real_);
    }

    std::size_t size() const noexcept { return n_; }

    /// Unnormalized forward transform: out_m = sum_j in_j e^{-2 pi i j m / n}.
    void forward(std::span<const double> in, std::span<std::complex<double>> out) {
        std::copy(in.begin(), in.end(), real_);
        fftw_execute(forward_);
        auto* c = reinterpret_cast<std::complex<double>*>(cplx_);
        std::copy(c, c + n_ / 2 + 1, out.begin());
    }

    /// Unnormalized backward transform (c2r); the imaginary parts of the
    /// zero and Nyquist coefficients are ignored.
    void backward(std::span<const std::complex<double>> in, std::span<double> out) {
        auto* c = reinterpret_cast<std::complex<double>*>(cplx_);
        std::copy(in.begin(), in.end(), c);
        fftw_execute(backward_);
        std::copy(real_, real_ + n_, out.begin());
    }

private:
    std::size_t n_;
    double* real_;
    fftw_complex* cplx_;
    fftw_plan forward_{};
    fftw_plan backward_{};
};

/// Complex-to-complex forward transform, used for complex packet fields.
inline std::vector<std::complex<double>> forward_complex(std::span<const std::complex<double>> in) {
    const std::size_t n = in.size();
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    auto* c = reinterpret_cast<std::complex<double>*>(buf);
    std::copy(in.begin(), in.end(), c);
    fftw_execute(plan);
    std::vector<std::complex<double>> out(c, c + n);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);
    return out;
}

}  // namespace mkdv::fft
