#pragma once

#include <complex>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace jhbl::detail {

// FFTW's planner is not reentrant; execution with the new-array interface is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Unnormalized square 2-D complex DFT, planned once and executed on caller buffers.
// Buffers are n*n complex values in FFTW's row-major layout.
class Fft2 {
public:
    explicit Fft2(int n) : n_(n) {
        if (n <= 0) throw std::invalid_argument("Fft2: size must be positive");
        std::vector<std::complex<double>> buf(static_cast<std::size_t>(n) * n);
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        std::lock_guard lock(fftw_planner_mutex());
        forward_ = fftw_plan_dft_2d(n, n, p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        backward_ = fftw_plan_dft_2d(n, n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!forward_ || !backward_) throw std::runtime_error("Fft2: FFTW planning failed");
    }

    ~Fft2() {
        std::lock_guard lock(fftw_planner_mutex());
        if (forward_) fftw_destroy_plan(forward_);
        if (backward_) fftw_destroy_plan(backward_);
    }

    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    int size() const { return n_; }

    // In place, sign -1 in the exponent.
    void forward(std::vector<std::complex<double>>& data) const { run(forward_, data); }
    // In place, sign +1 in the exponent, no 1/n^2 factor.
    void backward(std::vector<std::complex<double>>& data) const { run(backward_, data); }

private:
    void run(fftw_plan plan, std::vector<std::complex<double>>& data) const {
        if (data.size() != static_cast<std::size_t>(n_) * n_)
            throw std::invalid_argument("Fft2: buffer size mismatch");
        auto* p = reinterpret_cast<fftw_complex*>(data.data());
        fftw_execute_dft(plan, p, p);
    }

    int n_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

}  // namespace jhbl::detail
