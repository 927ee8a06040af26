#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "jhbl/detail/fft2.hpp"
#include "jhbl/linear_operator.hpp"

namespace jhbl {

// Midpoint-quadrature discretization of convolution on [0,1]^2 with the Gaussian kernel
//   k(s,t) = exp(-(s^2 + t^2) / (2 g^2)) / (2 pi g^2),  g = blur_gamma.
// Output pixel (a,b) = (1/n1^2) sum_{a',b'} k(s_a - s_a', t_b - t_b') x(a',b'), i.e. zero
// extension outside the unit square. Evaluated as a circular convolution on a 2*n1 grid.
class GaussianBlurOp final : public LinearOperator {
public:
    GaussianBlurOp(int n1, double blur_gamma) : n1_(n1), gamma_(blur_gamma), pad_(2 * n1) {
        if (n1 <= 0) throw std::invalid_argument("GaussianBlurOp: n1 must be positive");
        if (!(blur_gamma > 0.0) || !std::isfinite(blur_gamma))
            throw std::invalid_argument("GaussianBlurOp: blur_gamma must be positive");
        fft_ = std::make_shared<detail::Fft2>(pad_);
        std::vector<std::complex<double>> h(static_cast<std::size_t>(pad_) * pad_);
        for (int db = -(n1 - 1); db <= n1 - 1; ++db)
            for (int da = -(n1 - 1); da <= n1 - 1; ++da)
                h[wrap(da) + static_cast<std::size_t>(pad_) * wrap(db)] = weight(da) * weight(db);
        fft_->forward(h);
        spectrum_ = std::move(h);
    }

    Eigen::Index in_dim() const override { return Eigen::Index(n1_) * n1_; }
    Eigen::Index out_dim() const override { return in_dim(); }
    std::string name() const override { return "GaussianBlurOp"; }

    int n1() const { return n1_; }
    double blur_gamma() const { return gamma_; }

    // One-axis quadrature weight for a pixel offset d: g(d/n1)/n1 with g the 1-D Gaussian density.
    double weight(int d) const {
        const double s = static_cast<double>(d) / n1_;
        return std::exp(-s * s / (2.0 * gamma_ * gamma_)) / (std::sqrt(2.0 * std::numbers::pi) * gamma_ * n1_);
    }

    Vector apply(const Vector& x) const override {
        check_in(x);
        return convolve(x, false);
    }
    Vector adjoint_apply(const Vector& y) const override {
        check_out(y);
        return convolve(y, true);
    }

private:
    std::size_t wrap(int d) const { return static_cast<std::size_t>(((d % pad_) + pad_) % pad_); }

    Vector convolve(const Vector& x, bool conjugate) const {
        const auto p = static_cast<std::size_t>(pad_);
        std::vector<std::complex<double>> buf(p * p);
        for (int b = 0; b < n1_; ++b)
            for (int a = 0; a < n1_; ++a) buf[a + p * b] = x[a + Eigen::Index(n1_) * b];
        fft_->forward(buf);
        for (std::size_t i = 0; i < buf.size(); ++i)
            buf[i] *= conjugate ? std::conj(spectrum_[i]) : spectrum_[i];
        fft_->backward(buf);
        const double scale = 1.0 / static_cast<double>(p * p);
        Vector y(in_dim());
        for (int b = 0; b < n1_; ++b)
            for (int a = 0; a < n1_; ++a) y[a + Eigen::Index(n1_) * b] = buf[a + p * b].real() * scale;
        return y;
    }

    int n1_;
    double gamma_;
    int pad_;
    std::shared_ptr<detail::Fft2> fft_;
    std::vector<std::complex<double>> spectrum_;
};

inline std::shared_ptr<const GaussianBlurOp> make_blur_op(int n1, double blur_gamma) {
    return std::make_shared<const GaussianBlurOp>(n1, blur_gamma);
}

}  // namespace jhbl
