#pragma once

#include <complex>
#include <memory>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "jhbl/detail/fft2.hpp"
#include "jhbl/linear_operator.hpp"

namespace jhbl {

// A 2-D frequency (k, l): k pairs with the row index (s), l with the column index (t).
using Frequency = std::pair<int, int>;
using FrequencySet = std::set<Frequency>;

// Lowest and one-past-highest sampled frequency on an n1 grid.
// Even n1: [-n1/2, n1/2). Odd n1: [-(n1-1)/2, (n1+1)/2), so each DFT bin appears once.
inline std::pair<int, int> frequency_range(int n1) { return {-(n1 / 2), n1 - n1 / 2}; }

inline bool in_frequency_window(int n1, const Frequency& f) {
    const auto [lo, hi] = frequency_range(n1);
    return f.first >= lo && f.first < hi && f.second >= lo && f.second < hi;
}

// Discrete Fourier samples of a vectorized n1 x n1 image at every frequency of the
// sampling window except `removed`.
//
// Pixel (a, b) lives at index a + n1*b. The forward map is the unnormalized sum
//   y_{k,l} = sum_{a,b} x(a,b) exp(-i 2 pi (k a + l b) / n1)
// and the output stacks the real parts of all retained samples followed by their
// imaginary parts, so out_dim() == 2 * retained_count().
class FourierSamplingOp final : public LinearOperator {
public:
    FourierSamplingOp(int n1, FrequencySet removed)
        : n1_(n1), removed_(std::move(removed)) {
        if (n1 <= 0) throw std::invalid_argument("FourierSamplingOp: n1 must be positive");
        for (const auto& f : removed_)
            if (!in_frequency_window(n1, f))
                throw std::invalid_argument("FourierSamplingOp: removed frequency outside the sampling window");
        const auto [lo, hi] = frequency_range(n1);
        for (int l = lo; l < hi; ++l)
            for (int k = lo; k < hi; ++k)
                if (!removed_.contains({k, l})) {
                    retained_.push_back({k, l});
                    bins_.push_back(wrap(k) + static_cast<std::size_t>(n1) * wrap(l));
                }
        if (retained_.empty())
            throw std::invalid_argument("FourierSamplingOp: every frequency removed, empty measurement");
        fft_ = std::make_shared<detail::Fft2>(n1);
    }

    Eigen::Index in_dim() const override { return Eigen::Index(n1_) * n1_; }
    Eigen::Index out_dim() const override { return 2 * retained_count(); }
    std::string name() const override { return "FourierSamplingOp"; }

    int n1() const { return n1_; }
    Eigen::Index retained_count() const { return static_cast<Eigen::Index>(retained_.size()); }
    const std::vector<Frequency>& retained() const { return retained_; }
    const FrequencySet& removed() const { return removed_; }

    // Complex sample at a retained position i, from a stacked real vector.
    static std::complex<double> sample(const Vector& y, Eigen::Index i) {
        return {y[i], y[i + y.size() / 2]};
    }

    Vector apply(const Vector& x) const override {
        check_in(x);
        auto buf = to_complex(x);
        fft_->forward(buf);
        const auto m = retained_count();
        Vector y(2 * m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto c = buf[bins_[i]];
            y[i] = c.real();
            y[m + i] = c.imag();
        }
        return y;
    }

    Vector adjoint_apply(const Vector& y) const override {
        check_out(y);
        const auto m = retained_count();
        std::vector<std::complex<double>> buf(static_cast<std::size_t>(n1_) * n1_);
        for (Eigen::Index i = 0; i < m; ++i) buf[bins_[i]] = {y[i], y[m + i]};
        fft_->backward(buf);
        return real_part(buf);
    }

    // A^T A x = Re(F^H P F x), with P the retained-bin mask.
    Vector gram_apply(const Vector& x) const override {
        check_in(x);
        auto buf = to_complex(x);
        fft_->forward(buf);
        std::vector<std::complex<double>> kept(buf.size());
        for (auto bin : bins_) kept[bin] = buf[bin];
        fft_->backward(kept);
        return real_part(kept);
    }

private:
    std::size_t wrap(int k) const { return static_cast<std::size_t>(((k % n1_) + n1_) % n1_); }

    static std::vector<std::complex<double>> to_complex(const Vector& x) {
        std::vector<std::complex<double>> buf(static_cast<std::size_t>(x.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i) buf[i] = x[i];
        return buf;
    }
    static Vector real_part(const std::vector<std::complex<double>>& buf) {
        Vector x(static_cast<Eigen::Index>(buf.size()));
        for (std::size_t i = 0; i < buf.size(); ++i) x[static_cast<Eigen::Index>(i)] = buf[i].real();
        return x;
    }

    int n1_;
    FrequencySet removed_;
    std::vector<Frequency> retained_;
    std::vector<std::size_t> bins_;
    std::shared_ptr<detail::Fft2> fft_;
};

inline std::shared_ptr<const FourierSamplingOp> make_fourier_op(int n1, FrequencySet removed = {}) {
    return std::make_shared<const FourierSamplingOp>(n1, std::move(removed));
}

}  // namespace jhbl
