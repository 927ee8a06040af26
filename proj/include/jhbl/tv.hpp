#pragma once

#include <array>
#include <memory>
#include <span>
#include <stdexcept>

#include "jhbl/linear_operator.hpp"

namespace jhbl {

// Anisotropic TV operator R = [I (x) D; D (x) I] on column-major vectorized n1 x n1 images,
// with D the (n1 - order) x n1 forward difference of the given order:
//   order 1: rows (-1, 1)      order 2: rows (-1, 2, -1)
// With pixel (a, b) at a + n1*b, the first block differences along a (within each column)
// and the second along b. Row layout: first block entry (i, b) at i + (n1-order)*b,
// second block entry (a, i) at K/2 + a + n1*i.
class RegularizationOp final : public LinearOperator {
public:
    RegularizationOp(int order, int n1) : order_(order), n1_(n1) {
        if (order != 1 && order != 2) throw std::invalid_argument("RegularizationOp: order must be 1 or 2");
        if (n1 <= order) throw std::invalid_argument("RegularizationOp: n1 must exceed the order");
    }

    Eigen::Index in_dim() const override { return Eigen::Index(n1_) * n1_; }
    Eigen::Index out_dim() const override { return 2 * block_rows(); }
    std::string name() const override { return "RegularizationOp"; }

    int order() const { return order_; }
    int n1() const { return n1_; }
    int stencil_count() const { return n1_ - order_; }
    Eigen::Index block_rows() const { return Eigen::Index(n1_) * stencil_count(); }

    std::span<const double> stencil() const {
        return order_ == 1 ? std::span<const double>(kFirst) : std::span<const double>(kSecond);
    }

    Vector apply(const Vector& x) const override {
        check_in(x);
        const auto st = stencil();
        const Eigen::Index n = n1_, m = stencil_count(), half = block_rows();
        Vector y = Vector::Zero(out_dim());
        for (Eigen::Index b = 0; b < n; ++b)
            for (Eigen::Index i = 0; i < m; ++i) {
                double s = 0.0;
                for (std::size_t q = 0; q < st.size(); ++q) s += st[q] * x[(i + q) + n * b];
                y[i + m * b] = s;
            }
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index a = 0; a < n; ++a) {
                double s = 0.0;
                for (std::size_t q = 0; q < st.size(); ++q) s += st[q] * x[a + n * (i + q)];
                y[half + a + n * i] = s;
            }
        return y;
    }

    Vector adjoint_apply(const Vector& y) const override {
        check_out(y);
        const auto st = stencil();
        const Eigen::Index n = n1_, m = stencil_count(), half = block_rows();
        Vector x = Vector::Zero(in_dim());
        for (Eigen::Index b = 0; b < n; ++b)
            for (Eigen::Index i = 0; i < m; ++i) {
                const double v = y[i + m * b];
                for (std::size_t q = 0; q < st.size(); ++q) x[(i + q) + n * b] += st[q] * v;
            }
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index a = 0; a < n; ++a) {
                const double v = y[half + a + n * i];
                for (std::size_t q = 0; q < st.size(); ++q) x[a + n * (i + q)] += st[q] * v;
            }
        return x;
    }

private:
    static constexpr std::array<double, 2> kFirst{-1.0, 1.0};
    static constexpr std::array<double, 3> kSecond{-1.0, 2.0, -1.0};

    int order_;
    int n1_;
};

using RegularizationPtr = std::shared_ptr<const RegularizationOp>;

inline RegularizationPtr make_tv_op(int order, int n1) {
    return std::make_shared<const RegularizationOp>(order, n1);
}

}  // namespace jhbl
