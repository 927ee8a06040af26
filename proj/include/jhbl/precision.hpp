#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "jhbl/linear_operator.hpp"
#include "jhbl/tv.hpp"

namespace jhbl {

// Everything needed to apply the conditional precision of one frame,
//   G = alpha F^T F + R^T diag(beta) R + diag(gamma_left) + diag(gamma_right).
// gamma_left couples to the previous frame, gamma_right to the next; first and last
// frames of a sequence carry only one of them, separate recovery carries neither.
struct FramePrecision {
    OperatorPtr forward;
    RegularizationPtr regularization;
    double alpha = 0.0;
    Vector beta;
    std::optional<Vector> gamma_left;
    std::optional<Vector> gamma_right;

    Eigen::Index dim() const { return forward->in_dim(); }

    void validate() const {
        if (!forward || !regularization) throw std::invalid_argument("FramePrecision: missing operator");
        const auto n = forward->in_dim();
        if (regularization->in_dim() != n) throw std::invalid_argument("FramePrecision: F and R disagree on N");
        if (beta.size() != regularization->out_dim()) throw std::invalid_argument("FramePrecision: beta length != K");
        if (gamma_left && gamma_left->size() != n) throw std::invalid_argument("FramePrecision: gamma_left length != N");
        if (gamma_right && gamma_right->size() != n) throw std::invalid_argument("FramePrecision: gamma_right length != N");
    }
};

// Checks that the coupling terms match the frame position j (0-based) within J frames.
inline void check_frame_position(const FramePrecision& fp, std::size_t j, std::size_t J) {
    if (j >= J) throw std::invalid_argument("frame index out of range");
    const bool coupled = fp.gamma_left || fp.gamma_right;
    if (!coupled) return;  // separate recovery
    if (fp.gamma_left.has_value() != (j > 0))
        throw std::invalid_argument("frame " + std::to_string(j) + ": gamma_left must be present iff j > 0");
    if (fp.gamma_right.has_value() != (j + 1 < J))
        throw std::invalid_argument("frame " + std::to_string(j) + ": gamma_right must be present iff j < J-1");
}

inline Vector apply_precision(const FramePrecision& fp, const Vector& x) {
    if (x.size() != fp.dim()) throw std::invalid_argument("apply_precision: image length mismatch");
    if (fp.beta.size() != fp.regularization->out_dim())
        throw std::invalid_argument("apply_precision: beta length != K");
    Vector out = fp.alpha * fp.forward->gram_apply(x);
    const Vector rx = fp.regularization->apply(x);
    out += fp.regularization->adjoint_apply(fp.beta.cwiseProduct(rx));
    if (fp.gamma_left) out += fp.gamma_left->cwiseProduct(x);
    if (fp.gamma_right) out += fp.gamma_right->cwiseProduct(x);
    return out;
}

// b = alpha F^T y + diag(gamma_left) x_left + diag(gamma_right) x_right. The neighbour images
// are those of the previous outer iteration.
inline Vector apply_rhs(const FramePrecision& fp, const Vector& y, const Vector* x_left, const Vector* x_right) {
    if (y.size() != fp.forward->out_dim()) throw std::invalid_argument("apply_rhs: data length mismatch");
    if (fp.gamma_left.has_value() != (x_left != nullptr) || fp.gamma_right.has_value() != (x_right != nullptr))
        throw std::invalid_argument("apply_rhs: neighbour images must accompany their coupling weights");
    Vector b = fp.alpha * fp.forward->adjoint_apply(y);
    if (x_left) {
        if (x_left->size() != b.size()) throw std::invalid_argument("apply_rhs: left neighbour length mismatch");
        b += fp.gamma_left->cwiseProduct(*x_left);
    }
    if (x_right) {
        if (x_right->size() != b.size()) throw std::invalid_argument("apply_rhs: right neighbour length mismatch");
        b += fp.gamma_right->cwiseProduct(*x_right);
    }
    return b;
}

// Conditional Gaussian of one frame: mean and matrix-free precision G = Sigma^{-1}.
struct GaussianPosterior {
    Vector mean;
    FramePrecision precision;

    Vector precision_apply(const Vector& v) const { return apply_precision(precision, v); }
};

inline Eigen::MatrixXd dense_precision(const FramePrecision& fp) {
    const auto n = fp.dim();
    Eigen::MatrixXd g(n, n);
    Vector e = Vector::Zero(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        e[c] = 1.0;
        g.col(c) = apply_precision(fp, e);
        e[c] = 0.0;
    }
    return g;
}

}  // namespace jhbl
