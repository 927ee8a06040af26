#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace jhbl {

using Vector = Eigen::VectorXd;

// Matrix-free real linear map R^in_dim -> R^out_dim.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;

    virtual Eigen::Index in_dim() const = 0;
    virtual Eigen::Index out_dim() const = 0;

    virtual Vector apply(const Vector& x) const = 0;
    virtual Vector adjoint_apply(const Vector& y) const = 0;

    // A^T A x. Overridden where a cheaper route exists.
    virtual Vector gram_apply(const Vector& x) const { return adjoint_apply(apply(x)); }

    virtual std::string name() const = 0;

protected:
    void check_in(const Vector& x) const {
        if (x.size() != in_dim())
            throw std::invalid_argument(name() + ": input length " + std::to_string(x.size()) +
                                        " != " + std::to_string(in_dim()));
    }
    void check_out(const Vector& y) const {
        if (y.size() != out_dim())
            throw std::invalid_argument(name() + ": adjoint input length " + std::to_string(y.size()) +
                                        " != " + std::to_string(out_dim()));
    }
};

using OperatorPtr = std::shared_ptr<const LinearOperator>;

// Explicit matrix wrapper, mostly useful for small test problems.
class MatrixOperator final : public LinearOperator {
public:
    explicit MatrixOperator(Eigen::MatrixXd a) : a_(std::move(a)) {}

    Eigen::Index in_dim() const override { return a_.cols(); }
    Eigen::Index out_dim() const override { return a_.rows(); }

    Vector apply(const Vector& x) const override {
        check_in(x);
        return a_ * x;
    }
    Vector adjoint_apply(const Vector& y) const override {
        check_out(y);
        return a_.transpose() * y;
    }
    std::string name() const override { return "MatrixOperator"; }

    const Eigen::MatrixXd& matrix() const { return a_; }

private:
    Eigen::MatrixXd a_;
};

// Assemble the dense matrix of an operator column by column.
inline Eigen::MatrixXd to_dense(const LinearOperator& op) {
    Eigen::MatrixXd m(op.out_dim(), op.in_dim());
    Vector e = Vector::Zero(op.in_dim());
    for (Eigen::Index c = 0; c < op.in_dim(); ++c) {
        e[c] = 1.0;
        m.col(c) = op.apply(e);
        e[c] = 0.0;
    }
    return m;
}

}  // namespace jhbl
