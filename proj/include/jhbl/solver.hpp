#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "jhbl/detail/parallel.hpp"
#include "jhbl/model.hpp"
#include "jhbl/precision.hpp"

namespace jhbl {

// Non-finite values or a non-SPD precision met during iteration. frame/iteration are -1 when unknown.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, int frame = -1, int iteration = -1)
        : std::runtime_error(describe(what, frame, iteration)), frame_(frame), iteration_(iteration) {}

    int frame() const { return frame_; }
    int iteration() const { return iteration_; }

private:
    static std::string describe(const std::string& what, int frame, int iteration) {
        std::string s = what;
        if (frame >= 0) s += " (frame " + std::to_string(frame);
        if (iteration >= 0) s += std::string(frame >= 0 ? ", " : " (") + "iteration " + std::to_string(iteration);
        if (frame >= 0 || iteration >= 0) s += ")";
        return s;
    }

    int frame_;
    int iteration_;
};

enum class RecoveryMode { Joint, Separate };

struct SolverConfig {
    HyperParams hyper;
    int max_outer_iters = 1000;
    double tol = 1e-3;
    int inner_gd_steps = 5;
    RecoveryMode mode = RecoveryMode::Joint;
    unsigned threads = 0;  // 0: hardware concurrency
    bool record_log_joint = true;

    void validate() const {
        hyper.validate();
        if (max_outer_iters <= 0) throw std::invalid_argument("SolverConfig: max_outer_iters must be positive");
        if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
        if (inner_gd_steps <= 0) throw std::invalid_argument("SolverConfig: inner_gd_steps must be positive");
    }

    bool operator==(const SolverConfig&) const = default;
};

struct IterationRecord {
    double abs_change = 0.0;
    double rel_change = 0.0;
    double log_joint = 0.0;
};

struct SolveResult {
    ImageSequence images;
    PrecisionState precisions;
    std::vector<GaussianPosterior> posteriors;
    int iterations = 0;
    bool converged = false;
    std::vector<IterationRecord> history;
};

// ---------------------------------------------------------------------------
// Parameter updates. Each returns the exact conditional mode given the images.
// ---------------------------------------------------------------------------

inline Vector update_alphas(const ImageSequence& x, const MeasurementSet& y, const HyperParams& hp) {
    Vector alpha(static_cast<Eigen::Index>(x.count()));
    for (std::size_t j = 0; j < x.count(); ++j) {
        const double res = (y.operators[j]->apply(x.frames[j]) - y.data[j]).squaredNorm();
        alpha[j] = update_alpha(res, y.data[j].size(), hp);
    }
    return alpha;
}

inline Vector update_betas(const Vector& frame, const RegularizationOp& r, const HyperParams& hp) {
    return r.apply(frame).unaryExpr([&](double v) { return update_beta(v, hp); });
}

inline Vector update_gammas(const Vector& prev, const Vector& next, const HyperParams& hp) {
    return (prev - next).unaryExpr([&](double d) { return update_gamma(d, hp); });
}

// L(x) = x^T G x - 2 x^T b; its minimizer solves G x = b.
inline double quadratic_objective(const FramePrecision& fp, const Vector& b, const Vector& x) {
    return x.dot(apply_precision(fp, x)) - 2.0 * x.dot(b);
}

// Steepest descent on L with exact line search, a fixed number of steps.
inline Vector x_update(const FramePrecision& fp, const Vector& b, const Vector& x_init, int steps) {
    if (steps <= 0) throw std::invalid_argument("x_update: steps must be positive");
    if (b.size() != fp.dim() || x_init.size() != fp.dim()) throw std::invalid_argument("x_update: length mismatch");
    Vector x = x_init;
    Vector r = b - apply_precision(fp, x);
    for (int s = 0; s < steps; ++s) {
        const double rr = r.squaredNorm();
        if (rr == 0.0) break;
        const Vector gr = apply_precision(fp, r);
        const double curv = r.dot(gr);
        if (!(curv > 0.0)) throw NumericalError("x_update: precision is not positive definite along the descent direction");
        const double step = rr / curv;
        x += step * r;
        r -= step * gr;
    }
    return x;
}

// Same iteration run until ||b - G x|| <= rel_tol * ||b||. Returns the number of steps taken.
inline int solve_to_tolerance(const FramePrecision& fp, const Vector& b, Vector& x, double rel_tol,
                              int max_steps = 1'000'000) {
    const double target = rel_tol * b.norm();
    Vector r = b - apply_precision(fp, x);
    int s = 0;
    for (; s < max_steps; ++s) {
        if (s % 50 == 0 && s > 0) r = b - apply_precision(fp, x);  // limit recurrence drift
        if (r.norm() <= target) return s;
        const Vector gr = apply_precision(fp, r);
        const double curv = r.dot(gr);
        if (!(curv > 0.0)) throw NumericalError("solve_to_tolerance: precision is not positive definite");
        const double step = r.squaredNorm() / curv;
        x += step * r;
        r -= step * gr;
    }
    r = b - apply_precision(fp, x);
    if (r.norm() > target) throw NumericalError("solve_to_tolerance: no convergence within the step limit");
    return s;
}

// Conjugate gradients on G x = b until ||b - G x|| <= rel_tol * ||b||. Returns the iteration count.
inline int conjugate_gradient(const FramePrecision& fp, const Vector& b, Vector& x, double rel_tol,
                              int max_iters = 100'000) {
    const double target = rel_tol * b.norm();
    Vector r = b - apply_precision(fp, x);
    Vector d = r;
    double rr = r.squaredNorm();
    for (int it = 0; it < max_iters; ++it) {
        if (std::sqrt(rr) <= target) return it;
        const Vector gd = apply_precision(fp, d);
        const double curv = d.dot(gd);
        if (!(curv > 0.0)) throw NumericalError("conjugate_gradient: precision is not positive definite");
        const double step = rr / curv;
        x += step * d;
        if ((it + 1) % 50 == 0)
            r = b - apply_precision(fp, x);
        else
            r -= step * gd;
        const double rr_next = r.squaredNorm();
        d = r + (rr_next / rr) * d;
        rr = rr_next;
    }
    if ((b - apply_precision(fp, x)).norm() > target)
        throw NumericalError("conjugate_gradient: no convergence within the iteration limit");
    return max_iters;
}

struct ChangeMetrics {
    double abs_change = 0.0;
    double rel_change = 0.0;
};

// Average absolute and relative l2 change between two sequences. A zero-norm previous
// frame contributes its absolute change to the relative average.
inline ChangeMetrics sequence_change(const ImageSequence& prev, const ImageSequence& curr) {
    if (prev.count() != curr.count() || prev.count() == 0)
        throw std::invalid_argument("stopping_check: sequences differ in frame count");
    ChangeMetrics m;
    for (std::size_t j = 0; j < prev.count(); ++j) {
        if (prev.frames[j].size() != curr.frames[j].size())
            throw std::invalid_argument("stopping_check: frame shapes differ");
        const double d = (curr.frames[j] - prev.frames[j]).norm();
        const double p = prev.frames[j].norm();
        m.abs_change += d;
        m.rel_change += p > 0.0 ? d / p : d;
    }
    const auto J = static_cast<double>(prev.count());
    m.abs_change /= J;
    m.rel_change /= J;
    return m;
}

// True iff both the average absolute and average relative change are below tol.
inline bool stopping_check(const ImageSequence& prev, const ImageSequence& curr, double tol) {
    const auto m = sequence_change(prev, curr);
    return m.abs_change < tol && m.rel_change < tol;
}

// Backprojection F^T y scaled by the least-squares optimal factor c = argmin ||c F F^T y - y||.
inline Vector backprojection(const LinearOperator& f, const Vector& y) {
    Vector bp = f.adjoint_apply(y);
    const Vector fbp = f.apply(bp);
    const double den = fbp.squaredNorm();
    return den > 0.0 ? Vector(bp * (bp.squaredNorm() / den)) : bp;
}

namespace detail {

inline FramePrecision frame_precision(const MeasurementSet& y, const RegularizationPtr& r, const PrecisionState& p,
                                      std::size_t j) {
    FramePrecision fp;
    fp.forward = y.operators[j];
    fp.regularization = r;
    fp.alpha = p.alpha[j];
    fp.beta = p.beta[j];
    if (!p.gamma.empty()) {
        if (j > 0) fp.gamma_left = p.gamma[j - 1];
        if (j + 1 < y.count()) fp.gamma_right = p.gamma[j];
    }
    return fp;
}

}  // namespace detail

// Block coordinate descent on the joint posterior: alpha, beta and (joint mode) gamma are set to
// their conditional modes given the previous images, then every frame takes `inner_gd_steps`
// descent steps on its conditional quadratic using the previous neighbouring images.
inline SolveResult solve(const MeasurementSet& y, const RegularizationPtr& r, const SolverConfig& cfg,
                         std::optional<ImageSequence> x0 = std::nullopt) {
    cfg.validate();
    y.validate();
    if (!r) throw std::invalid_argument("solve: missing regularization operator");
    const std::size_t J = y.count();
    const Eigen::Index N = r->in_dim();
    for (const auto& op : y.operators)
        if (op->in_dim() != N) throw std::invalid_argument("solve: forward operator input size != R input size");
    const bool joint = cfg.mode == RecoveryMode::Joint && J > 1;

    ImageSequence x;
    if (x0) {
        x = std::move(*x0);
        x.validate();
        if (x.count() != J || x.pixels() != N) throw std::invalid_argument("solve: initial sequence has the wrong shape");
    } else if (joint) {
        SolverConfig sep = cfg;
        sep.mode = RecoveryMode::Separate;
        x = solve(y, r, sep).images;
    } else {
        x.width = r->n1();
        x.frames.resize(J);
        for (std::size_t j = 0; j < J; ++j) x.frames[j] = backprojection(*y.operators[j], y.data[j]);
    }

    SolveResult out;
    PrecisionState p;
    std::vector<FramePrecision> systems(J);
    for (int it = 1; it <= cfg.max_outer_iters; ++it) {
        const ImageSequence prev = x;
        p.alpha = update_alphas(prev, y, cfg.hyper);
        p.beta.assign(J, Vector());
        detail::parallel_for(J, cfg.threads, [&](std::size_t j) { p.beta[j] = update_betas(prev.frames[j], *r, cfg.hyper); });
        p.gamma.clear();
        if (joint) {
            p.gamma.resize(J - 1);
            for (std::size_t j = 1; j < J; ++j) p.gamma[j - 1] = update_gammas(prev.frames[j - 1], prev.frames[j], cfg.hyper);
        }

        detail::parallel_for(J, cfg.threads, [&](std::size_t j) {
            systems[j] = detail::frame_precision(y, r, p, j);
            const Vector* left = systems[j].gamma_left ? &prev.frames[j - 1] : nullptr;
            const Vector* right = systems[j].gamma_right ? &prev.frames[j + 1] : nullptr;
            const Vector b = apply_rhs(systems[j], y.data[j], left, right);
            try {
                x.frames[j] = x_update(systems[j], b, prev.frames[j], cfg.inner_gd_steps);
            } catch (const NumericalError& e) {
                throw NumericalError(e.what(), static_cast<int>(j), it);
            }
            if (!x.frames[j].allFinite()) throw NumericalError("non-finite image values", static_cast<int>(j), it);
        });

        const auto change = sequence_change(prev, x);
        IterationRecord rec{change.abs_change, change.rel_change, 0.0};
        if (cfg.record_log_joint) rec.log_joint = log_joint_density(x, p, y, *r, cfg.hyper);
        out.history.push_back(rec);
        out.iterations = it;
        if (change.abs_change < cfg.tol && change.rel_change < cfg.tol) {
            out.converged = true;
            break;
        }
    }

    out.posteriors.resize(J);
    for (std::size_t j = 0; j < J; ++j) out.posteriors[j] = GaussianPosterior{x.frames[j], systems[j]};
    out.images = std::move(x);
    out.precisions = std::move(p);
    return out;
}

}  // namespace jhbl
