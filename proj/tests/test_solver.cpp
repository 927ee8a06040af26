#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace jhbl;
using oracle::MatrixXd;

namespace {

FramePrecision random_frame(std::mt19937_64& rng, int n1, bool left, bool right) {
    FramePrecision fp;
    fp.forward = make_fourier_op(n1, {{1, 2}, {-1, -2}});
    fp.regularization = make_tv_op(1, n1);
    fp.alpha = 0.4;
    fp.beta = oracle::random_vector(rng, fp.regularization->out_dim(), 0.1, 2.0);
    if (left) fp.gamma_left = oracle::random_vector(rng, n1 * n1, 0.0, 1.0);
    if (right) fp.gamma_right = oracle::random_vector(rng, n1 * n1, 0.0, 1.0);
    return fp;
}

// Small moving-ellipse Fourier problem with intensities and noise from the defaults.
struct Problem {
    RunConfig cfg;
    ImageSequence truth;
    MeasurementSet y;
    RegularizationPtr r;
};

Problem problem(int n1, int frames, double snr = 2.0, bool aic = true) {
    Problem p;
    p.cfg = default_config(Modality::Fourier, n1, frames);
    p.cfg.noise.snr.assign(frames, snr);
    p.cfg.forward.anti_inverse_crime = aic;
    p.truth = render_phantom(p.cfg.phantom);
    p.y = synthesize_measurements(p.cfg.phantom, build_operators(p.cfg), p.cfg.noise, aic);
    p.r = make_tv_op(1, n1);
    return p;
}

bool bitwise_equal(const ImageSequence& a, const ImageSequence& b) {
    if (a.count() != b.count()) return false;
    for (std::size_t j = 0; j < a.count(); ++j)
        if (a.frames[j] != b.frames[j]) return false;
    return true;
}

}  // namespace

TEST(SolverConfig, Defaults) {
    const SolverConfig c;
    EXPECT_EQ(c.max_outer_iters, 1000);
    EXPECT_EQ(c.tol, 1e-3);
    EXPECT_EQ(c.inner_gd_steps, 5);
    EXPECT_EQ(c.hyper, (HyperParams{1.0, 1e-3, 1.0, 1e-3, 2.0, 1e-3}));
}

TEST(SolverConfig, Validation) {
    SolverConfig c;
    c.max_outer_iters = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.inner_gd_steps = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.hyper.eta_beta = 0.0;
    EXPECT_THROW(c.validate(), std::domain_error);
}

TEST(XUpdate, StationaryPointUnchanged) {
    std::mt19937_64 rng(1);
    const auto fp = random_frame(rng, 6, true, false);
    const Vector x = oracle::random_vector(rng, 36);
    const Vector b = apply_precision(fp, x);
    EXPECT_LT(oracle::rel_diff(x_update(fp, b, x, 5), x), 1e-12);
}

TEST(XUpdate, FirstStepFromZero) {
    std::mt19937_64 rng(2);
    const auto fp = random_frame(rng, 6, false, true);
    const Vector b = oracle::random_vector(rng, 36);
    const Vector want = (b.squaredNorm() / b.dot(apply_precision(fp, b))) * b;
    EXPECT_LT(oracle::rel_diff(x_update(fp, b, Vector::Zero(36), 1), want), 1e-14);
}

TEST(XUpdate, ObjectiveNonIncreasing) {
    std::mt19937_64 rng(3);
    const auto fp = random_frame(rng, 8, true, true);
    const Vector b = oracle::random_vector(rng, 64);
    Vector x = oracle::random_vector(rng, 64);
    double l = quadratic_objective(fp, b, x);
    for (int s = 0; s < 50; ++s) {
        x = x_update(fp, b, x, 1);
        const double next = quadratic_objective(fp, b, x);
        EXPECT_LE(next, l + 1e-12 * std::abs(l));
        l = next;
    }
}

TEST(XUpdate, ConvergesToDenseSolve) {
    std::mt19937_64 rng(4);
    for (auto [l, r] : {std::pair{false, true}, std::pair{true, true}, std::pair{true, false}}) {
        const auto fp = random_frame(rng, 6, l, r);
        const Vector b = oracle::random_vector(rng, 36);
        const Vector want = dense_precision(fp).ldlt().solve(b);
        Vector x = x_update(fp, b, Vector::Zero(36), 20000);
        EXPECT_LT(oracle::rel_diff(x, want), 1e-8);
        Vector y = Vector::Zero(36), z = Vector::Zero(36);
        solve_to_tolerance(fp, b, y, 1e-12);
        conjugate_gradient(fp, b, z, 1e-12);
        EXPECT_LT(oracle::rel_diff(y, want), 1e-8);
        EXPECT_LT(oracle::rel_diff(z, want), 1e-8);
    }
}

TEST(XUpdate, NonSpdIsNumericalError) {
    std::mt19937_64 rng(5);
    auto fp = random_frame(rng, 6, false, false);
    fp.alpha = 0.0;
    fp.beta.setZero();
    EXPECT_THROW(x_update(fp, Vector::Ones(36), Vector::Zero(36), 3), NumericalError);
    EXPECT_THROW(x_update(fp, Vector::Ones(36), Vector::Zero(36), 0), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Stopping rule
// ---------------------------------------------------------------------------

TEST(StoppingCheck, Examples) {
    std::mt19937_64 rng(6);
    const double tol = 1e-3;
    ImageSequence prev{3, {}};
    for (int j = 0; j < 3; ++j) prev.frames.push_back(oracle::random_vector(rng, 9, -0.3, 0.3));
    EXPECT_TRUE(stopping_check(prev, prev, tol));

    ImageSequence one = prev;
    Vector bump = oracle::random_vector(rng, 9);
    one.frames[1] += bump * (3 * tol * 2 / bump.norm());
    EXPECT_NEAR(sequence_change(prev, one).abs_change, 2 * tol, 1e-15);
    EXPECT_FALSE(stopping_check(prev, one, tol));

    ImageSequence scaled = prev;
    for (auto& f : scaled.frames) {
        ASSERT_LT(f.norm(), 1.0);
        f *= 1.0 + 5e-4;
    }
    EXPECT_TRUE(stopping_check(prev, scaled, tol));
}

TEST(StoppingCheck, NeedsBothAverages) {
    ImageSequence prev{1, {Vector::Constant(1, 100.0)}}, curr = prev;
    curr.frames[0][0] += 0.01;  // relative 1e-4, absolute 1e-2
    EXPECT_FALSE(stopping_check(prev, curr, 1e-3));
    prev.frames[0][0] = 1e-4;
    curr.frames[0][0] = 2e-4;  // absolute 1e-4, relative 1
    EXPECT_FALSE(stopping_check(prev, curr, 1e-3));
}

TEST(StoppingCheck, ZeroNormPreviousFrame) {
    ImageSequence prev{1, {Vector::Zero(4)}}, curr = prev;
    curr.frames[0][0] = 5e-4;
    EXPECT_TRUE(stopping_check(prev, curr, 1e-3));
    curr.frames[0][0] = 5e-3;
    EXPECT_FALSE(stopping_check(prev, curr, 1e-3));
}

TEST(StoppingCheck, ShapeMismatch) {
    ImageSequence a{2, {Vector::Zero(4)}}, b{2, {Vector::Zero(4), Vector::Zero(4)}};
    EXPECT_THROW(stopping_check(a, b, 1e-3), std::invalid_argument);
    ImageSequence c{2, {Vector::Zero(9)}};
    EXPECT_THROW(stopping_check(a, c, 1e-3), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Outer loop
// ---------------------------------------------------------------------------

TEST(Solve, HistoryAndIterationContract) {
    auto p = problem(12, 2);
    p.cfg.solver.max_outer_iters = 25;
    const auto res = solve(p.y, p.r, p.cfg.solver);
    EXPECT_LE(res.iterations, 25);
    EXPECT_EQ(static_cast<int>(res.history.size()), res.iterations);
    EXPECT_EQ(res.posteriors.size(), 2u);
    EXPECT_EQ(res.precisions.gamma.size(), 1u);
    for (const auto& h : res.history) EXPECT_TRUE(std::isfinite(h.log_joint));
}

TEST(Solve, SingleFrameJointEqualsSeparate) {
    auto p = problem(12, 1);
    p.cfg.solver.max_outer_iters = 40;
    p.cfg.solver.mode = RecoveryMode::Separate;
    const auto sep = solve(p.y, p.r, p.cfg.solver);
    p.cfg.solver.mode = RecoveryMode::Joint;
    const auto joint = solve(p.y, p.r, p.cfg.solver);
    EXPECT_TRUE(bitwise_equal(sep.images, joint.images));
    EXPECT_TRUE(joint.precisions.gamma.empty());
}

TEST(Solve, GsblLimitEqualsSeparate) {
    auto p = problem(12, 3);
    p.cfg.solver.max_outer_iters = 60;
    p.cfg.solver.hyper.eta_gamma = 0.5;
    ImageSequence x0{12, {}};
    for (std::size_t j = 0; j < 3; ++j) x0.frames.push_back(backprojection(*p.y.operators[j], p.y.data[j]));
    p.cfg.solver.mode = RecoveryMode::Separate;
    const auto sep = solve(p.y, p.r, p.cfg.solver, x0);
    p.cfg.solver.mode = RecoveryMode::Joint;
    const auto joint = solve(p.y, p.r, p.cfg.solver, x0);
    EXPECT_TRUE(bitwise_equal(sep.images, joint.images));
    for (const auto& g : joint.precisions.gamma) EXPECT_TRUE(g.isZero());
}

TEST(Solve, SeparateFramesAreIndependent) {
    auto p = problem(10, 3);
    p.cfg.solver.mode = RecoveryMode::Separate;
    p.cfg.solver.max_outer_iters = 30;
    p.cfg.solver.tol = 1e-300;  // fixed iteration count so per-frame runs line up
    const auto all = solve(p.y, p.r, p.cfg.solver);
    for (std::size_t j = 0; j < 3; ++j) {
        MeasurementSet single{{p.y.data[j]}, {p.y.operators[j]}};
        const auto one = solve(single, p.r, p.cfg.solver);
        EXPECT_EQ(one.images.frames[0], all.images.frames[j]) << j;
    }
}

TEST(Solve, ThreadCountDoesNotChangeResults) {
    auto p = problem(12, 4);
    p.cfg.solver.max_outer_iters = 30;
    p.cfg.solver.threads = 1;
    const auto seq = solve(p.y, p.r, p.cfg.solver);
    p.cfg.solver.threads = 3;
    const auto par = solve(p.y, p.r, p.cfg.solver);
    EXPECT_TRUE(bitwise_equal(seq.images, par.images));
    EXPECT_EQ(seq.iterations, par.iterations);
}

TEST(Solve, NoiselessFullDataRecoversPhantom) {
    auto p = problem(16, 1, std::numeric_limits<double>::infinity(), false);
    p.cfg.forward.remove_bands = false;
    p.y = synthesize_measurements(p.truth, build_operators(p.cfg), p.cfg.noise);
    p.cfg.solver.hyper.theta_alpha = p.cfg.solver.hyper.theta_beta = 1e-8;
    const auto res = solve(p.y, p.r, p.cfg.solver);
    EXPECT_LT(oracle::rel_diff(res.images.frames[0], p.truth.frames[0]), 1e-2);
}

TEST(Solve, CouplingMonotoneInHyperParameters) {
    auto p = problem(12, 3);
    p.cfg.solver.max_outer_iters = 50;
    const auto x = solve(p.y, p.r, p.cfg.solver).images;
    auto mean_gamma = [&](double eta, double theta) {
        HyperParams hp;
        hp.eta_gamma = eta;
        hp.theta_gamma = theta;
        double s = 0.0;
        for (std::size_t j = 1; j < x.count(); ++j) s += update_gammas(x.frames[j - 1], x.frames[j], hp).mean();
        return s;
    };
    EXPECT_GT(mean_gamma(4.0, 1e-3), mean_gamma(0.8, 1e-3));
    EXPECT_LT(mean_gamma(2.0, 1e-3 * 1e6), mean_gamma(2.0, 1e-3));
}

TEST(Solve, NonFiniteReportsFrameAndIteration) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(16, 16);
    a(3, 3) = std::numeric_limits<double>::quiet_NaN();
    MeasurementSet y{{Vector::Ones(16)}, {std::make_shared<MatrixOperator>(a)}};
    try {
        solve(y, make_tv_op(1, 4), SolverConfig{});
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_EQ(e.frame(), 0);
        EXPECT_EQ(e.iteration(), 1);
    }
}

TEST(Solve, RejectsMismatchedInputs) {
    auto p = problem(8, 2);
    EXPECT_THROW(solve(p.y, make_tv_op(1, 9), p.cfg.solver), std::invalid_argument);
    ImageSequence bad{8, {Vector::Zero(64)}};
    EXPECT_THROW(solve(p.y, p.r, p.cfg.solver, bad), std::invalid_argument);
}

TEST(Backprojection, LeastSquaresScale) {
    std::mt19937_64 rng(7);
    const auto f = make_fourier_op(8, {{1, 1}, {-1, -1}});
    const Vector y = oracle::random_vector(rng, f->out_dim());
    const Vector bp = f->adjoint_apply(y), x = backprojection(*f, y);
    const Vector fbp = f->apply(bp);
    const double c = fbp.dot(y) / fbp.squaredNorm();
    EXPECT_LT(oracle::rel_diff(x, c * bp), 1e-12);
}
