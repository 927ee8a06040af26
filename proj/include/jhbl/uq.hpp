#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "jhbl/detail/parallel.hpp"
#include "jhbl/precision.hpp"
#include "jhbl/solver.hpp"

namespace jhbl {

enum class VarianceMethod { Exact, Stochastic };
enum class ProbeSolver { ConjugateGradient, SteepestDescent };

struct VarianceOptions {
    VarianceMethod method = VarianceMethod::Exact;
    int probes = 100;
    std::uint64_t seed = 0;
    Eigen::Index exact_cap = 4096;
    double solve_tol = 1e-8;
    ProbeSolver probe_solver = ProbeSolver::ConjugateGradient;
    unsigned threads = 0;
};

// Pixelwise marginal variances diag(G^{-1}) of a frame's conditional Gaussian.
//
// Exact assembles G densely and inverts it through a Cholesky factorization. Stochastic uses
// the probe estimator diag(G^{-1}) ~ (1/S) sum_s z_s .* G^{-1} z_s with Rademacher z_s, each
// solve run to a relative residual of opts.solve_tol. Probe s draws from
// its own generator seeded by (seed, s), and the sum runs in probe order, so the estimate only
// depends on the seed.
inline Vector posterior_variance(const GaussianPosterior& post, const VarianceOptions& opts = {}) {
    const FramePrecision& fp = post.precision;
    fp.validate();
    const auto n = fp.dim();
    if (opts.method == VarianceMethod::Exact) {
        if (n > opts.exact_cap)
            throw std::invalid_argument("posterior_variance: N = " + std::to_string(n) + " exceeds the exact cap " +
                                        std::to_string(opts.exact_cap) + "; use the stochastic method");
        const Eigen::MatrixXd g = dense_precision(fp);
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success) throw NumericalError("posterior_variance: precision is not positive definite");
        return llt.solve(Eigen::MatrixXd::Identity(n, n)).diagonal();
    }

    if (opts.probes <= 0) throw std::invalid_argument("posterior_variance: probes must be positive");
    std::vector<Vector> contrib(static_cast<std::size_t>(opts.probes));
    detail::parallel_for(contrib.size(), opts.threads, [&](std::size_t s) {
        std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                          static_cast<std::uint32_t>(s), 0x75717072u};
        std::mt19937_64 rng(seq);
        std::bernoulli_distribution coin(0.5);
        Vector z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = coin(rng) ? 1.0 : -1.0;
        Vector u = Vector::Zero(n);
        if (opts.probe_solver == ProbeSolver::ConjugateGradient)
            conjugate_gradient(fp, z, u, opts.solve_tol);
        else
            solve_to_tolerance(fp, z, u, opts.solve_tol);
        contrib[s] = z.cwiseProduct(u);
    });
    Vector sum = Vector::Zero(n);
    for (const auto& c : contrib) sum += c;
    return sum / static_cast<double>(opts.probes);
}

struct EdgeMap {
    Vector vertical;    // first block of R
    Vector horizontal;  // second block of R
    Vector combined;    // (vertical + horizontal) / 2
};

namespace detail {

inline double edge_indicator(double precision) { return 1.0 / (1.0 + precision); }

}  // namespace detail

// Edge indicators 1/(1 + beta_k) placed on the pixel grid. First-order stencils land on their
// top (first block) or left (second block) pixel; second-order stencils spread over the three
// pixels they touch and overlapping contributions are averaged. Pixels no stencil reaches are 0.
inline EdgeMap edge_map(const Vector& beta, const RegularizationOp& r) {
    if (beta.size() != r.out_dim())
        throw std::invalid_argument("edge_map: beta length " + std::to_string(beta.size()) + " != K = " +
                                    std::to_string(r.out_dim()));
    const Eigen::Index n = r.n1(), m = r.stencil_count(), half = r.block_rows();
    const Eigen::Index span = r.order() == 1 ? 1 : 3;
    Vector vsum = Vector::Zero(n * n), vcnt = Vector::Zero(n * n);
    Vector hsum = Vector::Zero(n * n), hcnt = Vector::Zero(n * n);
    for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index i = 0; i < m; ++i) {
            const double e = detail::edge_indicator(beta[i + m * b]);
            for (Eigen::Index q = 0; q < span; ++q) {
                vsum[(i + q) + n * b] += e;
                vcnt[(i + q) + n * b] += 1.0;
            }
        }
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index a = 0; a < n; ++a) {
            const double e = detail::edge_indicator(beta[half + a + n * i]);
            for (Eigen::Index q = 0; q < span; ++q) {
                hsum[a + n * (i + q)] += e;
                hcnt[a + n * (i + q)] += 1.0;
            }
        }
    EdgeMap out;
    auto average = [](const Vector& s, const Vector& c) {
        Vector v(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) v[i] = c[i] > 0.0 ? s[i] / c[i] : 0.0;
        return v;
    };
    out.vertical = average(vsum, vcnt);
    out.horizontal = average(hsum, hcnt);
    out.combined = 0.5 * (out.vertical + out.horizontal);
    return out;
}

// Change indicator 1/(1 + gamma_n): near 1 where consecutive frames decouple.
inline Vector change_mask(const Vector& gamma) {
    if ((gamma.array() < 0.0).any()) throw std::domain_error("change_mask: negative coupling precision");
    return gamma.unaryExpr([](double g) { return detail::edge_indicator(g); });
}

}  // namespace jhbl
