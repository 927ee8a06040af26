#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "jhbl/linear_operator.hpp"
#include "jhbl/tv.hpp"

namespace jhbl {

// J vectorized n1 x n1 frames; pixel (a, b) at index a + n1*b.
struct ImageSequence {
    int width = 0;
    std::vector<Vector> frames;

    Eigen::Index pixels() const { return Eigen::Index(width) * width; }
    std::size_t count() const { return frames.size(); }

    void validate() const {
        if (width <= 0) throw std::invalid_argument("ImageSequence: width must be positive");
        if (frames.empty()) throw std::invalid_argument("ImageSequence: at least one frame required");
        for (const auto& f : frames) {
            if (f.size() != pixels()) throw std::invalid_argument("ImageSequence: frame length != width^2");
            if (!f.allFinite()) throw std::invalid_argument("ImageSequence: non-finite pixel");
        }
    }
};

// Per-frame data y^(j) and the forward operator that produced it.
struct MeasurementSet {
    std::vector<Vector> data;
    std::vector<OperatorPtr> operators;

    std::size_t count() const { return data.size(); }

    void validate() const {
        if (data.empty()) throw std::invalid_argument("MeasurementSet: no frames");
        if (operators.size() != data.size())
            throw std::invalid_argument("MeasurementSet: one operator per frame required");
        for (std::size_t j = 0; j < data.size(); ++j) {
            if (!operators[j]) throw std::invalid_argument("MeasurementSet: null operator");
            if (data[j].size() != operators[j]->out_dim())
                throw std::invalid_argument("MeasurementSet: frame " + std::to_string(j) +
                                            " data length does not match its operator");
            if (!data[j].allFinite()) throw std::invalid_argument("MeasurementSet: non-finite data");
        }
    }
};

// Gamma hyper-prior shape (eta) and rate (theta) for the noise (alpha), intra-image (beta)
// and inter-image (gamma) precisions.
struct HyperParams {
    double eta_alpha = 1.0;
    double theta_alpha = 1e-3;
    double eta_beta = 1.0;
    double theta_beta = 1e-3;
    double eta_gamma = 2.0;
    double theta_gamma = 1e-3;

    void validate() const {
        for (double v : {eta_alpha, theta_alpha, eta_beta, theta_beta, eta_gamma, theta_gamma})
            if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error("HyperParams: all values must be positive");
    }

    bool operator==(const HyperParams&) const = default;
};

// Current estimates: alpha (one per frame), beta^(j) (length K), gamma^(j-1,j) (length N, J-1 of them).
// gamma is empty for separate recovery.
struct PrecisionState {
    Vector alpha;
    std::vector<Vector> beta;
    std::vector<Vector> gamma;
};

// Mode of Gamma(eta, theta) in the shape/rate parametrization.
inline double gamma_mode(double eta, double theta) {
    if (!(eta > 0.0) || !(theta > 0.0)) throw std::domain_error("gamma_mode: eta and theta must be positive");
    return std::max(0.0, (eta - 1.0) / theta);
}

// Conditional mode of alpha_j given ||F x - y||^2 over m real measurements.
inline double update_alpha(double residual_sq, Eigen::Index m, const HyperParams& hp) {
    const double num = hp.eta_alpha + 0.5 * static_cast<double>(m) - 1.0;
    return num > 0.0 ? num / (hp.theta_alpha + 0.5 * residual_sq) : 0.0;
}

// Conditional mode of beta_k given [R x]_k.
inline double update_beta(double rx_k, const HyperParams& hp) {
    const double num = hp.eta_beta - 0.5;
    return num > 0.0 ? num / (hp.theta_beta + 0.5 * rx_k * rx_k) : 0.0;
}

// Conditional mode of gamma_n given [x^(j-1) - x^(j)]_n.
inline double update_gamma(double diff_n, const HyperParams& hp) {
    const double num = hp.eta_gamma - 0.5;
    return num > 0.0 ? num / (hp.theta_gamma + 0.5 * diff_n * diff_n) : 0.0;
}

namespace detail {

// c * log(p) with 0 * log(0) = 0.
inline double xlogy(double c, double p) {
    if (c == 0.0) return 0.0;
    if (p == 0.0) return c > 0.0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    return c * std::log(p);
}

// Log of one gamma-conditioned factor p^(shape-1) exp(-rate p), shape including the Gaussian's 1/2.
inline double log_factor(double p, double shape_minus_one, double rate) {
    if (p < 0.0) throw std::domain_error("log_joint_density: negative precision entry");
    return xlogy(shape_minus_one, p) - rate * p;
}

}  // namespace detail

// Unnormalized log posterior log p(x, alpha, beta, gamma | y), all constants dropped.
// The coupling terms are present only when p.gamma is non-empty.
inline double log_joint_density(const ImageSequence& x, const PrecisionState& p, const MeasurementSet& y,
                                const RegularizationOp& r, const HyperParams& hp) {
    const std::size_t J = x.count();
    if (y.count() != J || static_cast<std::size_t>(p.alpha.size()) != J || p.beta.size() != J)
        throw std::invalid_argument("log_joint_density: frame count mismatch");
    if (!p.gamma.empty() && p.gamma.size() + 1 != J)
        throw std::invalid_argument("log_joint_density: expected J-1 coupling vectors");

    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        const double res = (y.operators[j]->apply(x.frames[j]) - y.data[j]).squaredNorm();
        const double m = static_cast<double>(y.data[j].size());
        total += detail::log_factor(p.alpha[j], 0.5 * m + hp.eta_alpha - 1.0, hp.theta_alpha + 0.5 * res);

        const Vector rx = r.apply(x.frames[j]);
        if (p.beta[j].size() != rx.size()) throw std::invalid_argument("log_joint_density: beta length != K");
        for (Eigen::Index k = 0; k < rx.size(); ++k)
            total += detail::log_factor(p.beta[j][k], hp.eta_beta - 0.5, hp.theta_beta + 0.5 * rx[k] * rx[k]);
    }
    for (std::size_t j = 1; j < J && !p.gamma.empty(); ++j) {
        const Vector& g = p.gamma[j - 1];
        if (g.size() != x.pixels()) throw std::invalid_argument("log_joint_density: gamma length != N");
        for (Eigen::Index n = 0; n < g.size(); ++n) {
            const double d = x.frames[j - 1][n] - x.frames[j][n];
            total += detail::log_factor(g[n], hp.eta_gamma - 0.5, hp.theta_gamma + 0.5 * d * d);
        }
    }
    return total;
}

}  // namespace jhbl
