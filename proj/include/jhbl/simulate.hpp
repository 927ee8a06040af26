#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "jhbl/blur.hpp"
#include "jhbl/detail/fft2.hpp"
#include "jhbl/fourier.hpp"
#include "jhbl/model.hpp"

namespace jhbl {

enum class ShapeKind { Ellipse, Rectangle };

// A shape on [0,1]^2. Center and semi-axes are in domain units, s (rows) first. Motion is
// per frame: rotation in radians, translation in pixels of the phantom's n1 grid.
struct Shape {
    ShapeKind kind = ShapeKind::Ellipse;
    std::array<double, 2> center{0.5, 0.5};
    std::array<double, 2> semi_axes{0.1, 0.1};
    double angle = 0.0;
    double intensity = 1.0;
    double rotation_rate = 0.0;
    std::array<double, 2> translation{0.0, 0.0};

    bool moving() const { return rotation_rate != 0.0 || translation[0] != 0.0 || translation[1] != 0.0; }
    bool operator==(const Shape&) const = default;
};

struct PhantomSpec {
    int n1 = 64;
    int frames = 4;
    std::vector<Shape> background;  // static
    std::vector<Shape> ellipses;    // may move

    bool operator==(const PhantomSpec&) const = default;
};

struct NoiseSpec {
    std::vector<double> snr;  // one per frame
    std::uint64_t seed = 0;

    bool operator==(const NoiseSpec&) const = default;
};

namespace detail {

struct Placement {
    double cs, ct, phi;
};

// Position of a shape at frame j, with translation measured on a grid of width n1.
inline Placement place(const Shape& sh, int j, int n1) {
    return {sh.center[0] + j * sh.translation[0] / n1, sh.center[1] + j * sh.translation[1] / n1,
            sh.angle + j * sh.rotation_rate};
}

inline bool covers(const Shape& sh, const Placement& pl, double s, double t) {
    const double ds = s - pl.cs, dt = t - pl.ct;
    const double c = std::cos(pl.phi), sn = std::sin(pl.phi);
    const double u = (c * ds + sn * dt) / sh.semi_axes[0];
    const double v = (-sn * ds + c * dt) / sh.semi_axes[1];
    if (sh.kind == ShapeKind::Ellipse) return u * u + v * v <= 1.0;
    return std::abs(u) <= 1.0 && std::abs(v) <= 1.0;
}

inline std::array<double, 2> half_extent(const Shape& sh, double phi) {
    const double c = std::abs(std::cos(phi)), s = std::abs(std::sin(phi));
    const double a = sh.semi_axes[0], b = sh.semi_axes[1];
    if (sh.kind == ShapeKind::Ellipse)
        return {std::hypot(a * c, b * s), std::hypot(a * s, b * c)};
    return {a * c + b * s, a * s + b * c};
}

}  // namespace detail

inline void validate_phantom(const PhantomSpec& spec) {
    if (spec.n1 <= 0 || spec.frames <= 0) throw std::invalid_argument("PhantomSpec: n1 and frames must be positive");
    for (const auto& sh : spec.background)
        if (sh.moving()) throw std::invalid_argument("PhantomSpec: background shapes must be static");
    auto check = [&](const Shape& sh) {
        if (!(sh.semi_axes[0] > 0.0) || !(sh.semi_axes[1] > 0.0))
            throw std::invalid_argument("PhantomSpec: semi-axes must be positive");
        for (int j = 0; j < spec.frames; ++j) {
            const auto pl = detail::place(sh, j, spec.n1);
            const auto ext = detail::half_extent(sh, pl.phi);
            if (pl.cs - ext[0] < 0.0 || pl.cs + ext[0] > 1.0 || pl.ct - ext[1] < 0.0 || pl.ct + ext[1] > 1.0)
                throw std::invalid_argument("PhantomSpec: shape leaves the unit square at frame " + std::to_string(j));
        }
    };
    for (const auto& sh : spec.background) check(sh);
    for (const auto& sh : spec.ellipses) check(sh);
}

// Rasterize every frame on a grid of `width` pixels (defaults to spec.n1) by midpoint containment.
inline ImageSequence render_phantom(const PhantomSpec& spec, int width = 0) {
    validate_phantom(spec);
    if (width == 0) width = spec.n1;
    ImageSequence seq;
    seq.width = width;
    seq.frames.assign(spec.frames, Vector::Zero(Eigen::Index(width) * width));
    for (int j = 0; j < spec.frames; ++j) {
        Vector& img = seq.frames[j];
        auto paint = [&](const Shape& sh) {
            const auto pl = detail::place(sh, j, spec.n1);
            for (int b = 0; b < width; ++b)
                for (int a = 0; a < width; ++a)
                    if (detail::covers(sh, pl, (a + 0.5) / width, (b + 0.5) / width))
                        img[a + Eigen::Index(width) * b] += sh.intensity;
        };
        for (const auto& sh : spec.background) paint(sh);
        for (const auto& sh : spec.ellipses) paint(sh);
    }
    return seq;
}

// Gray levels are integers on a 0-255 style scale; the SNR calibration is not scale
// invariant, so these levels set the effective noise level at a given SNR.
// Head-like static background with a rotating left ellipse and a down-moving right ellipse.
// With pixel_quantized the left ellipse does not rotate and translations are whole pixels,
// so frames differ by exact pixel shifts.
inline PhantomSpec moving_ellipse_phantom(int n1, int frames, bool pixel_quantized = false) {
    PhantomSpec spec;
    spec.n1 = n1;
    spec.frames = frames;
    spec.background.push_back({ShapeKind::Ellipse, {0.5, 0.5}, {0.44, 0.38}, 0.0, 20.0});
    spec.background.push_back({ShapeKind::Rectangle, {0.72, 0.5}, {0.05, 0.12}, 0.0, 15.0});
    spec.background.push_back({ShapeKind::Ellipse, {0.5, 0.5}, {0.05, 0.05}, 0.0, 25.0});

    Shape left{ShapeKind::Ellipse, {0.42, 0.3}, {0.13, 0.06}, 0.0, 30.0};
    Shape right{ShapeKind::Ellipse, {0.3, 0.7}, {0.08, 0.08}, 0.0, 40.0};
    const double step = std::max(1.0, std::round(n1 / 32.0));
    if (pixel_quantized) {
        left.translation = {0.0, step};
    } else {
        left.rotation_rate = 0.3;
    }
    right.translation = {step, 0.0};
    spec.ellipses = {left, right};
    return spec;
}

// Symmetric band K_j = {(k,l): w j + 1 <= |k|,|l| <= w j + w} with w = band_width, restricted to
// frequencies whose negation is also sampled on an n1 grid.
struct BandSet {
    FrequencySet frequencies;
    bool clipped = false;
};

inline BandSet remove_bands(int j, int n1, int band_width = 10) {
    if (j < 0 || n1 <= 0 || band_width <= 0) throw std::invalid_argument("remove_bands: invalid arguments");
    BandSet out;
    const int lo = band_width * j + 1, hi = band_width * j + band_width;
    const int limit = n1 - n1 / 2 - 1;  // largest |k| with both k and -k in the window
    for (int ak = lo; ak <= hi; ++ak)
        for (int al = lo; al <= hi; ++al) {
            if (ak > limit || al > limit) {
                out.clipped = true;
                continue;
            }
            for (int sk : {-1, 1})
                for (int sl : {-1, 1}) out.frequencies.insert({sk * ak, sl * al});
        }
    return out;
}

// Invert SNR = 10 log10(alpha * dc) for the noise precision.
inline double alpha_from_snr(double snr, double dc_value) {
    if (!(dc_value > 0.0)) throw std::domain_error("alpha_from_snr: dc_value must be positive");
    return std::pow(10.0, snr / 10.0) / dc_value;
}

// Zero-frequency data value of a noiseless image under the given modality:
// the DC Fourier sample (pixel sum) for Fourier sampling, the image mean otherwise.
inline double zero_frequency_value(const LinearOperator& op, const Vector& image) {
    if (dynamic_cast<const FourierSamplingOp*>(&op)) return image.sum();
    return image.mean();
}

namespace detail {

inline std::mt19937_64 frame_rng(std::uint64_t seed, std::size_t frame) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(frame), 0x6a68626cu};
    return std::mt19937_64(seq);
}

// Fourier samples of a fine-grid (2 n1) rendering, mapped onto the coarse operator's layout.
// Fine samples are scaled by 1/4 and phase-shifted so both grids approximate the same
// continuous integral referenced to the coarse pixel corners.
inline Vector fine_fourier_data(const FourierSamplingOp& coarse, const Vector& fine_image) {
    const int nf = 2 * coarse.n1();
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(nf) * nf);
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = fine_image[static_cast<Eigen::Index>(i)];
    Fft2(nf).forward(buf);
    const auto m = coarse.retained_count();
    Vector y(2 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto [k, l] = coarse.retained()[i];
        const auto wk = static_cast<std::size_t>(((k % nf) + nf) % nf);
        const auto wl = static_cast<std::size_t>(((l % nf) + nf) % nf);
        const double phase = std::numbers::pi * (k + l) / nf;
        const auto c = 0.25 * buf[wk + nf * wl] * std::polar(1.0, phase);
        y[i] = c.real();
        y[m + i] = c.imag();
    }
    return y;
}

// Blur on the fine grid, then average each 2x2 block onto the coarse grid.
inline Vector fine_blur_data(const GaussianBlurOp& coarse, const Vector& fine_image) {
    const int n = coarse.n1(), nf = 2 * n;
    const Vector fine = GaussianBlurOp(nf, coarse.blur_gamma()).apply(fine_image);
    Vector y(Eigen::Index(n) * n);
    for (int b = 0; b < n; ++b)
        for (int a = 0; a < n; ++a) {
            const auto at = [&](int da, int db) { return fine[(2 * a + da) + Eigen::Index(nf) * (2 * b + db)]; };
            y[a + Eigen::Index(n) * b] = 0.25 * (at(0, 0) + at(1, 0) + at(0, 1) + at(1, 1));
        }
    return y;
}

inline MeasurementSet add_noise(std::vector<Vector> clean, const std::vector<OperatorPtr>& ops, const Vector& alpha,
                                std::uint64_t seed) {
    MeasurementSet out;
    out.operators = ops;
    for (std::size_t j = 0; j < clean.size(); ++j) {
        if (std::isfinite(alpha[j])) {
            auto rng = frame_rng(seed, j);
            std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(alpha[j]));
            for (Eigen::Index i = 0; i < clean[j].size(); ++i) clean[j][i] += normal(rng);
        }
        out.data.push_back(std::move(clean[j]));
    }
    return out;
}

inline void check_noise(const NoiseSpec& noise, std::size_t frames) {
    if (noise.snr.size() != frames) throw std::invalid_argument("NoiseSpec: one SNR value per frame required");
}

}  // namespace detail

// Noise precisions implied by the per-frame SNR targets.
inline Vector noise_precisions(const ImageSequence& truth, const std::vector<OperatorPtr>& ops, const NoiseSpec& noise) {
    detail::check_noise(noise, truth.count());
    Vector alpha(static_cast<Eigen::Index>(truth.count()));
    for (std::size_t j = 0; j < truth.count(); ++j)
        alpha[j] = alpha_from_snr(noise.snr[j], zero_frequency_value(*ops[j], truth.frames[j]));
    return alpha;
}

// y^(j) = F^(j) x^(j) + e^(j), e^(j) ~ N(0, 1/alpha_j) i.i.d., alpha_j from the SNR target.
inline MeasurementSet synthesize_measurements(const ImageSequence& truth, const std::vector<OperatorPtr>& ops,
                                              const NoiseSpec& noise) {
    truth.validate();
    if (ops.size() != truth.count()) throw std::invalid_argument("synthesize_measurements: one operator per frame");
    const Vector alpha = noise_precisions(truth, ops, noise);
    std::vector<Vector> clean;
    for (std::size_t j = 0; j < truth.count(); ++j) clean.push_back(ops[j]->apply(truth.frames[j]));
    return detail::add_noise(std::move(clean), ops, alpha, noise.seed);
}

// As above, rendering the phantom itself. With anti_inverse_crime the clean data come from a
// 2x finer rendering pushed through the matching finer operator and restricted to the coarse
// measurement layout; the SNR calibration always uses the coarse truth.
inline MeasurementSet synthesize_measurements(const PhantomSpec& spec, const std::vector<OperatorPtr>& ops,
                                              const NoiseSpec& noise, bool anti_inverse_crime) {
    const ImageSequence truth = render_phantom(spec);
    if (!anti_inverse_crime) return synthesize_measurements(truth, ops, noise);
    if (ops.size() != truth.count()) throw std::invalid_argument("synthesize_measurements: one operator per frame");
    const Vector alpha = noise_precisions(truth, ops, noise);
    const ImageSequence fine = render_phantom(spec, 2 * spec.n1);
    std::vector<Vector> clean;
    for (std::size_t j = 0; j < truth.count(); ++j) {
        if (const auto* f = dynamic_cast<const FourierSamplingOp*>(ops[j].get()))
            clean.push_back(detail::fine_fourier_data(*f, fine.frames[j]));
        else if (const auto* g = dynamic_cast<const GaussianBlurOp*>(ops[j].get()))
            clean.push_back(detail::fine_blur_data(*g, fine.frames[j]));
        else
            throw std::invalid_argument("synthesize_measurements: no fine-grid model for " + ops[j]->name());
    }
    return detail::add_noise(std::move(clean), ops, alpha, noise.seed);
}

}  // namespace jhbl
