#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace jhbl;

namespace {

PhantomSpec empty_spec(int n1, int frames) {
    PhantomSpec s;
    s.n1 = n1;
    s.frames = frames;
    return s;
}

Shape disc(double cs, double ct, double r, double intensity) {
    return {ShapeKind::Ellipse, {cs, ct}, {r, r}, 0.0, intensity};
}

}  // namespace

TEST(RemoveBands, PaperBands) {
    const auto b1 = remove_bands(1, 128);
    EXPECT_FALSE(b1.clipped);
    EXPECT_EQ(b1.frequencies.size(), 400u);
    for (const auto& [k, l] : b1.frequencies) {
        EXPECT_GE(std::abs(k), 11);
        EXPECT_LE(std::abs(k), 20);
        EXPECT_GE(std::abs(l), 11);
        EXPECT_LE(std::abs(l), 20);
    }
    const auto b6 = remove_bands(6, 256);
    EXPECT_FALSE(b6.clipped);
    EXPECT_EQ(b6.frequencies.size(), 400u);
    EXPECT_TRUE(b6.frequencies.contains({61, -70}));
    EXPECT_TRUE(b6.frequencies.contains({-70, 61}));
}

TEST(RemoveBands, ClippedToSampledSquare) {
    const auto b = remove_bands(6, 128);
    EXPECT_TRUE(b.clipped);
    for (const auto& f : b.frequencies) {
        EXPECT_TRUE(in_frequency_window(128, f));
        EXPECT_LE(std::abs(f.first), 63);
    }
    EXPECT_EQ(b.frequencies.size(), 4u * 3 * 3);
    EXPECT_NO_THROW(make_fourier_op(128, b.frequencies));
}

TEST(RemoveBands, ConjugateSymmetric) {
    for (int n1 : {32, 64, 33})
        for (int j = 1; j <= 6; ++j)
            for (const auto& [k, l] : remove_bands(j, n1, std::max(1, n1 / 12)).frequencies)
                EXPECT_TRUE(remove_bands(j, n1, std::max(1, n1 / 12)).frequencies.contains({-k, -l}));
}

TEST(AlphaFromSnr, Examples) {
    EXPECT_DOUBLE_EQ(alpha_from_snr(0.0, 1.0), 1.0);
    EXPECT_NEAR(alpha_from_snr(2.0, 0.5), 3.1698, 1e-4);
    EXPECT_THROW(alpha_from_snr(2.0, 0.0), std::domain_error);
    EXPECT_THROW(alpha_from_snr(2.0, -1.0), std::domain_error);
}

TEST(RenderPhantom, StaticScenes) {
    auto s = empty_spec(16, 3);
    s.background.push_back(disc(0.5, 0.5, 0.3, 2.0));
    auto seq = render_phantom(s);
    EXPECT_EQ(seq.frames[0], seq.frames[1]);
    EXPECT_EQ(seq.frames[1], seq.frames[2]);
    EXPECT_GT(seq.frames[0].sum(), 0.0);
    s.ellipses.push_back(disc(0.3, 0.3, 0.1, 1.0));
    seq = render_phantom(s);
    EXPECT_EQ(seq.frames[0], seq.frames[2]);
}

TEST(RenderPhantom, PixelTranslation) {
    const int n1 = 20;
    auto s = empty_spec(n1, 3);
    Shape e{ShapeKind::Ellipse, {0.4, 0.3}, {0.15, 0.1}, 0.0, 1.0};
    e.translation = {0.0, 1.0};
    s.ellipses.push_back(e);
    const auto seq = render_phantom(s);
    for (int j = 0; j + 1 < 3; ++j)
        for (int b = 0; b + 1 < n1; ++b)
            for (int a = 0; a < n1; ++a) EXPECT_EQ(seq.frames[j + 1][a + n1 * (b + 1)], seq.frames[j][a + n1 * b]);
}

TEST(RenderPhantom, ChangesOnlyInsideMovingSupports) {
    const int n1 = 32;
    const auto spec = moving_ellipse_phantom(n1, 4);
    const auto seq = render_phantom(spec);
    PhantomSpec moving_only = spec;
    moving_only.background.clear();
    for (auto& sh : moving_only.ellipses) sh.intensity = 1.0;
    const auto support = render_phantom(moving_only);
    for (int j = 1; j < 4; ++j)
        for (Eigen::Index i = 0; i < seq.pixels(); ++i)
            if (support.frames[j - 1][i] == 0.0 && support.frames[j][i] == 0.0)
                EXPECT_EQ(seq.frames[j - 1][i], seq.frames[j][i]);
    EXPECT_NE(seq.frames[0], seq.frames[1]);
}

TEST(RenderPhantom, PixelQuantizedMovingEllipses) {
    const int n1 = 32;
    const auto spec = moving_ellipse_phantom(n1, 3, true);
    for (const auto& e : spec.ellipses) {
        EXPECT_EQ(e.rotation_rate, 0.0);
        for (double t : e.translation) EXPECT_EQ(t, std::round(t));
    }
    const auto seq = render_phantom(spec);
    EXPECT_NE(seq.frames[0], seq.frames[1]);
}

TEST(RenderPhantom, ShapeLeavingDomain) {
    auto s = empty_spec(16, 4);
    Shape e = disc(0.5, 0.85, 0.1, 1.0);
    e.translation = {0.0, 1.0};
    s.ellipses.push_back(e);
    EXPECT_THROW(render_phantom(s), std::invalid_argument);
    s.ellipses[0].translation = {0.0, -1.0};
    EXPECT_NO_THROW(render_phantom(s));
    s.background.push_back(e);
    EXPECT_THROW(render_phantom(s), std::invalid_argument);  // background must be static
}

TEST(Synthesize, NoiselessInverseCrimeDataIsExact) {
    auto cfg = default_config(Modality::Fourier, 16, 2);
    cfg.noise.snr.assign(2, std::numeric_limits<double>::infinity());
    const auto ops = build_operators(cfg);
    const auto truth = render_phantom(cfg.phantom);
    const auto y = synthesize_measurements(cfg.phantom, ops, cfg.noise, false);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(y.data[j], ops[j]->apply(truth.frames[j]));
}

TEST(Synthesize, NoiseVarianceMatchesPrecision) {
    const int n1 = 224;  // 2 * 224^2 ~ 1e5 real samples
    ImageSequence x{n1, {Vector::Constant(n1 * n1, 0.7)}};
    const std::vector<OperatorPtr> ops = {make_fourier_op(n1)};
    const NoiseSpec noise{{5.0}, 17};
    const auto y = synthesize_measurements(x, ops, noise);
    const Vector e = y.data[0] - ops[0]->apply(x.frames[0]);
    const double alpha = noise_precisions(x, ops, noise)[0];
    const double var = e.squaredNorm() / static_cast<double>(e.size());
    EXPECT_NEAR(var * alpha, 1.0, 0.02);
    EXPECT_NEAR(alpha, alpha_from_snr(5.0, 0.7 * n1 * n1), 1e-15);
}

TEST(Synthesize, SeedDeterminism) {
    auto cfg = default_config(Modality::Blur, 16, 3);
    const auto ops = build_operators(cfg);
    const auto a = synthesize_measurements(cfg.phantom, ops, cfg.noise, true);
    const auto b = synthesize_measurements(cfg.phantom, ops, cfg.noise, true);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(a.data[j], b.data[j]);
    cfg.noise.seed = 1;
    const auto c = synthesize_measurements(cfg.phantom, ops, cfg.noise, true);
    EXPECT_NE(a.data[0], c.data[0]);
}

TEST(Synthesize, ZeroFrequencyCalibration) {
    const Vector img = Vector::Constant(64, 2.0);
    EXPECT_DOUBLE_EQ(zero_frequency_value(*make_fourier_op(8), img), 128.0);
    EXPECT_DOUBLE_EQ(zero_frequency_value(*make_blur_op(8, 0.1), img), 2.0);
}

TEST(Synthesize, FineGridFourierDataMatchesCoarseAtLowFrequencies) {
    // A Gaussian bump, negligible at the boundary: aliasing at |k|,|l| <= 4 is below 1e-6 of DC on
    // both grids, so any disagreement there would be a phase or scale error in the fine-grid mapping.
    const int n1 = 16, nf = 32;
    auto bump = [](double s, double t) { return std::exp(-80 * ((s - 0.5) * (s - 0.5) + (t - 0.45) * (t - 0.45))); };
    Vector coarse(n1 * n1), fine(nf * nf);
    for (int b = 0; b < n1; ++b)
        for (int a = 0; a < n1; ++a) coarse[a + n1 * b] = bump((a + 0.5) / n1, (b + 0.5) / n1);
    for (int b = 0; b < nf; ++b)
        for (int a = 0; a < nf; ++a) fine[a + nf * b] = bump((a + 0.5) / nf, (b + 0.5) / nf);
    const auto op = make_fourier_op(n1);
    const Vector yc = op->apply(coarse), yf = detail::fine_fourier_data(*op, fine);
    const auto m = op->retained_count();
    const double dc = coarse.sum();
    int checked = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto [k, l] = op->retained()[i];
        if (std::abs(k) > 4 || std::abs(l) > 4) continue;
        EXPECT_NEAR(yf[i], yc[i], 1e-6 * dc) << k << "," << l;
        EXPECT_NEAR(yf[m + i], yc[m + i], 1e-6 * dc) << k << "," << l;
        ++checked;
    }
    EXPECT_EQ(checked, 81);
}

TEST(Synthesize, AntiInverseCrimeIntroducesSmallDiscrepancy) {
    for (auto modality : {Modality::Fourier, Modality::Blur}) {
        auto cfg = default_config(modality, 32, 2);
        cfg.noise.snr.assign(2, std::numeric_limits<double>::infinity());
        cfg.forward.blur_gamma = 0.03;
        const auto ops = build_operators(cfg);
        const auto exact = synthesize_measurements(cfg.phantom, ops, cfg.noise, false);
        const auto aic = synthesize_measurements(cfg.phantom, ops, cfg.noise, true);
        const double d = oracle::rel_diff(aic.data[0], exact.data[0]);
        EXPECT_GT(d, 1e-4);
        EXPECT_LT(d, 0.15);
    }
}

TEST(Synthesize, DimensionChecks) {
    const auto cfg = default_config(Modality::Fourier, 8, 2);
    const auto ops = build_operators(cfg);
    NoiseSpec bad{{2.0}, 0};
    EXPECT_THROW(synthesize_measurements(cfg.phantom, ops, bad, true), std::invalid_argument);
    std::vector<OperatorPtr> one = {ops[0]};
    EXPECT_THROW(synthesize_measurements(cfg.phantom, one, cfg.noise, false), std::invalid_argument);
}
