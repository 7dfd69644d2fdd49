#include "gsstyle/dssd.hpp"
#include "gsstyle/errors.hpp"
#include "gsstyle/renderer.hpp"
#include "gsstyle/toy_priors.hpp"

#include "golden.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

#include <cmath>
#include <gtest/gtest.h>

using namespace gsstyle;
using namespace gsstyle::testing;

namespace {

    StyleEmbedding some_style() {
        StyleEmbedding s;
        s.vector = {0.6, 0.8};
        return s;
    }

    // Returns predictions of the wrong shape.
    class Broken final : public DiffusionScoreProvider {
    public:
        int total_timesteps() const override { return 1000; }
        double alpha_bar(int) const override { return 0.5; }
        Image encode(const Image& i) override { return i; }
        Image decode(const Image& i) override { return i; }
        Image encode_backward(const Image&, const Image& g) override { return g; }
        Image predict_noise(NoiseSpace, const Image& x, std::string_view, const StyleEmbedding*, int) override {
            return Image(x.width() + 1, x.height(), x.channels());
        }
    };

} // namespace

TEST(Dssd, FullStyleWeightCancelsUnconditionalBranch) {
    const Image target = random_image(1, 8, 8);
    auto p = toy::score_provider(target, 1000, 4, 0.05);
    const StyleEmbedding s = some_style();
    const Image x = random_image(2, 8, 8);
    const Image eps = random_image(3, 8, 8, 3, -1.0, 1.0);
    const Image r = dssd_residual(NoiseSpace::Pixel, x, "y", s, 300, 1.0, eps, *p);
    const Image expect = p->predict_noise(NoiseSpace::Pixel, x, "y", &s, 300) - eps;
    EXPECT_EQ(r, expect);
}

TEST(Dssd, ToyDenoiserResidualVanishesWithoutStyle) {
    const Image target = random_image(5, 8, 8);
    auto p = toy::score_provider(target, 1000);
    const Image eps = random_image(6, 8, 8, 3, -2.0, 2.0);
    for (int t : {20, 200, 750}) {
        const Image noised = forward_noise(target, eps, p->alpha_bar(t));
        const Image r = dssd_residual(NoiseSpace::Latent, noised, "y", some_style(), t, 0.0, eps, *p);
        for (double v : r.data()) {
            EXPECT_LE(std::abs(v), 1e-7);
        }
    }
}

TEST(Dssd, ResidualIsAffineInDeltaLambda) {
    auto p = toy::score_provider(random_image(7, 8, 8), 1000, 9, 0.1);
    const Image x = random_image(8, 8, 8);
    const Image eps = random_image(9, 8, 8, 3, -1.0, 1.0);
    const StyleEmbedding s = some_style();
    const Image r0 = dssd_residual(NoiseSpace::Pixel, x, "y", s, 400, 0.0, eps, *p);
    const Image rh = dssd_residual(NoiseSpace::Pixel, x, "y", s, 400, 0.5, eps, *p);
    const Image r1 = dssd_residual(NoiseSpace::Pixel, x, "y", s, 400, 1.0, eps, *p);
    const Image mid = (r0 + r1) * 0.5;
    EXPECT_LT(max_abs_diff(rh, mid), 1e-6);
    // extrapolation beyond 1 stays on the same line
    const Image r75 = dssd_residual(NoiseSpace::Pixel, x, "y", s, 400, 7.5, eps, *p);
    EXPECT_LT(max_abs_diff(r75, r0 + (r1 - r0) * 7.5), 1e-6);
}

TEST(Dssd, GoldenResidualAtHighGuidance) {
    const Image target = random_image(31, 8, 8);
    auto p = toy::score_provider(target, 1000, 31, 0.1);
    const Image x = random_image(32, 8, 8);
    const Image eps = random_image(33, 8, 8, 3, -1.0, 1.0);
    const StyleEmbedding s = some_style();
    const Image r = dssd_residual(NoiseSpace::Latent, x, "a prompt", s, 500, 7.5, eps, *p);

    // independent two-branch mix from the raw predictions
    const Image u = p->predict_noise(NoiseSpace::Latent, x, "a prompt", nullptr, 500);
    const Image c = p->predict_noise(NoiseSpace::Latent, x, "a prompt", &s, 500);
    for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_NEAR(r.data()[i], -6.5 * u.data()[i] + 7.5 * c.data()[i] - eps.data()[i], 1e-12);
    }

    const std::vector<double> flat(r.data().begin(), r.data().end());
    const auto g = golden("dssd_residual_8x8", flat).get<std::vector<double>>();
    ASSERT_EQ(g.size(), flat.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_NEAR(flat[i], g[i], 1e-12);
    }
}

TEST(Dssd, ShapeMismatchIsAContractViolation) {
    Broken b;
    const Image x(4, 4, 3);
    EXPECT_THROW(dssd_residual(NoiseSpace::Pixel, x, "y", some_style(), 10, 7.5, x, b), ContractError);
}

TEST(Dssd, ZeroResidualWeightsGiveZeroGradient) {
    DSSDConfig cfg;
    cfg.lambda_x = 0.0;
    cfg.lambda_z = 0.0;
    const GaussianCloud c = random_scene(3, 5, 1);
    auto p = toy::score_provider(random_image(1, 16, 16), 1000);
    const CloudGradient g =
        dssd_color_gradient(c, front_camera(16, 16), some_style(), "y", {0, 1, 10, GuidanceMode::Local}, cfg, *p, 1);
    for (CloudField f : kAllCloudFields) {
        for (double v : g.values(f)) {
            EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(Dssd, GradientPointsTowardTargetColor) {
    const CameraView view = front_camera(16, 16);
    const Rgb target_rgb{0.9, 0.1, 0.4};
    const Image target = render(single_gaussian(target_rgb), view).rgb;
    auto p = toy::score_provider(target, 1000);
    DSSDConfig cfg;

    for (const Rgb start : {Rgb{0.2, 0.7, 0.4 + 0.3}, Rgb{1.0, 0.0, 0.0}, Rgb{0.5, 0.5, 0.1}}) {
        const GaussianCloud c = single_gaussian(start);
        const CloudGradient g = dssd_color_gradient(c, view, some_style(), "y", {5, 1, 10, GuidanceMode::Local}, cfg, *p, 7);

        // surrogate |render - target|^2, central differences on sh_dc
        std::vector<double> dc(c.sh_dc.begin(), c.sh_dc.end());
        const auto fd = central_gradient(
            [&](const std::vector<double>& v) {
                GaussianCloud cc = c;
                cc.sh_dc = v;
                const Image d = render(cc, view).rgb - target;
                return sum_of_squares(d);
            },
            dc, 1e-3);
        for (int k = 0; k < 3; ++k) {
            if (std::abs(start[k] - target_rgb[k]) > 0.05) {
                EXPECT_GT(g.sh_dc[static_cast<std::size_t>(k)] * fd[static_cast<std::size_t>(k)], 0.0) << k;
            }
        }
        for (CloudField f : {CloudField::Positions, CloudField::Rotations, CloudField::LogScales, CloudField::OpacityLogits}) {
            for (double v : g.values(f)) {
                EXPECT_EQ(v, 0.0);
            }
        }
    }
}

TEST(Dssd, TermIsAPureFunctionOfItsSeed) {
    auto p = toy::score_provider(random_image(1, 8, 8), 1000, 2, 0.05);
    const Image img = random_image(2, 8, 8);
    const GuidanceSample g{0.3, 400, 9.0};
    const DSSDConfig cfg;
    const DSSDTerm a = dssd_term(img, "y", some_style(), g, cfg, *p, 11);
    const DSSDTerm b = dssd_term(img, "y", some_style(), g, cfg, *p, 11);
    EXPECT_EQ(a.direction, b.direction);
    EXPECT_EQ(a.loss, b.loss);
    EXPECT_EQ(a.timestep, 400);
    EXPECT_EQ(a.delta_lambda, 9.0);
    // loss = |g|^2 / 2n and grad = g / n
    const double n = static_cast<double>(img.size());
    EXPECT_NEAR(a.loss, sum_of_squares(a.direction) / (2 * n), 1e-15);
    EXPECT_LT(max_abs_diff(a.grad_image, a.direction * (1.0 / n)), 1e-15);
}

TEST(Dssd, TimestepWeighting) {
    EXPECT_EQ(timestep_weight(TimestepWeighting::ConstantOne, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(timestep_weight(TimestepWeighting::OneMinusAlphaBar, 0.3), 0.7);
}

TEST(Dssd, StyleObjectiveTerms) {
    const Image rgb = random_image(1, 8, 8);
    const Image alpha = random_image(2, 8, 8, 1);
    RenderOutput r{rgb, alpha};
    DSSDTerm term;
    term.loss = 0.25;
    term.grad_image = random_image(3, 8, 8);
    DSSDConfig cfg;

    const StyleObjective zero = style_objective(r, alpha, &rgb, true, term, cfg);
    EXPECT_EQ(zero.rgb, 0.0);
    EXPECT_EQ(zero.mask, 0.0);
    EXPECT_EQ(zero.total, 0.25);

    const Image guide = random_image(4, 8, 8);
    const Image mask = random_image(5, 8, 8, 1);
    cfg.lambda_rgb = 0.0;
    cfg.lambda_mask = 0.0;
    const StyleObjective only = style_objective(r, Image(), &guide, true, term, cfg);
    EXPECT_EQ(only.total, cfg.lambda_dssd * term.loss);

    cfg = DSSDConfig{};
    cfg.lambda_dssd = 0.7;
    cfg.lambda_rgb = 1.3;
    cfg.lambda_mask = 0.11;
    const StyleObjective base = style_objective(r, mask, &guide, true, term, cfg);
    EXPECT_NEAR(base.rgb, mean_squared_error(rgb, guide), 1e-15);
    EXPECT_NEAR(base.mask, mean_squared_error(alpha, mask), 1e-15);
    EXPECT_NEAR(base.total, 0.7 * 0.25 + 1.3 * base.rgb + 0.11 * base.mask, 1e-15);
    for (double k : {2.0, 0.5, 8.0}) {
        DSSDConfig scaled = cfg;
        scaled.lambda_dssd *= k;
        scaled.lambda_rgb *= k;
        scaled.lambda_mask *= k;
        EXPECT_EQ(style_objective(r, mask, &guide, true, term, scaled).total, k * base.total);
    }
    // the RGB term only counts while the overlay is active
    EXPECT_EQ(style_objective(r, mask, &guide, false, term, cfg).lambda_rgb_effective, 0.0);
}

TEST(Dssd, MissingGuidanceWithActiveOverlayIsAConfigError) {
    RenderOutput r{random_image(1, 4, 4), Image(4, 4, 1)};
    DSSDTerm term;
    term.grad_image = Image(4, 4, 3);
    try {
        style_objective(r, Image(4, 4, 1), nullptr, true, term, DSSDConfig{});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "style.guidance");
    }
    EXPECT_NO_THROW(style_objective(r, Image(4, 4, 1), nullptr, false, term, DSSDConfig{}));
}

TEST(Dssd, ConfigValidation) {
    DSSDConfig c;
    EXPECT_NO_THROW(c.validate());
    c.lambda_mask = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = DSSDConfig{};
    c.lambda_x = 0.0;
    c.lambda_z = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
}
