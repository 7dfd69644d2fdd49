#include "gsstyle/errors.hpp"
#include "gsstyle/metrics.hpp"
#include "gsstyle/toy_priors.hpp"

#include "oracles.hpp"
#include "scenes.hpp"

#include <cmath>
#include <gtest/gtest.h>
#include <random>

using namespace gsstyle;
using namespace gsstyle::testing;

namespace {

    // 8-bit code values in [0, 239] so that +16 stays in range.
    std::pair<Image, Image> offset_pair(int w, int h) {
        std::mt19937_64 rng(16);
        std::uniform_int_distribution<int> code(0, 239);
        Image a(w, h, 3), b(w, h, 3);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const int k = code(rng);
            a.data()[i] = k / 255.0;
            b.data()[i] = (k + 16) / 255.0;
        }
        return {a, b};
    }

} // namespace

TEST(Metrics, PsnrIdenticalIsCapped) {
    const Image a = random_image(1, 8, 8);
    EXPECT_EQ(psnr(a, a), 100.0);
    EXPECT_EQ(kPsnrCap, 100.0);
}

TEST(Metrics, PsnrConstantOffset) {
    const auto [a, b] = offset_pair(20, 12);
    const double expect = 20.0 * std::log10(255.0 / 16.0);
    EXPECT_NEAR(expect, 24.0484, 1e-4);
    EXPECT_NEAR(psnr(a, b), expect, 1e-9);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
}

TEST(Metrics, PsnrStrictlyDecreasingInMse) {
    const Image a(8, 8, 3, 0.5);
    double prev = 1e9;
    for (double d : {0.001, 0.01, 0.05, 0.1, 0.3}) {
        const double p = psnr(a, Image(8, 8, 3, 0.5 + d));
        EXPECT_LT(p, prev);
        prev = p;
    }
    EXPECT_THROW(psnr(a, Image(8, 7, 3)), ArgumentError);
}

TEST(Metrics, SsimIdentityAndSymmetry) {
    const Image a = random_image(1, 16, 16);
    const Image b = random_image(2, 16, 16);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_THROW(ssim(Image(10, 16, 3), Image(10, 16, 3)), ArgumentError);
    EXPECT_THROW(ssim(a, Image(16, 16, 1)), ArgumentError);
}

TEST(Metrics, SsimCheckerboardAgainstInverseIsNonPositive) {
    Image x(16, 16, 3);
    for (int y = 0; y < 16; ++y) {
        for (int xx = 0; xx < 16; ++xx) {
            for (int c = 0; c < 3; ++c) {
                x.at(xx, y, c) = (xx + y) % 2;
            }
        }
    }
    const Image inv = Image(16, 16, 3, 1.0) - x;
    EXPECT_LE(ssim(x, inv), 0.0);
}

TEST(Metrics, SsimMatchesDirectWindowOracle) {
    const Image a = random_image(3, 64, 64);
    const Image b = random_image(4, 64, 64);
    EXPECT_NEAR(ssim(a, b), naive_ssim(a, b), 1e-5);
    Image c = a;
    for (double& v : c.data()) {
        v = 0.8 * v + 0.05;
    }
    EXPECT_NEAR(ssim(a, c), naive_ssim(a, c), 1e-5);
}

TEST(Metrics, SsimWindowIsNormalizedGaussian) {
    const auto w = ssim_window_1d();
    ASSERT_EQ(w.size(), 11u);
    double s = 0.0;
    for (double v : w) {
        s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-15);
    EXPECT_NEAR(w[5] / w[4], std::exp(1.0 / (2 * 1.5 * 1.5)), 1e-12);
}

TEST(Metrics, LpipsBasics) {
    auto ex = toy::feature_extractor(3);
    const Image a = random_image(1, 32, 32, 3, 0.2, 0.6);
    EXPECT_EQ(lpips(a, a, *ex), 0.0);
    const Image b = random_image(2, 32, 32);
    EXPECT_NEAR(lpips(a, b, *ex), lpips(b, a, *ex), 1e-12);
    double prev = 0.0;
    for (double d : {0.1, 0.2, 0.4}) {
        Image shifted = a;
        for (double& v : shifted.data()) {
            v += d;
        }
        const double l = lpips(a, shifted, *ex);
        EXPECT_GE(l, prev);
        prev = l;
    }
    EXPECT_GT(prev, 0.0);
}
