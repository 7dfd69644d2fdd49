#include "gsstyle/errors.hpp"
#include "gsstyle/experts.hpp"
#include "gsstyle/toy_priors.hpp"

#include "golden.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

#include <algorithm>
#include <cmath>
#include <gtest/gtest.h>
#include <map>
#include <numeric>
#include <random>

using namespace gsstyle;
using namespace gsstyle::testing;

namespace {

    // Descriptor chosen by the value of the first pixel's red channel.
    class KeyedDescriptor final : public StyleDescriptorProvider {
    public:
        std::map<int, Embedding> table;
        std::size_t dimension() const override { return 2; }
        Embedding describe(const Image& image) override { return table.at(static_cast<int>(image.at(0, 0, 0))); }
        Image describe_backward(const Image& image, std::span<const double>) override {
            return Image(image.width(), image.height(), image.channels());
        }
    };

    // Image embedding fixed; text embeddings looked up by exact string.
    class TableEmbedding final : public EmbeddingProvider {
    public:
        Embedding image;
        std::map<std::string, Embedding, std::less<>> text;
        std::size_t dimension() const override { return image.size(); }
        Embedding embed_image(const Image&) override { return image; }
        Embedding embed_text(std::string_view t) override { return text.find(t)->second; }
        Image embed_image_backward(const Image& im, std::span<const double>) override {
            return Image(im.width(), im.height(), im.channels());
        }
    };

    class Scaled final : public EmbeddingProvider {
    public:
        Scaled(EmbeddingProvider& inner, double k) : inner_(inner), k_(k) {}
        std::size_t dimension() const override { return inner_.dimension(); }
        Embedding embed_image(const Image& image) override { return scale(inner_.embed_image(image)); }
        Embedding embed_text(std::string_view text) override { return scale(inner_.embed_text(text)); }
        Image embed_image_backward(const Image& image, std::span<const double> g) override {
            return inner_.embed_image_backward(image, g) * k_;
        }

    private:
        Embedding scale(Embedding e) const {
            for (double& v : e) {
                v *= k_;
            }
            return e;
        }
        EmbeddingProvider& inner_;
        double k_;
    };

    double cosine(const Embedding& a, const Embedding& b) {
        const double ab = std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
        const double aa = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
        const double bb = std::inner_product(b.begin(), b.end(), b.begin(), 0.0);
        return ab / std::sqrt(aa * bb);
    }

    Image with_key(int key) {
        Image im(4, 4, 3, 0.0);
        im.at(0, 0, 0) = key;
        return im;
    }

    // FD check of an expert's per-view gradient for the first view.
    template <class Loss>
    void check_view_gradient(std::vector<Image> views, Loss loss, const Image& analytic, double tol) {
        std::vector<double> x(views[0].data().begin(), views[0].data().end());
        const auto fd = central_gradient(
            [&](const std::vector<double>& p) {
                std::copy(p.begin(), p.end(), views[0].data().begin());
                return loss(views);
            },
            x, 1e-5);
        double scale = 0.0;
        for (double v : fd) {
            scale = std::max(scale, std::abs(v));
        }
        ASSERT_GT(scale, 0.0);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            EXPECT_NEAR(analytic.data()[i], fd[i], tol * scale) << i;
        }
    }

} // namespace

TEST(Experts, GramSmallCases) {
    EXPECT_EQ(gram(Image(2, 2, 1, 1.0)), std::vector<double>{4.0});
    Image two(3, 2, 2);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 3; ++x) {
            two.at(x, y, 0) = two.at(x, y, 1) = 0.5 * x - y;
        }
    }
    const auto g = gram(two);
    EXPECT_EQ(g[0], g[1]);
    EXPECT_EQ(g[1], g[2]);
    EXPECT_EQ(g[2], g[3]);
}

TEST(Experts, GramMatchesNaiveOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Image f = random_image(seed, 4, 4, 3, -1.0, 1.0);
        const auto a = gram(f);
        const auto b = naive_gram(f);
        ASSERT_EQ(a.size(), 9u);
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i], b[i], 1e-6);
        }
    }
}

TEST(Experts, GramSymmetricPsdAndPermutationInvariant) {
    const Image f = random_image(9, 6, 5, 4, -1.0, 1.0);
    const auto g = gram(f);
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            EXPECT_EQ(g[static_cast<std::size_t>(a * 4 + b)], g[static_cast<std::size_t>(b * 4 + a)]);
        }
    }
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        double v[4], q = 0.0;
        for (double& x : v) {
            x = n(rng);
        }
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                q += v[a] * g[static_cast<std::size_t>(a * 4 + b)] * v[b];
            }
        }
        EXPECT_GE(q, -1e-12);
    }
    // shuffle spatial positions
    std::vector<int> idx(30);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Image p(6, 5, 4);
    for (int i = 0; i < 30; ++i) {
        for (int c = 0; c < 4; ++c) {
            p.at(i % 6, i / 6, c) = f.at(idx[i] % 6, idx[i] / 6, c);
        }
    }
    const auto gp = gram(p);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_NEAR(g[i], gp[i], 1e-12);
    }
}

TEST(Experts, GramBackwardMatchesFiniteDifferences) {
    const Image f = random_image(3, 3, 3, 2, -1.0, 1.0);
    const std::vector<double> w{0.3, -1.2, 0.7, 2.0};
    const Image an = gram_backward(f, w);
    std::vector<double> x(f.data().begin(), f.data().end());
    const auto fd = central_gradient(
        [&](const std::vector<double>& p) {
            Image im = f;
            std::copy(p.begin(), p.end(), im.data().begin());
            const auto g = naive_gram(im);
            return std::inner_product(g.begin(), g.end(), w.begin(), 0.0);
        },
        x, 1e-5);
    for (std::size_t i = 0; i < fd.size(); ++i) {
        EXPECT_NEAR(an.data()[i], fd[i], 1e-7);
    }
}

TEST(Experts, SosPresets) {
    auto ex = toy::feature_extractor(1);
    const SOSConfig five = SOSConfig::five_layer(*ex);
    EXPECT_EQ(five.layers, (std::vector<int>{1, 2, 3, 4, 5}));
    const double c[] = {8, 16, 32, 64, 64};
    for (int i = 0; i < 5; ++i) {
        EXPECT_DOUBLE_EQ(five.weights[static_cast<std::size_t>(i)], 1e3 / (c[i] * c[i]));
    }
    EXPECT_EQ(five.scales, (std::vector<double>{1.0, 0.5, 0.25}));
    EXPECT_EQ(five.pretrain_scale, 0.5);
    EXPECT_EQ(SOSConfig::three_layer(*ex).layers, (std::vector<int>{1, 3, 5}));
    SOSConfig bad = five;
    bad.scales = {1.5};
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = five;
    bad.weights[0] = 0.0;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Experts, SosZeroOnReference) {
    auto ex = toy::feature_extractor(2);
    const Image ref = random_image(1, 32, 32);
    const std::vector<Image> views{ref, ref};
    const auto r = sos_loss(views, ref, *ex, SOSConfig::five_layer(*ex));
    EXPECT_EQ(r.loss, 0.0);
    EXPECT_EQ(sos_loss(views, ref, *ex, SOSConfig::five_layer(*ex), true).loss, 0.0);
}

TEST(Experts, SosZeroOnSpatiallyShuffledReferenceAtIdentityLayer) {
    auto ex = toy::feature_extractor(2);
    const Image ref = random_image(2, 16, 16);
    std::vector<int> idx(256);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), std::mt19937_64(4));
    Image shuffled(16, 16, 3);
    for (int i = 0; i < 256; ++i) {
        for (int c = 0; c < 3; ++c) {
            shuffled.at(i % 16, i / 16, c) = ref.at(idx[i] % 16, idx[i] / 16, c);
        }
    }
    SOSConfig cfg;
    cfg.layers = {0};
    cfg.weights = {1.0};
    cfg.scales = {1.0};
    const std::vector<Image> views{shuffled};
    EXPECT_NEAR(sos_loss(views, ref, *ex, cfg).loss, 0.0, 1e-20);
}

TEST(Experts, SosMatchesExplicitLoopOracle) {
    auto ex = toy::feature_extractor(5);
    const Image ref = random_image(10, 40, 28);
    const std::vector<Image> views{random_image(11, 24, 20), random_image(12, 24, 20)};
    const SOSConfig cfg = SOSConfig::five_layer(*ex);
    const double got = sos_loss(views, ref, *ex, cfg, false, false).loss;

    double expect = 0.0;
    for (const Image& v : views) {
        const Image ref_v = naive_resize(ref, v.width(), v.height());
        for (double s : cfg.scales) {
            const int w = std::max(1, static_cast<int>(std::lround(v.width() * s)));
            const int h = std::max(1, static_cast<int>(std::lround(v.height() * s)));
            const auto fv = ex->features(naive_resize(v, w, h), cfg.layers);
            const auto fr = ex->features(naive_resize(ref_v, w, h), cfg.layers);
            for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
                const auto gv = naive_gram(fv[l]);
                const auto gr = naive_gram(fr[l]);
                double d = 0.0;
                for (std::size_t e = 0; e < gv.size(); ++e) {
                    d += (gv[e] - gr[e]) * (gv[e] - gr[e]);
                }
                expect += cfg.weights[l] * d;
            }
        }
    }
    expect /= static_cast<double>(views.size());
    EXPECT_GT(expect, 0.0);
    EXPECT_NEAR(got, expect, 1e-6 * std::max(1.0, expect));
}

TEST(Experts, SosPretrainingUsesOnlyTheFixedScale) {
    auto ex = toy::feature_extractor(5);
    const Image ref = random_image(1, 32, 32);
    const std::vector<Image> views{random_image(2, 16, 16)};
    SOSConfig cfg = SOSConfig::five_layer(*ex);
    const double pre = sos_loss(views, ref, *ex, cfg, true, false).loss;
    cfg.scales = {0.5};
    EXPECT_EQ(pre, sos_loss(views, ref, *ex, cfg, false, false).loss);
}

TEST(Experts, SosGradientMatchesFiniteDifferences) {
    auto ex = toy::feature_extractor(8);
    const Image ref = random_image(1, 12, 12);
    SOSConfig cfg = SOSConfig::five_layer(*ex);
    cfg.layers = {1, 2};
    cfg.weights = {1.0, 0.5};
    const std::vector<Image> views{random_image(2, 8, 8), random_image(3, 8, 8)};
    const auto r = sos_loss(views, ref, *ex, cfg);
    check_view_gradient(
        views, [&](const std::vector<Image>& v) { return sos_loss(v, ref, *ex, cfg, false, false).loss; },
        r.grad_views[0], 1e-5);
}

TEST(Experts, SosRejectsTinyReference) {
    auto ex = toy::feature_extractor(1);
    const std::vector<Image> views{random_image(1, 32, 32)};
    EXPECT_THROW(sos_loss(views, random_image(2, 4, 4), *ex, SOSConfig::five_layer(*ex)), ArgumentError);
    EXPECT_THROW(sos_loss({}, random_image(2, 4, 4), *ex, SOSConfig::five_layer(*ex)), ArgumentError);
}

TEST(Experts, CsdCases) {
    KeyedDescriptor d;
    d.table[0] = {1.0, 0.0};
    d.table[1] = {0.0, 3.0};
    d.table[2] = {-2.0, 0.0};
    d.table[3] = {0.0, 0.0};
    const Image ref = with_key(0);
    const std::vector<Image> same{ref};
    const std::vector<Image> orth{with_key(1)};
    const std::vector<Image> anti{with_key(2)};
    EXPECT_NEAR(csd_loss(same, ref, d).loss, 0.0, 1e-15);
    EXPECT_NEAR(csd_loss(orth, ref, d).loss, 1.0, 1e-15);
    EXPECT_NEAR(csd_loss(anti, ref, d).loss, 2.0, 1e-15);
    const std::vector<Image> mixed{with_key(1), with_key(2)};
    EXPECT_NEAR(csd_loss(mixed, ref, d).loss, 1.5, 1e-15);
    const std::vector<Image> zero{with_key(3)};
    EXPECT_THROW(csd_loss(zero, ref, d), DegenerateEmbeddingError);
}

TEST(Experts, CsdToyRangeAndGradient) {
    auto d = toy::descriptor_provider(3, 16);
    const Image ref = random_image(1, 12, 12);
    const std::vector<Image> views{random_image(2, 10, 10), random_image(3, 10, 10)};
    const auto r = csd_loss(views, ref, *d);
    EXPECT_GE(r.loss, 0.0);
    EXPECT_LE(r.loss, 2.0);
    check_view_gradient(
        views, [&](const std::vector<Image>& v) { return csd_loss(v, ref, *d, false).loss; }, r.grad_views[0],
        1e-5);
}

TEST(Experts, ClipIqaClosedForms) {
    TableEmbedding p;
    p.image = {1.0, 0.0};
    p.text["pos"] = {1.0, 0.0};
    p.text["neg"] = {-1.0, 0.0};
    p.text["same_a"] = {0.0, 1.0};
    p.text["same_b"] = {0.0, 5.0};
    const Image img(4, 4, 3);
    EXPECT_NEAR(clip_iqa_score(img, "pos", "neg", p), std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(clip_iqa_score(img, "pos", "neg", p), 0.88080, 1e-5);
    EXPECT_NEAR(clip_iqa_score(img, "same_a", "same_b", p), 0.5, 1e-15);
    EXPECT_THROW(clip_iqa_score(img, "", "neg", p), ArgumentError);
}

TEST(Experts, ClipIqaComplementAndScaleInvariance) {
    auto p = toy::embedding_provider(4, 32);
    const Image img = random_image(5, 16, 16);
    const double a = clip_iqa_score(img, "Good photo.", "Bad photo.", *p);
    const double b = clip_iqa_score(img, "Bad photo.", "Good photo.", *p);
    EXPECT_NEAR(a + b, 1.0, 1e-6);
    EXPECT_GT(a, 0.0);
    EXPECT_LT(a, 1.0);
    Scaled s(*p, 42.0);
    EXPECT_NEAR(clip_iqa_score(img, "Good photo.", "Bad photo.", s), a, 1e-12);
}

TEST(Experts, QaConvexCombination) {
    TableEmbedding p;
    p.image = {1.0, 0.0};
    for (const char* t : {"Good photo.", "Bad photo.", "Sharp photo.", "Blurry photo.", "Colorful photo.", "Dull photo."}) {
        p.text[t] = {0.0, 1.0};
    }
    const std::vector<Image> views{Image(4, 4, 3), Image(4, 4, 3)};
    EXPECT_NEAR(qa_loss(views, QAConfig{}, p).loss, 0.5, 1e-15);

    auto toy_p = toy::embedding_provider(6, 32);
    QAConfig only_quality;
    only_quality.criteria[0].weight = 1.0;
    only_quality.criteria[1].weight = 0.0;
    only_quality.criteria[2].weight = 0.0;
    const std::vector<Image> tv{random_image(1, 12, 12), random_image(2, 12, 12)};
    const double expect = 0.5 * ((1.0 - clip_iqa_score(tv[0], "Good photo.", "Bad photo.", *toy_p)) +
                                 (1.0 - clip_iqa_score(tv[1], "Good photo.", "Bad photo.", *toy_p)));
    EXPECT_NEAR(qa_loss(tv, only_quality, *toy_p).loss, expect, 1e-12);
}

TEST(Experts, QaGoldenScalar) {
    auto p = toy::embedding_provider(2024, 32);
    const std::vector<Image> views{random_image(41, 16, 16)};
    const double got = qa_loss(views, QAConfig{}, *p, false).loss;

    // Independent evaluation from the raw embeddings.
    const Embedding e = p->embed_image(views[0]);
    auto score = [&](const char* pos, const char* neg) {
        const double s1 = cosine(e, p->embed_text(pos));
        const double s2 = cosine(e, p->embed_text(neg));
        return std::exp(s1) / (std::exp(s1) + std::exp(s2));
    };
    const double expect = 1.0 - (0.4 * score("Good photo.", "Bad photo.") + 0.4 * score("Sharp photo.", "Blurry photo.") +
                                 0.2 * score("Colorful photo.", "Dull photo."));
    EXPECT_NEAR(got, expect, 1e-12);
    EXPECT_GT(got, 0.0);
    EXPECT_LT(got, 1.0);
    EXPECT_NEAR(got, golden("qa_loss_scalar", got).get<double>(), 1e-12);
}

TEST(Experts, QaGradientMatchesFiniteDifferences) {
    auto p = toy::embedding_provider(12, 16);
    const std::vector<Image> views{random_image(3, 10, 10), random_image(4, 10, 10)};
    const auto r = qa_loss(views, QAConfig{}, *p);
    check_view_gradient(
        views, [&](const std::vector<Image>& v) { return qa_loss(v, QAConfig{}, *p, false).loss; }, r.grad_views[0],
        1e-5);
}

TEST(Experts, QaConfigDefaultsAndValidation) {
    QAConfig c;
    ASSERT_EQ(c.criteria.size(), 3u);
    EXPECT_EQ(c.criteria[0].positive, "Good photo.");
    EXPECT_EQ(c.criteria[1].negative, "Blurry photo.");
    EXPECT_EQ(c.criteria[2].name, "colorfullness");
    EXPECT_EQ(c.criteria[0].weight, 0.4);
    EXPECT_EQ(c.criteria[1].weight, 0.4);
    EXPECT_EQ(c.criteria[2].weight, 0.2);
    EXPECT_NO_THROW(c.validate());
    c.criteria[2].weight = 0.3;
    try {
        c.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "qa.weights");
    }
}
