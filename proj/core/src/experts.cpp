#include "gsstyle/experts.hpp"

#include "gsstyle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <map>
#include <utility>

namespace gsstyle {

    std::vector<double> gram(const Image& f) {
        const int c = f.channels();
        const std::size_t positions = static_cast<std::size_t>(f.width()) * f.height();
        std::vector<double> g(static_cast<std::size_t>(c) * c, 0.0);
        auto d = f.data();
        for (std::size_t p = 0; p < positions; ++p) {
            const double* row = d.data() + p * c;
            for (int a = 0; a < c; ++a) {
                const double va = row[a];
                for (int b = a; b < c; ++b) {
                    g[static_cast<std::size_t>(a) * c + b] += va * row[b];
                }
            }
        }
        for (int a = 0; a < c; ++a) {
            for (int b = 0; b < a; ++b) {
                g[static_cast<std::size_t>(a) * c + b] = g[static_cast<std::size_t>(b) * c + a];
            }
        }
        return g;
    }

    Image gram_backward(const Image& f, std::span<const double> dg) {
        const int c = f.channels();
        if (dg.size() != static_cast<std::size_t>(c) * c) {
            throw ArgumentError("gram gradient has the wrong size");
        }
        // dF[p][a] = sum_b (dG[a][b] + dG[b][a]) F[p][b]
        std::vector<double> sym(dg.size());
        for (int a = 0; a < c; ++a) {
            for (int b = 0; b < c; ++b) {
                sym[static_cast<std::size_t>(a) * c + b] =
                    dg[static_cast<std::size_t>(a) * c + b] + dg[static_cast<std::size_t>(b) * c + a];
            }
        }
        Image out(f.width(), f.height(), c);
        const std::size_t positions = static_cast<std::size_t>(f.width()) * f.height();
        auto src = f.data();
        auto dst = out.data();
        for (std::size_t p = 0; p < positions; ++p) {
            const double* row = src.data() + p * c;
            double* o = dst.data() + p * c;
            for (int a = 0; a < c; ++a) {
                double s = 0.0;
                for (int b = 0; b < c; ++b) {
                    s += sym[static_cast<std::size_t>(a) * c + b] * row[b];
                }
                o[a] = s;
            }
        }
        return out;
    }

    // ------------------------------------------------------------------ SOS

    namespace {

        SOSConfig layered(const FeatureExtractor& extractor, std::vector<int> layers) {
            SOSConfig cfg;
            for (int l : layers) {
                const double c = extractor.channels(l);
                cfg.weights.push_back(1e3 / (c * c));
            }
            cfg.layers = std::move(layers);
            return cfg;
        }

        Image resample(const Image& img, int w, int h) {
            return img.width() == w && img.height() == h ? img : resize_bilinear(img, w, h);
        }

    } // namespace

    SOSConfig SOSConfig::five_layer(const FeatureExtractor& extractor) { return layered(extractor, {1, 2, 3, 4, 5}); }

    SOSConfig SOSConfig::three_layer(const FeatureExtractor& extractor) { return layered(extractor, {1, 3, 5}); }

    void SOSConfig::validate() const {
        if (layers.empty()) {
            throw ConfigError("sos.layers", "at least one style layer is required");
        }
        if (weights.size() != layers.size()) {
            throw ConfigError("sos.weights", fmt::format("{} weights for {} layers", weights.size(), layers.size()));
        }
        for (double w : weights) {
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw ConfigError("sos.weights", fmt::format("layer weights must be positive, got {}", w));
            }
        }
        if (scales.empty()) {
            throw ConfigError("sos.scales", "at least one scale is required");
        }
        for (double s : scales) {
            if (!(s > 0.0 && s <= 1.0)) {
                throw ConfigError("sos.scales", fmt::format("scales must lie in (0, 1], got {}", s));
            }
        }
        if (!(pretrain_scale > 0.0 && pretrain_scale <= 1.0)) {
            throw ConfigError("sos.pretrain_scale", fmt::format("must lie in (0, 1], got {}", pretrain_scale));
        }
        if (pretrain_iterations < 0) {
            throw ConfigError("sos.pretrain_iterations", "must be >= 0");
        }
    }

    ExpertResult sos_loss(std::span<const Image> views, const Image& reference, FeatureExtractor& extractor,
                          const SOSConfig& cfg, bool pretraining, bool with_gradient) {
        cfg.validate();
        if (views.empty()) {
            throw ArgumentError("sos_loss needs at least one view");
        }
        const std::vector<double> scales = pretraining ? std::vector<double>{cfg.pretrain_scale} : cfg.scales;
        const double min_scale = *std::min_element(scales.begin(), scales.end());
        const double inv_views = 1.0 / static_cast<double>(views.size());

        // Reference Grams per (target width, height), shared by views of equal size.
        std::map<std::pair<int, int>, std::vector<std::vector<double>>> ref_grams;

        ExpertResult result;
        for (const Image& view : views) {
            const int tw = scaled_extent(view.width(), min_scale);
            const int th = scaled_extent(view.height(), min_scale);
            if (reference.width() < tw || reference.height() < th) {
                throw ArgumentError(fmt::format("reference {}x{} is smaller than the smallest scaled target {}x{}",
                                                reference.width(), reference.height(), tw, th));
            }
            const Image ref_at_view = resample(reference, view.width(), view.height());
            Image grad_view(view.width(), view.height(), view.channels());

            for (double s : scales) {
                const int w = scaled_extent(view.width(), s);
                const int h = scaled_extent(view.height(), s);
                const Image scaled = resample(view, w, h);

                auto [it, fresh] = ref_grams.try_emplace({w, h});
                if (fresh) {
                    for (const Image& f : extractor.features(resample(ref_at_view, w, h), cfg.layers)) {
                        it->second.push_back(gram(f));
                    }
                }
                const auto& rg = it->second;

                const auto feats = extractor.features(scaled, cfg.layers);
                std::vector<Image> grad_feats;
                for (std::size_t k = 0; k < cfg.layers.size(); ++k) {
                    const auto g = gram(feats[k]);
                    std::vector<double> dg(g.size());
                    double dist = 0.0;
                    for (std::size_t e = 0; e < g.size(); ++e) {
                        const double diff = g[e] - rg[k][e];
                        dist += diff * diff;
                        dg[e] = 2.0 * cfg.weights[k] * diff * inv_views;
                    }
                    result.loss += cfg.weights[k] * dist * inv_views;
                    if (with_gradient) {
                        grad_feats.push_back(gram_backward(feats[k], dg));
                    }
                }
                if (with_gradient) {
                    const Image g_scaled = extractor.features_backward(scaled, cfg.layers, grad_feats);
                    if (w == view.width() && h == view.height()) {
                        grad_view += g_scaled;
                    } else {
                        grad_view += resize_bilinear_backward(g_scaled, view.width(), view.height());
                    }
                }
            }
            if (with_gradient) {
                result.grad_views.push_back(std::move(grad_view));
            }
        }
        return result;
    }

    // ------------------------------------------------------------------ CSD

    namespace {

        double norm(std::span<const double> v) noexcept {
            double s = 0.0;
            for (double x : v) {
                s += x * x;
            }
            return std::sqrt(s);
        }

        double cosine(std::span<const double> a, std::span<const double> b, double na, double nb) {
            double d = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                d += a[i] * b[i];
            }
            return d / (na * nb);
        }

        // d cos(a, b) / d a
        std::vector<double> cosine_grad(std::span<const double> a, std::span<const double> b, double na, double nb) {
            const double c = cosine(a, b, na, nb);
            std::vector<double> g(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                g[i] = (b[i] / nb - c * a[i] / na) / na;
            }
            return g;
        }

    } // namespace

    ExpertResult csd_loss(std::span<const Image> views, const Image& reference, StyleDescriptorProvider& provider,
                          bool with_gradient) {
        if (views.empty()) {
            throw ArgumentError("csd_loss needs at least one view");
        }
        const Embedding ref = provider.describe(reference);
        const double nref = norm(ref);
        if (!(nref > 0.0)) {
            throw DegenerateEmbeddingError("style descriptor of the reference is zero");
        }
        const double inv_views = 1.0 / static_cast<double>(views.size());
        ExpertResult result;
        for (const Image& view : views) {
            const Embedding d = provider.describe(view);
            if (d.size() != ref.size()) {
                throw ContractError("descriptor dimension changed between calls");
            }
            const double nd = norm(d);
            if (!(nd > 0.0)) {
                throw DegenerateEmbeddingError("style descriptor of a rendered view is zero");
            }
            result.loss += (1.0 - cosine(d, ref, nd, nref)) * inv_views;
            if (with_gradient) {
                auto g = cosine_grad(d, ref, nd, nref);
                for (double& x : g) {
                    x *= -inv_views;
                }
                result.grad_views.push_back(provider.describe_backward(view, g));
            }
        }
        return result;
    }

    // ------------------------------------------------------------------ QA

    namespace {

        struct IqaEval {
            double score;
            std::vector<double> grad_embedding; // d score / d image embedding
        };

        IqaEval iqa(const Embedding& img, const Embedding& pos, const Embedding& neg, bool with_gradient) {
            const double ni = norm(img);
            const double np = norm(pos);
            const double nn = norm(neg);
            if (!(ni > 0.0) || !(np > 0.0) || !(nn > 0.0)) {
                throw DegenerateEmbeddingError("quality prompt or image embedding is zero");
            }
            const double s1 = cosine(img, pos, ni, np);
            const double s2 = cosine(img, neg, ni, nn);
            // e^{s1}/(e^{s1}+e^{s2}) written as a logistic of the difference for stability.
            const double score = 1.0 / (1.0 + std::exp(s2 - s1));
            IqaEval out{score, {}};
            if (with_gradient) {
                const double k = score * (1.0 - score);
                const auto g1 = cosine_grad(img, pos, ni, np);
                const auto g2 = cosine_grad(img, neg, ni, nn);
                out.grad_embedding.resize(img.size());
                for (std::size_t i = 0; i < img.size(); ++i) {
                    out.grad_embedding[i] = k * (g1[i] - g2[i]);
                }
            }
            return out;
        }

        void require_text(const std::string& text, const char* which) {
            if (text.empty()) {
                throw ArgumentError(fmt::format("{} prompt must be non-empty", which));
            }
        }

    } // namespace

    double clip_iqa_score(const Image& image, const std::string& positive_text, const std::string& negative_text,
                          EmbeddingProvider& provider) {
        require_text(positive_text, "positive");
        require_text(negative_text, "negative");
        return iqa(provider.embed_image(image), provider.embed_text(positive_text), provider.embed_text(negative_text),
                   false)
            .score;
    }

    void QAConfig::validate() const {
        if (criteria.empty()) {
            throw ConfigError("qa.criteria", "at least one quality criterion is required");
        }
        double sum = 0.0;
        for (const auto& c : criteria) {
            if (!(c.weight >= 0.0)) {
                throw ConfigError("qa.weights", fmt::format("criterion '{}' has negative weight {}", c.name, c.weight));
            }
            if (c.positive.empty() || c.negative.empty()) {
                throw ConfigError("qa.criteria", fmt::format("criterion '{}' needs both prompts", c.name));
            }
            sum += c.weight;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ConfigError("qa.weights", fmt::format("criterion weights must sum to 1, got {}", sum));
        }
    }

    ExpertResult qa_loss(std::span<const Image> views, const QAConfig& cfg, EmbeddingProvider& provider,
                         bool with_gradient) {
        cfg.validate();
        if (views.empty()) {
            throw ArgumentError("qa_loss needs at least one view");
        }
        std::vector<std::pair<Embedding, Embedding>> prompts;
        for (const auto& c : cfg.criteria) {
            prompts.emplace_back(provider.embed_text(c.positive), provider.embed_text(c.negative));
        }
        const double inv_views = 1.0 / static_cast<double>(views.size());
        ExpertResult result;
        for (const Image& view : views) {
            const Embedding e = provider.embed_image(view);
            double s = 0.0;
            std::vector<double> grad(e.size(), 0.0);
            for (std::size_t k = 0; k < cfg.criteria.size(); ++k) {
                const double w = cfg.criteria[k].weight;
                const auto r = iqa(e, prompts[k].first, prompts[k].second, with_gradient);
                s += w * r.score;
                for (std::size_t i = 0; i < grad.size() && with_gradient; ++i) {
                    grad[i] -= w * r.grad_embedding[i] * inv_views;
                }
            }
            result.loss += (1.0 - s) * inv_views;
            if (with_gradient) {
                result.grad_views.push_back(provider.embed_image_backward(view, grad));
            }
        }
        return result;
    }

} // namespace gsstyle
