#include "gsstyle/toy_priors.hpp"

#include "gsstyle/errors.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fmt/core.h>
#include <unordered_map>

namespace gsstyle::toy {

    namespace {

        using detail::fnv1a;
        using detail::normal_vector;
        using detail::splitmix64;

        double norm(std::span<const double> v) noexcept {
            double s = 0.0;
            for (double x : v) {
                s += x * x;
            }
            return std::sqrt(s);
        }

        // d(v/|v|)/dv applied to g: (g - e (e.g)) / |v|
        std::vector<double> normalize_backward(std::span<const double> raw, std::span<const double> grad) {
            const double n = norm(raw);
            std::vector<double> out(raw.size(), 0.0);
            if (n == 0.0) {
                return out;
            }
            double dot = 0.0;
            for (std::size_t i = 0; i < raw.size(); ++i) {
                dot += raw[i] / n * grad[i];
            }
            for (std::size_t i = 0; i < raw.size(); ++i) {
                out[i] = (grad[i] - raw[i] / n * dot) / n;
            }
            return out;
        }

        // Area pooling onto a grid x grid lattice: pixel (x, y) falls in bin (x*grid/W, y*grid/H).
        struct GridPool {
            int grid;

            std::vector<double> forward(const Image& image) const {
                std::vector<double> sums(static_cast<std::size_t>(grid * grid * image.channels()), 0.0);
                const auto counts = bin_counts(image.width(), image.height());
                for (int y = 0; y < image.height(); ++y) {
                    for (int x = 0; x < image.width(); ++x) {
                        const std::size_t b = bin(x, y, image.width(), image.height());
                        for (int c = 0; c < image.channels(); ++c) {
                            sums[b * image.channels() + c] += image.at(x, y, c);
                        }
                    }
                }
                for (std::size_t b = 0; b < counts.size(); ++b) {
                    if (counts[b] > 0) {
                        for (int c = 0; c < image.channels(); ++c) {
                            sums[b * image.channels() + c] /= counts[b];
                        }
                    }
                }
                return sums;
            }

            Image backward(int width, int height, int channels, std::span<const double> grad) const {
                Image out(width, height, channels);
                const auto counts = bin_counts(width, height);
                for (int y = 0; y < height; ++y) {
                    for (int x = 0; x < width; ++x) {
                        const std::size_t b = bin(x, y, width, height);
                        for (int c = 0; c < channels; ++c) {
                            out.at(x, y, c) = grad[b * channels + c] / counts[b];
                        }
                    }
                }
                return out;
            }

            std::size_t bin(int x, int y, int w, int h) const noexcept {
                const int bx = static_cast<int>(static_cast<long>(x) * grid / w);
                const int by = static_cast<int>(static_cast<long>(y) * grid / h);
                return static_cast<std::size_t>(by * grid + bx);
            }

            std::vector<double> bin_counts(int w, int h) const {
                std::vector<double> counts(static_cast<std::size_t>(grid * grid), 0.0);
                for (int y = 0; y < h; ++y) {
                    for (int x = 0; x < w; ++x) {
                        counts[bin(x, y, w, h)] += 1.0;
                    }
                }
                return counts;
            }
        };

        // y = M x with M rows x cols, row-major.
        std::vector<double> matvec(const std::vector<double>& m, std::size_t rows, std::span<const double> x) {
            const std::size_t cols = x.size();
            std::vector<double> y(rows, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < cols; ++c) {
                    s += m[r * cols + c] * x[c];
                }
                y[r] = s;
            }
            return y;
        }

        std::vector<double> matvec_transposed(const std::vector<double>& m, std::size_t cols, std::span<const double> g) {
            std::vector<double> x(cols, 0.0);
            for (std::size_t r = 0; r < g.size(); ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    x[c] += m[r * cols + c] * g[r];
                }
            }
            return x;
        }

        void require_rgb(const Image& image, std::string_view who) {
            if (image.channels() != 3 || image.width() <= 0 || image.height() <= 0) {
                throw ArgumentError(fmt::format("{}: expected a non-empty RGB image, got {}x{}x{}", who,
                                                image.width(), image.height(), image.channels()));
            }
        }

        // ---------------------------------------------------------------- embedding

        class ToyEmbedding final : public EmbeddingProvider {
        public:
            static constexpr int kGrid = 8;

            ToyEmbedding(std::uint64_t seed, std::size_t dim)
                : seed_(seed),
                  dim_(dim),
                  input_dim_(static_cast<std::size_t>(kGrid * kGrid * 3)),
                  projection_(normal_vector(splitmix64(seed ^ 0x1111), dim * input_dim_, 1.0)) {
                if (dim < 2) {
                    throw ArgumentError(fmt::format("embedding dimension must be >= 2, got {}", dim));
                }
            }

            std::size_t dimension() const override { return dim_; }

            Embedding embed_image(const Image& image) override {
                require_rgb(image, "embed_image");
                auto raw = matvec(projection_, dim_, GridPool{kGrid}.forward(image));
                const double n = norm(raw);
                if (n > 0.0) {
                    for (double& v : raw) {
                        v /= n;
                    }
                }
                return raw;
            }

            Image embed_image_backward(const Image& image, std::span<const double> grad) override {
                require_rgb(image, "embed_image_backward");
                if (grad.size() != dim_) {
                    throw ArgumentError("embedding gradient has the wrong dimension");
                }
                const auto pooled = GridPool{kGrid}.forward(image);
                const auto raw = matvec(projection_, dim_, pooled);
                const auto g_raw = normalize_backward(raw, grad);
                const auto g_pooled = matvec_transposed(projection_, input_dim_, g_raw);
                return GridPool{kGrid}.backward(image.width(), image.height(), 3, g_pooled);
            }

            Embedding embed_text(std::string_view text) override {
                Embedding e(dim_, 0.0);
                std::string token;
                auto flush = [&] {
                    if (token.empty()) {
                        return;
                    }
                    const auto v = normal_vector(splitmix64(seed_ ^ fnv1a(token)), dim_, 1.0);
                    for (std::size_t i = 0; i < dim_; ++i) {
                        e[i] += v[i];
                    }
                    token.clear();
                };
                for (char ch : text) {
                    const auto u = static_cast<unsigned char>(ch);
                    if (std::isalnum(u)) {
                        token.push_back(static_cast<char>(std::tolower(u)));
                    } else {
                        flush();
                    }
                }
                flush();
                const double n = norm(e);
                if (n > 0.0) {
                    for (double& v : e) {
                        v /= n;
                    }
                }
                return e;
            }

        private:
            std::uint64_t seed_;
            std::size_t dim_;
            std::size_t input_dim_;
            std::vector<double> projection_;
        };

        // ---------------------------------------------------------------- features

        struct ConvLayer {
            int in_channels;
            int out_channels;
            std::vector<double> weights; // [out][in][3][3]

            double w(int o, int i, int dy, int dx) const noexcept {
                return weights[((static_cast<std::size_t>(o) * in_channels + i) * 3 + (dy + 1)) * 3 + (dx + 1)];
            }

            Image forward(const Image& in) const {
                Image out(in.width(), in.height(), out_channels);
                const int W = in.width(), H = in.height();
                for (int y = 0; y < H; ++y) {
                    for (int x = 0; x < W; ++x) {
                        for (int dy = -1; dy <= 1; ++dy) {
                            const int sy = std::clamp(y + dy, 0, H - 1);
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int sx = std::clamp(x + dx, 0, W - 1);
                                for (int i = 0; i < in_channels; ++i) {
                                    const double v = in.at(sx, sy, i);
                                    for (int o = 0; o < out_channels; ++o) {
                                        out.at(x, y, o) += w(o, i, dy, dx) * v;
                                    }
                                }
                            }
                        }
                    }
                }
                return out;
            }

            Image backward(const Image& grad_out) const {
                const int W = grad_out.width(), H = grad_out.height();
                Image grad_in(W, H, in_channels);
                for (int y = 0; y < H; ++y) {
                    for (int x = 0; x < W; ++x) {
                        for (int dy = -1; dy <= 1; ++dy) {
                            const int sy = std::clamp(y + dy, 0, H - 1);
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int sx = std::clamp(x + dx, 0, W - 1);
                                for (int i = 0; i < in_channels; ++i) {
                                    double acc = 0.0;
                                    for (int o = 0; o < out_channels; ++o) {
                                        acc += w(o, i, dy, dx) * grad_out.at(x, y, o);
                                    }
                                    grad_in.at(sx, sy, i) += acc;
                                }
                            }
                        }
                    }
                }
                return grad_in;
            }
        };

        Image avg_pool2(const Image& in) {
            const int W = (in.width() + 1) / 2, H = (in.height() + 1) / 2;
            Image out(W, H, in.channels());
            for (int y = 0; y < H; ++y) {
                for (int x = 0; x < W; ++x) {
                    const int x1 = std::min(2 * x + 1, in.width() - 1);
                    const int y1 = std::min(2 * y + 1, in.height() - 1);
                    const double count = static_cast<double>((x1 - 2 * x + 1) * (y1 - 2 * y + 1));
                    for (int c = 0; c < in.channels(); ++c) {
                        double s = 0.0;
                        for (int sy = 2 * y; sy <= y1; ++sy) {
                            for (int sx = 2 * x; sx <= x1; ++sx) {
                                s += in.at(sx, sy, c);
                            }
                        }
                        out.at(x, y, c) = s / count;
                    }
                }
            }
            return out;
        }

        Image avg_pool2_backward(const Image& grad_out, int in_width, int in_height) {
            Image grad_in(in_width, in_height, grad_out.channels());
            for (int y = 0; y < grad_out.height(); ++y) {
                for (int x = 0; x < grad_out.width(); ++x) {
                    const int x1 = std::min(2 * x + 1, in_width - 1);
                    const int y1 = std::min(2 * y + 1, in_height - 1);
                    const double count = static_cast<double>((x1 - 2 * x + 1) * (y1 - 2 * y + 1));
                    for (int c = 0; c < grad_out.channels(); ++c) {
                        const double g = grad_out.at(x, y, c) / count;
                        for (int sy = 2 * y; sy <= y1; ++sy) {
                            for (int sx = 2 * x; sx <= x1; ++sx) {
                                grad_in.at(sx, sy, c) += g;
                            }
                        }
                    }
                }
            }
            return grad_in;
        }

        class ToyFeatures final : public FeatureExtractor {
        public:
            static constexpr int kChannels[] = {3, 8, 16, 32, 64, 64};
            static constexpr int kMaxLayer = 5;

            explicit ToyFeatures(std::uint64_t seed) {
                for (int l = 1; l <= kMaxLayer; ++l) {
                    const int cin = kChannels[l - 1];
                    const int cout = kChannels[l];
                    const std::size_t n = static_cast<std::size_t>(cout) * cin * 9;
                    layers_.push_back({cin, cout, normal_vector(splitmix64(seed + 0x51u * l), n, 1.0 / std::sqrt(cin * 9.0))});
                }
            }

            std::vector<int> layer_ids() const override { return {0, 1, 2, 3, 4, 5}; }

            int channels(int layer) const override {
                check_layer(layer);
                return kChannels[layer];
            }

            std::vector<Image> features(const Image& image, std::span<const int> layers) override {
                require_rgb(image, "features");
                const auto acts = activations(image, max_layer(layers));
                std::vector<Image> out;
                out.reserve(layers.size());
                for (int l : layers) {
                    out.push_back(acts[static_cast<std::size_t>(l)]);
                }
                return out;
            }

            Image features_backward(const Image& image, std::span<const int> layers,
                                    std::span<const Image> grads) override {
                require_rgb(image, "features_backward");
                if (grads.size() != layers.size()) {
                    throw ArgumentError("one gradient per requested layer is required");
                }
                const int top = max_layer(layers);
                const auto acts = activations(image, top);
                // Gradients w.r.t. each activation, filled top-down.
                std::vector<Image> g(static_cast<std::size_t>(top + 1));
                for (int l = 0; l <= top; ++l) {
                    const auto& a = acts[static_cast<std::size_t>(l)];
                    g[static_cast<std::size_t>(l)] = Image(a.width(), a.height(), a.channels());
                }
                for (std::size_t k = 0; k < layers.size(); ++k) {
                    if (!grads[k].same_shape(acts[static_cast<std::size_t>(layers[k])])) {
                        throw ArgumentError(fmt::format("gradient for layer {} has the wrong shape", layers[k]));
                    }
                    g[static_cast<std::size_t>(layers[k])] += grads[k];
                }
                for (int l = top; l >= 1; --l) {
                    const auto& below = acts[static_cast<std::size_t>(l - 1)];
                    const Image g_conv = avg_pool2_backward(g[static_cast<std::size_t>(l)], below.width(), below.height());
                    g[static_cast<std::size_t>(l - 1)] += layers_[static_cast<std::size_t>(l - 1)].backward(g_conv);
                }
                return g[0];
            }

        private:
            static void check_layer(int layer) {
                if (layer < 0 || layer > kMaxLayer) {
                    throw ArgumentError(fmt::format("unknown feature layer {} (valid: 0..{})", layer, kMaxLayer));
                }
            }

            static int max_layer(std::span<const int> layers) {
                int top = 0;
                for (int l : layers) {
                    check_layer(l);
                    top = std::max(top, l);
                }
                return top;
            }

            std::vector<Image> activations(const Image& image, int top) const {
                std::vector<Image> acts;
                acts.reserve(static_cast<std::size_t>(top + 1));
                acts.push_back(image);
                for (int l = 1; l <= top; ++l) {
                    acts.push_back(avg_pool2(layers_[static_cast<std::size_t>(l - 1)].forward(acts.back())));
                }
                return acts;
            }

            std::vector<ConvLayer> layers_;
        };

        // ---------------------------------------------------------------- descriptor

        class ToyDescriptor final : public StyleDescriptorProvider {
        public:
            static constexpr int kGrid = 4;
            static constexpr std::size_t kStats = kGrid * kGrid * 3 + 3;

            ToyDescriptor(std::uint64_t seed, std::size_t dim)
                : dim_(dim),
                  projection_(normal_vector(splitmix64(seed ^ 0x2222), dim * kStats, 1.0)) {
                if (dim == 0) {
                    throw ArgumentError("descriptor dimension must be positive");
                }
            }

            std::size_t dimension() const override { return dim_; }

            Embedding describe(const Image& image) override {
                require_rgb(image, "describe");
                return matvec(projection_, dim_, stats(image));
            }

            Image describe_backward(const Image& image, std::span<const double> grad) override {
                require_rgb(image, "describe_backward");
                if (grad.size() != dim_) {
                    throw ArgumentError("descriptor gradient has the wrong dimension");
                }
                const auto g_stats = matvec_transposed(projection_, kStats, grad);
                Image out = GridPool{kGrid}.backward(image.width(), image.height(), 3,
                                                     std::span<const double>(g_stats).first(kStats - 3));
                const double inv_n = 1.0 / (static_cast<double>(image.width()) * image.height());
                for (int y = 0; y < image.height(); ++y) {
                    for (int x = 0; x < image.width(); ++x) {
                        for (int c = 0; c < 3; ++c) {
                            out.at(x, y, c) += g_stats[kStats - 3 + c] * 2.0 * image.at(x, y, c) * inv_n;
                        }
                    }
                }
                return out;
            }

        private:
            static std::vector<double> stats(const Image& image) {
                auto s = GridPool{kGrid}.forward(image);
                const double inv_n = 1.0 / (static_cast<double>(image.width()) * image.height());
                for (int c = 0; c < 3; ++c) {
                    double m = 0.0;
                    for (int y = 0; y < image.height(); ++y) {
                        for (int x = 0; x < image.width(); ++x) {
                            m += image.at(x, y, c) * image.at(x, y, c);
                        }
                    }
                    s.push_back(m * inv_n);
                }
                return s;
            }

            std::size_t dim_;
            std::vector<double> projection_;
        };

        // ---------------------------------------------------------------- score

        class ToyScore final : public DiffusionScoreProvider {
        public:
            ToyScore(const Image& target, int total_timesteps, std::uint64_t seed, double style_shift)
                : target_(target),
                  total_(total_timesteps),
                  style_pattern_(target.width(), target.height(), target.channels()) {
                if (total_timesteps < 2) {
                    throw ArgumentError(fmt::format("total timesteps must be >= 2, got {}", total_timesteps));
                }
                if (target.empty()) {
                    throw ArgumentError("toy score provider needs a non-empty target image");
                }
                const auto pattern = normal_vector(splitmix64(seed ^ 0x3333), target.size(), style_shift);
                std::copy(pattern.begin(), pattern.end(), style_pattern_.data().begin());
            }

            int total_timesteps() const override { return total_; }

            double alpha_bar(int t) const override {
                check_t(t);
                return cosine_alpha_bar(t, total_);
            }

            Image encode(const Image& image) override { return image; }
            Image decode(const Image& latent) override { return latent; }
            Image encode_backward(const Image&, const Image& grad_latent) override { return grad_latent; }

            Image predict_noise(NoiseSpace, const Image& noised, std::string_view, const StyleEmbedding* style,
                                int t) override {
                check_t(t);
                if (noised.channels() != target_.channels()) {
                    throw ContractError(fmt::format("toy denoiser expects {} channels, got {}", target_.channels(),
                                                    noised.channels()));
                }
                const Image& clean = clean_for(noised.width(), noised.height(), style != nullptr);
                const double ab = cosine_alpha_bar(t, total_);
                const double sa = std::sqrt(ab);
                const double sn = std::sqrt(1.0 - ab);
                Image eps(noised.width(), noised.height(), noised.channels());
                auto out = eps.data();
                auto xt = noised.data();
                auto x0 = clean.data();
                for (std::size_t i = 0; i < out.size(); ++i) {
                    out[i] = (xt[i] - sa * x0[i]) / sn;
                }
                return eps;
            }

        private:
            void check_t(int t) const {
                if (t < 0 || t > total_) {
                    throw ArgumentError(fmt::format("timestep {} outside [0, {}]", t, total_));
                }
            }

            const Image& clean_for(int width, int height, bool styled) {
                const std::uint64_t key = (static_cast<std::uint64_t>(width) << 33) |
                                          (static_cast<std::uint64_t>(height) << 1) | (styled ? 1u : 0u);
                auto it = cache_.find(key);
                if (it != cache_.end()) {
                    return it->second;
                }
                Image clean = styled ? target_ + style_pattern_ : target_;
                clean = resize_bilinear(clean, width, height);
                return cache_.emplace(key, std::move(clean)).first->second;
            }

            Image target_;
            int total_;
            Image style_pattern_;
            std::unordered_map<std::uint64_t, Image> cache_;
        };

        class ToyStylizer final : public StylizedViewProvider {
        public:
            Image stylize(const Image& view, const Image& style_reference) override {
                require_rgb(view, "stylize");
                require_rgb(style_reference, "stylize");
                Image ref = resize_bilinear(style_reference, view.width(), view.height());
                Image out = view * 0.5;
                out += ref * 0.5;
                return out;
            }
        };

    } // namespace

    double cosine_alpha_bar(int t, int total) noexcept {
        constexpr double s = 0.008;
        auto f = [&](double tt) {
            const double v = std::cos((tt / total + s) / (1.0 + s) * M_PI * 0.5);
            return v * v;
        };
        return std::clamp(f(t) / f(0), 1e-4, 0.9999);
    }

    std::unique_ptr<EmbeddingProvider> embedding_provider(std::uint64_t seed, std::size_t dimension) {
        return std::make_unique<ToyEmbedding>(seed, dimension);
    }

    std::unique_ptr<FeatureExtractor> feature_extractor(std::uint64_t seed) {
        return std::make_unique<ToyFeatures>(seed);
    }

    std::unique_ptr<StyleDescriptorProvider> descriptor_provider(std::uint64_t seed, std::size_t dimension) {
        return std::make_unique<ToyDescriptor>(seed, dimension);
    }

    std::unique_ptr<DiffusionScoreProvider> score_provider(const Image& target, int total_timesteps, std::uint64_t seed,
                                                           double style_shift) {
        return std::make_unique<ToyScore>(target, total_timesteps, seed, style_shift);
    }

    std::unique_ptr<StylizedViewProvider> stylized_view_provider() { return std::make_unique<ToyStylizer>(); }

} // namespace gsstyle::toy
