#pragma once

#include "gsstyle/image.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gsstyle {

    using Embedding = std::vector<double>;

    /// Unit-length style vector in the shared image/text embedding space, plus where it came from.
    struct StyleEmbedding {
        Embedding vector;

        struct Provenance {
            std::string source_image;
            std::string content_text;
            std::string style_text;      // empty when not used
            Embedding raw_image;         // per-leg normalized embeddings, before the subtract/add
            Embedding raw_content;
            Embedding raw_style_text;
            Embedding combined;          // image - content (+ style text), before the final normalization
        } provenance;
    };

    // Every provider also exposes the vector-jacobian product of its image input, so experts
    // built on top of it can be differentiated w.r.t. the rendered image. Providers are used
    // sequentially; none of them is required to be thread-safe.

    /// Joint image/text embedding space (CLIP-like).
    class EmbeddingProvider {
    public:
        virtual ~EmbeddingProvider() = default;

        virtual std::size_t dimension() const = 0;
        virtual Embedding embed_image(const Image& image) = 0;
        virtual Embedding embed_text(std::string_view text) = 0;
        /// dL/dimage given dL/dembedding.
        virtual Image embed_image_backward(const Image& image, std::span<const double> grad_embedding) = 0;
    };

    /// Multi-layer convolutional features (VGG-like). Spatial size shrinks with depth.
    class FeatureExtractor {
    public:
        virtual ~FeatureExtractor() = default;

        virtual std::vector<int> layer_ids() const = 0;
        virtual int channels(int layer) const = 0;
        /// Feature maps (W_l x H_l x C_l) for the requested layers, in request order.
        virtual std::vector<Image> features(const Image& image, std::span<const int> layers) = 0;
        /// dL/dimage given dL/dfeatures for the same layer list.
        virtual Image features_backward(const Image& image, std::span<const int> layers,
                                        std::span<const Image> grad_features) = 0;
    };

    /// Style descriptor network (CSD-like).
    class StyleDescriptorProvider {
    public:
        virtual ~StyleDescriptorProvider() = default;

        virtual std::size_t dimension() const = 0;
        virtual Embedding describe(const Image& image) = 0;
        virtual Image describe_backward(const Image& image, std::span<const double> grad_descriptor) = 0;
    };

    enum class NoiseSpace {
        Latent,
        Pixel
    };

    /// Style-conditioned diffusion prior. Noise predictions are stop-gradient; only encode has
    /// a backward pass.
    class DiffusionScoreProvider {
    public:
        virtual ~DiffusionScoreProvider() = default;

        virtual int total_timesteps() const = 0;
        /// Cumulative signal level at timestep t in [0, total_timesteps()].
        virtual double alpha_bar(int t) const = 0;

        virtual Image encode(const Image& image) = 0;
        virtual Image decode(const Image& latent) = 0;
        virtual Image encode_backward(const Image& image, const Image& grad_latent) = 0;

        /// Predicted noise for a noised tensor. `style` == nullptr selects the unconditional
        /// (text-only) branch; otherwise the style-conditioned branch.
        virtual Image predict_noise(NoiseSpace space, const Image& noised, std::string_view prompt,
                                    const StyleEmbedding* style, int t) = 0;
    };

    /// Image-to-image stylizer producing pre-stylized guidance views.
    class StylizedViewProvider {
    public:
        virtual ~StylizedViewProvider() = default;

        virtual Image stylize(const Image& view, const Image& style_reference) = 0;
    };

    /// Non-owning handles to the full provider set used by the composite objective.
    struct ProviderSet {
        EmbeddingProvider* embedding = nullptr;
        FeatureExtractor* features = nullptr;
        StyleDescriptorProvider* descriptor = nullptr;
        DiffusionScoreProvider* score = nullptr;
        StylizedViewProvider* stylizer = nullptr;
    };

    /// Owning provider set built from configuration.
    struct OwnedProviders {
        std::unique_ptr<EmbeddingProvider> embedding;
        std::unique_ptr<FeatureExtractor> features;
        std::unique_ptr<StyleDescriptorProvider> descriptor;
        std::unique_ptr<DiffusionScoreProvider> score;
        std::unique_ptr<StylizedViewProvider> stylizer;

        ProviderSet view() const noexcept {
            return {embedding.get(), features.get(), descriptor.get(), score.get(), stylizer.get()};
        }
    };

    struct ProviderConfig {
        std::string backend = "toy"; // "toy" | "external"
        std::uint64_t seed = 0;
        std::size_t embedding_dim = 64;
        std::size_t descriptor_dim = 64;
        int total_timesteps = 1000;
        double style_shift = 1e-3; // toy score provider: amplitude of the style-branch target offset
        std::string external_model_dir; // external backends only
    };

    /// Builds the provider set. For "toy", `score_target` is the clean image the toy denoiser
    /// implies. "external" throws BackendUnavailableError in builds without adapter support.
    OwnedProviders create_providers(const ProviderConfig& config, const Image& score_target);

} // namespace gsstyle
