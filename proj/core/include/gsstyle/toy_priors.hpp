#pragma once

#include "gsstyle/priors.hpp"

#include <cstdint>
#include <memory>

namespace gsstyle::toy {

    // Deterministic stand-ins for the neural priors. Bit-reproducible given (seed, input); no
    // weights on disk, no network.

    /// Fixed random linear map of an 8x8 area-pooled image, L2-normalized. Text is a hashed bag
    /// of lowercase alphanumeric tokens; text without tokens embeds to the zero vector.
    std::unique_ptr<EmbeddingProvider> embedding_provider(std::uint64_t seed, std::size_t dimension);

    /// Layer 0 is the identity (RGB). Layer l >= 1 applies a fixed random 3x3 convolution
    /// (replicate padding) followed by 2x2 average pooling (ceil mode) to layer l-1.
    /// Channel counts for layers 1..5 are 8, 16, 32, 64, 64.
    std::unique_ptr<FeatureExtractor> feature_extractor(std::uint64_t seed);

    /// Random projection of 4x4 pooled colors plus per-channel second moments.
    std::unique_ptr<StyleDescriptorProvider> descriptor_provider(std::uint64_t seed, std::size_t dimension = 64);

    /// Denoiser whose implied clean image is always `target` (resampled to the query shape):
    /// predict_noise(x_t) = (x_t - sqrt(abar_t) * target) / sqrt(1 - abar_t) under a cosine
    /// schedule. With a style embedding the implied clean image is target + style_shift * P,
    /// P a fixed seeded pattern. encode/decode are the identity.
    std::unique_ptr<DiffusionScoreProvider> score_provider(const Image& target, int total_timesteps,
                                                           std::uint64_t seed = 0, double style_shift = 1e-3);

    /// 50/50 blend of the view with the style reference resampled to the view size.
    std::unique_ptr<StylizedViewProvider> stylized_view_provider();

    /// Cosine cumulative schedule, clamped to [1e-4, 0.9999].
    double cosine_alpha_bar(int t, int total_timesteps) noexcept;

} // namespace gsstyle::toy
