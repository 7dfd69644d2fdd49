#pragma once

#include "gsstyle/image.hpp"
#include "gsstyle/priors.hpp"

#include <span>
#include <string>
#include <vector>

namespace gsstyle {

    /// Unnormalized Gram matrix F F^T of a W x H x C feature map, C x C row-major.
    std::vector<double> gram(const Image& features);

    /// dL/dF given dL/dG for G = F F^T: (dG + dG^T) F.
    Image gram_backward(const Image& features, std::span<const double> grad_gram);

    /// Loss value plus its gradient w.r.t. each rendered view (same shapes as the inputs).
    struct ExpertResult {
        double loss = 0.0;
        std::vector<Image> grad_views;
    };

    struct SOSConfig {
        std::vector<int> layers;
        std::vector<double> weights;              // one per layer, > 0
        std::vector<double> scales{1.0, 0.5, 0.25}; // each in (0, 1]
        long pretrain_iterations = 0;             // steps that use only pretrain_scale
        double pretrain_scale = 0.5;

        /// Five style layers 1..5 with weights 1e3 / C_l^2 taken from the extractor's channels.
        static SOSConfig five_layer(const FeatureExtractor& extractor);
        /// Shallow subset {1, 3, 5}, same weight rule.
        static SOSConfig three_layer(const FeatureExtractor& extractor);

        /// Throws ConfigError (keys under "sos.").
        void validate() const;
    };

    /// mean_v sum_s sum_l w_l |G_l(view@s) - G_l(ref@s)|_F^2. The reference is first resampled to
    /// each view's resolution, then both are downscaled bilinearly per scale. With pretraining set,
    /// only cfg.pretrain_scale is used. Throws ArgumentError when the reference is smaller than the
    /// smallest scaled target or no view is given.
    ExpertResult sos_loss(std::span<const Image> views, const Image& reference, FeatureExtractor& extractor,
                          const SOSConfig& cfg, bool pretraining = false, bool with_gradient = true);

    /// mean_v (1 - cos(d(view), d(ref))). Throws DegenerateEmbeddingError on a zero descriptor.
    ExpertResult csd_loss(std::span<const Image> views, const Image& reference, StyleDescriptorProvider& provider,
                          bool with_gradient = true);

    /// softmax over the two prompt similarities: e^{s1} / (e^{s1} + e^{s2}), s_i = cos(image, text_i).
    /// Throws ArgumentError on empty texts.
    double clip_iqa_score(const Image& image, const std::string& positive_text, const std::string& negative_text,
                          EmbeddingProvider& provider);

    struct QACriterion {
        std::string name;
        std::string positive;
        std::string negative;
        double weight = 0.0;
    };

    struct QAConfig {
        std::vector<QACriterion> criteria{
            {"quality", "Good photo.", "Bad photo.", 0.4},
            {"sharpness", "Sharp photo.", "Blurry photo.", 0.4},
            {"colorfullness", "Colorful photo.", "Dull photo.", 0.2},
        };

        /// Throws ConfigError ("qa.weights") unless weights are >= 0 and sum to 1.
        void validate() const;
    };

    /// mean_v (1 - sum_c w_c * s_c(view)).
    ExpertResult qa_loss(std::span<const Image> views, const QAConfig& cfg, EmbeddingProvider& provider,
                         bool with_gradient = true);

} // namespace gsstyle
