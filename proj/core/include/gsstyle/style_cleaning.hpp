#pragma once

#include "gsstyle/image.hpp"
#include "gsstyle/priors.hpp"

#include <optional>
#include <string>

namespace gsstyle {

    /// Isolates style from a reference image in the joint embedding space:
    /// e = normalize(n(img) - n(content_text) [+ n(style_text)]) where n() normalizes each leg.
    /// Zero-norm legs are kept as zero vectors. Throws ArgumentError on empty content text and
    /// DegenerateEmbeddingError when the combination cancels to zero.
    StyleEmbedding clean_style(const Image& style_image, const std::string& content_text,
                               const std::optional<std::string>& style_text, EmbeddingProvider& provider,
                               const std::string& source_image_id = {});

} // namespace gsstyle
