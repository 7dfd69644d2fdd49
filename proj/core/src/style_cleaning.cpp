#include "gsstyle/style_cleaning.hpp"

#include "gsstyle/errors.hpp"

#include <cmath>
#include <fmt/core.h>

namespace gsstyle {

    namespace {

        double l2(const Embedding& v) noexcept {
            double s = 0.0;
            for (double x : v) {
                s += x * x;
            }
            return std::sqrt(s);
        }

        Embedding normalized(Embedding v) {
            const double n = l2(v);
            if (n > 0.0) {
                for (double& x : v) {
                    x /= n;
                }
            }
            return v;
        }

        void check_dim(const Embedding& v, std::size_t dim, const char* what) {
            if (v.size() != dim) {
                throw ContractError(fmt::format("{} embedding has dimension {}, expected {}", what, v.size(), dim));
            }
        }

    } // namespace

    StyleEmbedding clean_style(const Image& style_image, const std::string& content_text,
                               const std::optional<std::string>& style_text, EmbeddingProvider& provider,
                               const std::string& source_image_id) {
        if (content_text.empty()) {
            throw ArgumentError("content descriptor text must be non-empty");
        }
        const std::size_t dim = provider.dimension();

        StyleEmbedding out;
        auto& prov = out.provenance;
        prov.source_image = source_image_id;
        prov.content_text = content_text;
        prov.raw_image = normalized(provider.embed_image(style_image));
        prov.raw_content = normalized(provider.embed_text(content_text));
        check_dim(prov.raw_image, dim, "image");
        check_dim(prov.raw_content, dim, "content text");

        prov.combined.resize(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            prov.combined[i] = prov.raw_image[i] - prov.raw_content[i];
        }
        if (style_text && !style_text->empty()) {
            prov.style_text = *style_text;
            prov.raw_style_text = normalized(provider.embed_text(*style_text));
            check_dim(prov.raw_style_text, dim, "style text");
            for (std::size_t i = 0; i < dim; ++i) {
                prov.combined[i] += prov.raw_style_text[i];
            }
        }

        const double n = l2(prov.combined);
        if (!(n > 1e-12)) {
            throw DegenerateEmbeddingError(
                fmt::format("style embedding cancels to zero (norm {:.3g}); content text removes all of the image", n));
        }
        out.vector = prov.combined;
        for (double& x : out.vector) {
            x /= n;
        }
        return out;
    }

} // namespace gsstyle
