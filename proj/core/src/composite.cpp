#include "gsstyle/errors.hpp"
#include "gsstyle/renderer.hpp"
#include "gsstyle/style_cleaning.hpp"
#include "gsstyle/trainer.hpp"
#include "rng.hpp"

#include <cmath>
#include <fmt/core.h>

namespace gsstyle {

    void ExpertWeights::validate() const {
        const std::pair<double, const char*> all[] = {
            {lambda_style, "weights.lambda_style"},
            {lambda_sos, "weights.lambda_sos"},
            {lambda_csd, "weights.lambda_csd"},
            {lambda_qa, "weights.lambda_qa"},
        };
        bool any = false;
        for (const auto& [v, key] : all) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ConfigError(key, fmt::format("expert weight must be finite and >= 0, got {}", v));
            }
            any = any || v > 0.0;
        }
        if (!any) {
            throw ConfigError("weights", "all expert weights are zero; nothing to optimize");
        }
        dssd.validate();
    }

    StyleBundle make_style_bundle(const GaussianCloud& initial, std::span<const CameraView> views, Image reference,
                                  const std::string& content_text, const std::optional<std::string>& style_text,
                                  const ProviderSet& providers, double mask_threshold, const Rgb& background,
                                  const std::string& source_image_id) {
        if (providers.embedding == nullptr) {
            throw ArgumentError("style cleaning needs an embedding provider");
        }
        StyleBundle b;
        b.style = clean_style(reference, content_text, style_text, *providers.embedding, source_image_id);
        b.prompt = content_text;
        for (const auto& view : views) {
            const RenderOutput out = render(initial, view, background);
            if (providers.stylizer != nullptr) {
                b.guidance_views.push_back(providers.stylizer->stylize(out.rgb, reference));
            }
            b.target_masks.push_back(render_mask(initial, view, mask_threshold));
        }
        b.reference = std::move(reference);
        return b;
    }

    CompositeResult composite_loss(const GaussianCloud& cloud, std::span<const CameraView> views,
                                   const StyleBundle& bundle, const ObjectiveSettings& settings,
                                   const ProviderSet& providers, const StepPlan& plan, bool sos_pretraining) {
        const ExpertWeights& w = settings.weights;
        w.validate();
        if (plan.view >= views.size()) {
            throw ArgumentError(fmt::format("scheduled view {} out of range ({} views)", plan.view, views.size()));
        }
        const CameraView& view = views[plan.view];
        const RenderOutput out = render(cloud, view, settings.background);
        const std::span<const Image> rendered(&out.rgb, 1);

        CompositeResult r;
        Image grad(out.rgb.width(), out.rgb.height(), 3);

        auto require = [](const void* p, const char* what) {
            if (p == nullptr) {
                throw ArgumentError(fmt::format("composite loss needs a {} provider", what));
            }
        };

        if (w.lambda_style > 0.0) {
            require(providers.score, "diffusion score");
            const std::uint64_t noise_seed =
                detail::mix(detail::mix(settings.seed, static_cast<std::uint64_t>(plan.step)), plan.view);
            const DSSDTerm term = dssd_term(out.rgb, bundle.prompt, bundle.style, plan.guidance, w.dssd,
                                            *providers.score, noise_seed);
            const Image* guidance = plan.view < bundle.guidance_views.size() ? &bundle.guidance_views[plan.view] : nullptr;
            static const Image kNoMask;
            const Image& mask = plan.view < bundle.target_masks.size() ? bundle.target_masks[plan.view] : kNoMask;
            const StyleObjective so = style_objective(out, mask, guidance, plan.rgb_overlay, term, w.dssd);
            r.style = so.total;
            r.dssd = so.dssd;
            r.rgb = so.rgb;
            r.mask = so.mask;
            grad += so.grad_rgb * w.lambda_style;
        }
        if (w.lambda_sos > 0.0) {
            require(providers.features, "feature");
            const ExpertResult e = sos_loss(rendered, bundle.reference, *providers.features, settings.sos, sos_pretraining);
            r.sos = e.loss;
            grad += e.grad_views[0] * w.lambda_sos;
        }
        if (w.lambda_csd > 0.0) {
            require(providers.descriptor, "style descriptor");
            const ExpertResult e = csd_loss(rendered, bundle.reference, *providers.descriptor);
            r.csd = e.loss;
            grad += e.grad_views[0] * w.lambda_csd;
        }
        if (w.lambda_qa > 0.0) {
            require(providers.embedding, "embedding");
            const ExpertResult e = qa_loss(rendered, settings.qa, *providers.embedding);
            r.qa = e.loss;
            grad += e.grad_views[0] * w.lambda_qa;
        }

        r.total = w.lambda_style * r.style + w.lambda_sos * r.sos + w.lambda_csd * r.csd + w.lambda_qa * r.qa;
        r.gradient = color_gradient(cloud, view, grad);
        return r;
    }

} // namespace gsstyle
