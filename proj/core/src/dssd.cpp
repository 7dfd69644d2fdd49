#include "gsstyle/dssd.hpp"

#include "gsstyle/errors.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>

namespace gsstyle {

    namespace {

        constexpr std::uint64_t kLatentBranch = 0x6c61u;
        constexpr std::uint64_t kPixelBranch = 0x7078u;

        void require_nonnegative(double v, const char* key) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ConfigError(key, fmt::format("weight must be finite and >= 0, got {}", v));
            }
        }

        Image gaussian_like(const Image& shape, std::uint64_t seed) {
            Image eps(shape.width(), shape.height(), shape.channels());
            const auto v = detail::normal_vector(seed, eps.size(), 1.0);
            std::copy(v.begin(), v.end(), eps.data().begin());
            return eps;
        }

        void require_same_shape(const Image& got, const Image& want, const char* what) {
            if (!got.same_shape(want)) {
                throw ContractError(fmt::format("{} has shape {}x{}x{}, expected {}x{}x{}", what, got.width(),
                                                got.height(), got.channels(), want.width(), want.height(),
                                                want.channels()));
            }
        }

    } // namespace

    void DSSDConfig::validate() const {
        require_nonnegative(lambda_z, "weights.lambda_z");
        require_nonnegative(lambda_x, "weights.lambda_x");
        require_nonnegative(lambda_dssd, "weights.lambda_dssd");
        require_nonnegative(lambda_rgb, "weights.lambda_rgb");
        require_nonnegative(lambda_mask, "weights.lambda_mask");
        if (lambda_z == 0.0 && lambda_x == 0.0) {
            throw ConfigError("weights.lambda_z", "at least one of lambda_z and lambda_x must be positive");
        }
        schedule.validate();
    }

    double timestep_weight(TimestepWeighting weighting, double alpha_bar) noexcept {
        return weighting == TimestepWeighting::ConstantOne ? 1.0 : 1.0 - alpha_bar;
    }

    Image forward_noise(const Image& clean, const Image& eps, double alpha_bar) {
        if (!clean.same_shape(eps)) {
            throw ArgumentError("forward_noise: clean tensor and noise differ in shape");
        }
        const double a = std::sqrt(alpha_bar);
        const double b = std::sqrt(1.0 - alpha_bar);
        Image out(clean.width(), clean.height(), clean.channels());
        auto o = out.data();
        auto x = clean.data();
        auto e = eps.data();
        for (std::size_t i = 0; i < o.size(); ++i) {
            o[i] = a * x[i] + b * e[i];
        }
        return out;
    }

    Image dssd_residual(NoiseSpace space, const Image& noised, const std::string& prompt, const StyleEmbedding& style,
                        int t, double delta_lambda, const Image& eps, DiffusionScoreProvider& provider) {
        require_same_shape(eps, noised, "noise");
        const Image uncond = provider.predict_noise(space, noised, prompt, nullptr, t);
        const Image cond = provider.predict_noise(space, noised, prompt, &style, t);
        require_same_shape(uncond, noised, "unconditional noise prediction");
        require_same_shape(cond, noised, "style-conditioned noise prediction");

        Image r(noised.width(), noised.height(), noised.channels());
        auto out = r.data();
        auto u = uncond.data();
        auto c = cond.data();
        auto e = eps.data();
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = (1.0 - delta_lambda) * u[i] + delta_lambda * c[i] - e[i];
        }
        return r;
    }

    DSSDTerm dssd_term(const Image& render, const std::string& prompt, const StyleEmbedding& style,
                       const GuidanceSample& guidance, const DSSDConfig& cfg, DiffusionScoreProvider& provider,
                       std::uint64_t noise_seed) {
        const int t = guidance.timestep;
        const double abar = provider.alpha_bar(t);
        const double w = timestep_weight(cfg.weighting, abar);

        DSSDTerm term;
        term.timestep = t;
        term.delta_lambda = guidance.delta_lambda;
        term.direction = Image(render.width(), render.height(), render.channels());

        if (cfg.lambda_z > 0.0) {
            const Image z = provider.encode(render);
            const Image eps = gaussian_like(z, detail::mix(noise_seed, kLatentBranch));
            const Image r = dssd_residual(NoiseSpace::Latent, forward_noise(z, eps, abar), prompt, style, t,
                                          guidance.delta_lambda, eps, provider);
            Image pulled = provider.encode_backward(render, r);
            require_same_shape(pulled, render, "encoder pullback");
            pulled *= cfg.lambda_z;
            term.direction += pulled;
        }
        if (cfg.lambda_x > 0.0) {
            const Image eps = gaussian_like(render, detail::mix(noise_seed, kPixelBranch));
            Image r = dssd_residual(NoiseSpace::Pixel, forward_noise(render, eps, abar), prompt, style, t,
                                    guidance.delta_lambda, eps, provider);
            r *= cfg.lambda_x;
            term.direction += r;
        }
        term.direction *= w;

        const double n = static_cast<double>(std::max<std::size_t>(render.size(), 1));
        term.loss = sum_of_squares(term.direction) / (2.0 * n);
        term.grad_image = term.direction * (1.0 / n);
        return term;
    }

    CloudGradient dssd_color_gradient(const GaussianCloud& cloud, const CameraView& view, const StyleEmbedding& style,
                                      const std::string& prompt, const GuidanceState& state, const DSSDConfig& cfg,
                                      DiffusionScoreProvider& provider, std::uint64_t noise_seed,
                                      const Rgb& background) {
        if (cfg.lambda_z == 0.0 && cfg.lambda_x == 0.0) {
            return CloudGradient::zeros_like(cloud);
        }
        const RenderOutput out = render(cloud, view, background);
        const GuidanceSample g = derive_guidance(state, cfg.schedule);
        const DSSDTerm term = dssd_term(out.rgb, prompt, style, g, cfg, provider, noise_seed);
        return color_gradient(cloud, view, term.grad_image);
    }

    StyleObjective style_objective(const RenderOutput& render, const Image& target_mask, const Image* guidance_view,
                                   bool rgb_overlay, const DSSDTerm& dssd, const DSSDConfig& cfg) {
        StyleObjective o;
        const Image& rgb = render.rgb;
        o.dssd = dssd.loss;
        o.grad_rgb = dssd.grad_image * cfg.lambda_dssd;
        if (!o.grad_rgb.same_shape(rgb)) {
            throw ArgumentError("DSSD term was computed for a different render size");
        }

        o.lambda_rgb_effective = rgb_overlay ? cfg.lambda_rgb : 0.0;
        if (o.lambda_rgb_effective > 0.0) {
            if (guidance_view == nullptr) {
                throw ConfigError("style.guidance", "RGB guidance is active but no pre-stylized view is available");
            }
            o.rgb = mean_squared_error(rgb, *guidance_view);
            const double k = 2.0 * o.lambda_rgb_effective / static_cast<double>(rgb.size());
            auto g = o.grad_rgb.data();
            auto a = rgb.data();
            auto b = guidance_view->data();
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += k * (a[i] - b[i]);
            }
        } else if (guidance_view != nullptr) {
            o.rgb = mean_squared_error(rgb, *guidance_view);
        }

        if (cfg.lambda_mask > 0.0 || !target_mask.empty()) {
            if (target_mask.empty()) {
                throw ArgumentError("mask loss enabled but no target mask was supplied");
            }
            o.mask = mean_squared_error(render.alpha, target_mask);
        }

        o.total = cfg.lambda_dssd * o.dssd + o.lambda_rgb_effective * o.rgb + cfg.lambda_mask * o.mask;
        return o;
    }

} // namespace gsstyle
