#pragma once

#include "gsstyle/camera.hpp"
#include "gsstyle/gaussian_cloud.hpp"
#include "gsstyle/image.hpp"
#include "gsstyle/priors.hpp"
#include "gsstyle/renderer.hpp"
#include "gsstyle/scheduler.hpp"

#include <cstdint>
#include <string>

namespace gsstyle {

    enum class TimestepWeighting {
        ConstantOne,
        OneMinusAlphaBar
    };

    struct DSSDConfig {
        double lambda_z = 1.0;    // latent residual weight
        double lambda_x = 1.0;    // pixel residual weight
        double lambda_dssd = 1.0;
        double lambda_rgb = 1.0;  // applies only while the RGB overlay is active
        double lambda_mask = 0.1;
        TimestepWeighting weighting = TimestepWeighting::ConstantOne;
        ScheduleConstants schedule;

        /// Throws ConfigError (keys under "weights.") on negative weights or when both residual
        /// weights are zero.
        void validate() const;
    };

    double timestep_weight(TimestepWeighting weighting, double alpha_bar) noexcept;

    /// x_t = sqrt(abar) * x0 + sqrt(1 - abar) * eps.
    Image forward_noise(const Image& clean, const Image& eps, double alpha_bar);

    /// (1 - dl) * eps(noised | y, t) + dl * eps(noised | y, s, t) - eps.
    /// Throws ContractError when a prediction does not match the input shape.
    Image dssd_residual(NoiseSpace space, const Image& noised, const std::string& prompt, const StyleEmbedding& style,
                        int t, double delta_lambda, const Image& eps, DiffusionScoreProvider& provider);

    /// Score-distillation term for one rendered view. `image_grad` is the distillation direction
    /// omega(t) * (lz * Enc^T r_z + lx * r_x); `loss` is the surrogate |g|^2 / (2 n) whose image
    /// gradient is g / n, n = number of image entries.
    struct DSSDTerm {
        double loss = 0.0;
        Image direction;  // g
        Image grad_image; // g / n
        int timestep = 0;
        double delta_lambda = 0.0;
    };

    /// Noise for the two branches is drawn from `noise_seed` (mixed with a branch tag), so the term
    /// is a pure function of its inputs.
    DSSDTerm dssd_term(const Image& render, const std::string& prompt, const StyleEmbedding& style,
                       const GuidanceSample& guidance, const DSSDConfig& cfg, DiffusionScoreProvider& provider,
                       std::uint64_t noise_seed);

    /// Gradient of the DSSD term over the color parameters for one view. Geometry entries are zero.
    CloudGradient dssd_color_gradient(const GaussianCloud& cloud, const CameraView& view, const StyleEmbedding& style,
                                      const std::string& prompt, const GuidanceState& state, const DSSDConfig& cfg,
                                      DiffusionScoreProvider& provider, std::uint64_t noise_seed,
                                      const Rgb& background = {0.0, 0.0, 0.0});

    /// Weighted style objective for one view: lambda_dssd * L_dssd + lambda_rgb * L_rgb + lambda_mask * L_mask.
    struct StyleObjective {
        double total = 0.0;
        double dssd = 0.0;
        double rgb = 0.0;
        double mask = 0.0;
        double lambda_rgb_effective = 0.0;
        Image grad_rgb; // d total / d render
    };

    /// `guidance_view` may be null unless the overlay is active with lambda_rgb > 0 (ConfigError,
    /// key "style.guidance"). Alpha depends only on frozen geometry, so the mask term contributes
    /// to the value but never to the color gradient.
    StyleObjective style_objective(const RenderOutput& render, const Image& target_mask, const Image* guidance_view,
                                   bool rgb_overlay, const DSSDTerm& dssd, const DSSDConfig& cfg);

} // namespace gsstyle
