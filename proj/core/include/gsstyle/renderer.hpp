#pragma once

#include "gsstyle/camera.hpp"
#include "gsstyle/gaussian_cloud.hpp"
#include "gsstyle/image.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace gsstyle {

    /// Gaussians closer than this (camera-space z) are dropped.
    inline constexpr double kNearPlane = 0.01;
    /// Per-Gaussian opacities below this are skipped during compositing.
    inline constexpr double kMinAlpha = 1.0 / 255.0;
    /// Support truncation, in standard deviations (Mahalanobis radius).
    inline constexpr double kSupportSigmas = 3.0;

    /// A Gaussian after projection into a view. Pixel (x, y) samples image-plane point (x, y).
    struct ProjectedGaussian {
        std::size_t index = 0;         // into the cloud
        double depth = 0.0;            // camera-space z
        std::array<double, 2> mean{};  // pixel coordinates
        std::array<double, 3> cov{};   // 2D covariance (xx, xy, yy)
        std::array<double, 3> conic{}; // inverse covariance (xx, xy, yy)
        double opacity = 0.0;          // logistic(opacity_logit)
        int x_min = 0, x_max = -1, y_min = 0, y_max = -1; // clipped 3-sigma pixel bounds, inclusive

        /// Falloff G at a pixel; zero outside the 3-sigma ellipse.
        double falloff(double px, double py) const noexcept;
    };

    /// EWA projection of every visible Gaussian, in cloud order. Gaussians at or behind the
    /// near plane, with degenerate 2D covariance, or with no pixel inside the image are omitted.
    std::vector<ProjectedGaussian> project_gaussians(const GaussianCloud& cloud, const CameraView& view);

    /// View-dependent color of every Gaussian (SH evaluated once per Gaussian per view).
    std::vector<Rgb> gaussian_colors(const GaussianCloud& cloud, const CameraView& view);

    struct RenderOutput {
        Image rgb;   // H x W x 3, linear, unclamped
        Image alpha; // H x W x 1, accumulated opacity
    };

    RenderOutput render(const GaussianCloud& cloud, const CameraView& view, const Rgb& background = {0.0, 0.0, 0.0});

    /// Same compositing with caller-supplied per-Gaussian colors (one per cloud entry).
    RenderOutput render_with_colors(const GaussianCloud& cloud, const CameraView& view, std::span<const Rgb> colors,
                                    const Rgb& background = {0.0, 0.0, 0.0});

    /// Binary mask (1 where accumulated alpha >= threshold). threshold must lie in (0,1).
    Image render_mask(const GaussianCloud& cloud, const CameraView& view, double threshold);

    /// Dense compositing weights: rgb(p) = sum_i w_i(p) * c_i + w_bg(p) * background.
    class ColorJacobian {
    public:
        ColorJacobian(int width, int height, std::size_t gaussians);

        int width() const noexcept { return width_; }
        int height() const noexcept { return height_; }
        std::size_t gaussian_count() const noexcept { return gaussians_; }

        double weight(std::size_t gaussian, int x, int y) const noexcept {
            return weights_[(gaussian * static_cast<std::size_t>(height_) + y) * width_ + x];
        }
        double& weight(std::size_t gaussian, int x, int y) noexcept {
            return weights_[(gaussian * static_cast<std::size_t>(height_) + y) * width_ + x];
        }
        const Image& background_weight() const noexcept { return background_; }
        Image& background_weight() noexcept { return background_; }

        /// rgb = sum_i w_i c_i + w_bg * background.
        Image apply(std::span<const Rgb> colors, const Rgb& background) const;

        /// dL/dc_i = sum_p w_i(p) * dL/drgb(p).
        std::vector<Rgb> backprop(const Image& grad_rgb) const;

    private:
        int width_;
        int height_;
        std::size_t gaussians_;
        std::vector<double> weights_;
        Image background_;
    };

    inline constexpr std::size_t kDefaultDenseJacobianLimit = std::size_t{1} << 25;

    /// Dense jacobian of the image w.r.t. per-Gaussian colors. Throws CapacityError when
    /// N*H*W exceeds max_entries; use backprop_colors / color_gradient (streaming) instead.
    ColorJacobian color_jacobian(const GaussianCloud& cloud, const CameraView& view,
                                 std::size_t max_entries = kDefaultDenseJacobianLimit);

    /// Streaming dL/dc_i: recomposites the view and accumulates without storing weights.
    std::vector<Rgb> backprop_colors(const GaussianCloud& cloud, const CameraView& view, const Image& grad_rgb);

    /// Streaming gradient of a loss w.r.t. the SH color coefficients, given dL/drgb for this view.
    /// Geometry entries of the result are zero.
    CloudGradient color_gradient(const GaussianCloud& cloud, const CameraView& view, const Image& grad_rgb);

    /// Adds the SH chain rule for per-Gaussian color gradients into `grad`.
    void accumulate_sh_gradient(const GaussianCloud& cloud, const CameraView& view, std::span<const Rgb> grad_colors,
                                CloudGradient& grad);

} // namespace gsstyle
