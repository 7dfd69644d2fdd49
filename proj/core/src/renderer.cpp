#include "gsstyle/renderer.hpp"

#include "gsstyle/errors.hpp"
#include "gsstyle/sh.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <numeric>

namespace gsstyle {

    namespace {

        double logistic(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

        Eigen::Matrix3d quaternion_to_rotation(const double* q) {
            Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
            return quat.normalized().toRotationMatrix();
        }

        void check_view(const CameraView& view) {
            if (view.width <= 0 || view.height <= 0) {
                throw ArgumentError(fmt::format("zero-size image requested ({}x{})", view.width, view.height));
            }
        }

        std::array<double, 3> view_direction(const GaussianCloud& cloud, std::size_t i, const Vec3& center) {
            std::array<double, 3> d = {cloud.positions[i * 3] - center[0], cloud.positions[i * 3 + 1] - center[1],
                                       cloud.positions[i * 3 + 2] - center[2]};
            const double n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
            if (n > 0.0) {
                for (double& v : d) {
                    v /= n;
                }
            }
            return d;
        }

        // Visits every (pixel, gaussian, weight) triple in front-to-back order and returns the
        // final transmittance per pixel.
        template <typename Visit>
        Image composite(const GaussianCloud& cloud, const CameraView& view, Visit&& visit) {
            auto projected = project_gaussians(cloud, view);
            std::stable_sort(projected.begin(), projected.end(), [](const auto& a, const auto& b) {
                return a.depth < b.depth;
            });
            Image transmittance(view.width, view.height, 1, 1.0);
            for (const auto& g : projected) {
                for (int y = g.y_min; y <= g.y_max; ++y) {
                    for (int x = g.x_min; x <= g.x_max; ++x) {
                        const double a = g.opacity * g.falloff(x, y);
                        if (a < kMinAlpha) {
                            continue;
                        }
                        double& t = transmittance.at(x, y);
                        visit(x, y, g.index, a * t);
                        t *= 1.0 - a;
                    }
                }
            }
            return transmittance;
        }

    } // namespace

    double ProjectedGaussian::falloff(double px, double py) const noexcept {
        const double dx = px - mean[0];
        const double dy = py - mean[1];
        const double m = conic[0] * dx * dx + 2.0 * conic[1] * dx * dy + conic[2] * dy * dy;
        if (m > kSupportSigmas * kSupportSigmas) {
            return 0.0;
        }
        return std::exp(-0.5 * m);
    }

    std::vector<ProjectedGaussian> project_gaussians(const GaussianCloud& cloud, const CameraView& view) {
        check_view(view);
        Eigen::Matrix3d w;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                w(i, j) = view.world_to_camera[static_cast<std::size_t>(i * 4 + j)];
            }
        }

        std::vector<ProjectedGaussian> out;
        out.reserve(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Vec3 p = view.to_camera({cloud.positions[i * 3], cloud.positions[i * 3 + 1], cloud.positions[i * 3 + 2]});
            const double z = p[2];
            if (!(z > kNearPlane)) {
                continue;
            }

            const Eigen::Matrix3d r = quaternion_to_rotation(&cloud.rotations[i * 4]);
            const Eigen::Vector3d s(std::exp(cloud.log_scales[i * 3]), std::exp(cloud.log_scales[i * 3 + 1]),
                                    std::exp(cloud.log_scales[i * 3 + 2]));
            const Eigen::Matrix3d m = r * s.asDiagonal();
            const Eigen::Matrix3d sigma = m * m.transpose();

            Eigen::Matrix<double, 2, 3> j;
            j << view.fx / z, 0.0, -view.fx * p[0] / (z * z),
                0.0, view.fy / z, -view.fy * p[1] / (z * z);
            const Eigen::Matrix<double, 2, 3> t = j * w;
            const Eigen::Matrix2d cov = t * sigma * t.transpose();

            const double a = cov(0, 0);
            const double b = 0.5 * (cov(0, 1) + cov(1, 0));
            const double c = cov(1, 1);
            const double det = a * c - b * b;
            if (!(det > 0.0) || !(a > 0.0) || !std::isfinite(det)) {
                continue;
            }

            ProjectedGaussian g;
            g.index = i;
            g.depth = z;
            g.mean = {view.fx * p[0] / z + view.cx, view.fy * p[1] / z + view.cy};
            g.cov = {a, b, c};
            g.conic = {c / det, -b / det, a / det};
            g.opacity = logistic(cloud.opacity_logits[i]);

            const double rx = kSupportSigmas * std::sqrt(a);
            const double ry = kSupportSigmas * std::sqrt(c);
            const double x0 = std::ceil(g.mean[0] - rx);
            const double x1 = std::floor(g.mean[0] + rx);
            const double y0 = std::ceil(g.mean[1] - ry);
            const double y1 = std::floor(g.mean[1] + ry);
            g.x_min = static_cast<int>(std::max(x0, 0.0));
            g.y_min = static_cast<int>(std::max(y0, 0.0));
            g.x_max = static_cast<int>(std::min(x1, static_cast<double>(view.width - 1)));
            g.y_max = static_cast<int>(std::min(y1, static_cast<double>(view.height - 1)));
            if (x1 < 0.0 || y1 < 0.0 || x0 > view.width - 1 || y0 > view.height - 1) {
                continue;
            }
            out.push_back(g);
        }
        return out;
    }

    std::vector<Rgb> gaussian_colors(const GaussianCloud& cloud, const CameraView& view) {
        const Vec3 center = view.center();
        std::vector<Rgb> colors(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            colors[i] = sh::evaluate(cloud, i, view_direction(cloud, i, center));
        }
        return colors;
    }

    RenderOutput render_with_colors(const GaussianCloud& cloud, const CameraView& view, std::span<const Rgb> colors,
                                    const Rgb& background) {
        check_view(view);
        if (colors.size() != cloud.size()) {
            throw ArgumentError(fmt::format("{} colors for {} Gaussians", colors.size(), cloud.size()));
        }
        RenderOutput out{Image(view.width, view.height, 3), Image(view.width, view.height, 1)};
        const Image t = composite(cloud, view, [&](int x, int y, std::size_t i, double w) {
            for (int c = 0; c < 3; ++c) {
                out.rgb.at(x, y, c) += w * colors[i][static_cast<std::size_t>(c)];
            }
        });
        for (int y = 0; y < view.height; ++y) {
            for (int x = 0; x < view.width; ++x) {
                const double tr = t.at(x, y);
                for (int c = 0; c < 3; ++c) {
                    out.rgb.at(x, y, c) += tr * background[static_cast<std::size_t>(c)];
                }
                out.alpha.at(x, y) = 1.0 - tr;
            }
        }
        return out;
    }

    RenderOutput render(const GaussianCloud& cloud, const CameraView& view, const Rgb& background) {
        check_view(view);
        const auto colors = gaussian_colors(cloud, view);
        return render_with_colors(cloud, view, colors, background);
    }

    Image render_mask(const GaussianCloud& cloud, const CameraView& view, double threshold) {
        if (!(threshold > 0.0 && threshold < 1.0)) {
            throw ArgumentError(fmt::format("mask threshold must be in (0,1), got {}", threshold));
        }
        check_view(view);
        const Image t = composite(cloud, view, [](int, int, std::size_t, double) {});
        Image mask(view.width, view.height, 1);
        for (int y = 0; y < view.height; ++y) {
            for (int x = 0; x < view.width; ++x) {
                mask.at(x, y) = (1.0 - t.at(x, y)) >= threshold ? 1.0 : 0.0;
            }
        }
        return mask;
    }

    ColorJacobian::ColorJacobian(int width, int height, std::size_t gaussians)
        : width_(width),
          height_(height),
          gaussians_(gaussians),
          weights_(gaussians * static_cast<std::size_t>(width) * height, 0.0),
          background_(width, height, 1) {}

    Image ColorJacobian::apply(std::span<const Rgb> colors, const Rgb& background) const {
        if (colors.size() != gaussians_) {
            throw ArgumentError(fmt::format("{} colors for {} Gaussians", colors.size(), gaussians_));
        }
        Image rgb(width_, height_, 3);
        for (int y = 0; y < height_; ++y) {
            for (int x = 0; x < width_; ++x) {
                for (int c = 0; c < 3; ++c) {
                    rgb.at(x, y, c) = background_.at(x, y) * background[static_cast<std::size_t>(c)];
                }
            }
        }
        for (std::size_t i = 0; i < gaussians_; ++i) {
            for (int y = 0; y < height_; ++y) {
                for (int x = 0; x < width_; ++x) {
                    const double w = weight(i, x, y);
                    for (int c = 0; c < 3; ++c) {
                        rgb.at(x, y, c) += w * colors[i][static_cast<std::size_t>(c)];
                    }
                }
            }
        }
        return rgb;
    }

    std::vector<Rgb> ColorJacobian::backprop(const Image& grad_rgb) const {
        if (grad_rgb.width() != width_ || grad_rgb.height() != height_ || grad_rgb.channels() != 3) {
            throw ArgumentError("gradient image does not match the jacobian");
        }
        std::vector<Rgb> grads(gaussians_, Rgb{0.0, 0.0, 0.0});
        for (std::size_t i = 0; i < gaussians_; ++i) {
            for (int y = 0; y < height_; ++y) {
                for (int x = 0; x < width_; ++x) {
                    const double w = weight(i, x, y);
                    for (int c = 0; c < 3; ++c) {
                        grads[i][static_cast<std::size_t>(c)] += w * grad_rgb.at(x, y, c);
                    }
                }
            }
        }
        return grads;
    }

    ColorJacobian color_jacobian(const GaussianCloud& cloud, const CameraView& view, std::size_t max_entries) {
        check_view(view);
        const std::size_t entries = cloud.size() * static_cast<std::size_t>(view.width) * view.height;
        if (entries > max_entries) {
            throw CapacityError(fmt::format(
                "dense color jacobian needs {} entries (limit {}); use the streaming backprop_colors/color_gradient path",
                entries, max_entries));
        }
        ColorJacobian jac(view.width, view.height, cloud.size());
        const Image t = composite(cloud, view, [&](int x, int y, std::size_t i, double w) { jac.weight(i, x, y) = w; });
        jac.background_weight() = t;
        return jac;
    }

    std::vector<Rgb> backprop_colors(const GaussianCloud& cloud, const CameraView& view, const Image& grad_rgb) {
        check_view(view);
        if (grad_rgb.width() != view.width || grad_rgb.height() != view.height || grad_rgb.channels() != 3) {
            throw ArgumentError(fmt::format("gradient image {}x{}x{} does not match view {}x{}x3", grad_rgb.width(),
                                            grad_rgb.height(), grad_rgb.channels(), view.width, view.height));
        }
        std::vector<Rgb> grads(cloud.size(), Rgb{0.0, 0.0, 0.0});
        composite(cloud, view, [&](int x, int y, std::size_t i, double w) {
            for (int c = 0; c < 3; ++c) {
                grads[i][static_cast<std::size_t>(c)] += w * grad_rgb.at(x, y, c);
            }
        });
        return grads;
    }

    void accumulate_sh_gradient(const GaussianCloud& cloud, const CameraView& view, std::span<const Rgb> grad_colors,
                                CloudGradient& grad) {
        const Vec3 center = view.center();
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Rgb& g = grad_colors[i];
            if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0) {
                continue;
            }
            sh::accumulate_gradient(cloud, i, view_direction(cloud, i, center), g, grad);
        }
    }

    CloudGradient color_gradient(const GaussianCloud& cloud, const CameraView& view, const Image& grad_rgb) {
        CloudGradient grad = CloudGradient::zeros_like(cloud);
        const auto grad_colors = backprop_colors(cloud, view, grad_rgb);
        accumulate_sh_gradient(cloud, view, grad_colors, grad);
        return grad;
    }

} // namespace gsstyle
