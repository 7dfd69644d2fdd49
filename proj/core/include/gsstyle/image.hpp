#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace gsstyle {

    using Rgb = std::array<double, 3>;

    /// Dense row-major H x W x C tensor of doubles. Used for rendered images, alpha maps,
    /// diffusion latents and image-space gradients alike.
    class Image {
    public:
        Image() = default;
        Image(int width, int height, int channels, double fill = 0.0);

        int width() const noexcept { return width_; }
        int height() const noexcept { return height_; }
        int channels() const noexcept { return channels_; }
        std::size_t size() const noexcept { return data_.size(); }
        bool empty() const noexcept { return data_.empty(); }

        double& at(int x, int y, int c = 0) noexcept {
            return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
        }
        double at(int x, int y, int c = 0) const noexcept {
            return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
        }

        std::span<double> data() noexcept { return data_; }
        std::span<const double> data() const noexcept { return data_; }

        bool same_shape(const Image& other) const noexcept {
            return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
        }

        Image& operator+=(const Image& other);
        Image& operator-=(const Image& other);
        Image& operator*=(double k) noexcept;

        friend bool operator==(const Image&, const Image&) = default;

    private:
        int width_ = 0;
        int height_ = 0;
        int channels_ = 0;
        std::vector<double> data_;
    };

    Image operator+(Image a, const Image& b);
    Image operator-(Image a, const Image& b);
    Image operator*(Image a, double k);

    double sum_of_squares(const Image& image) noexcept;
    double mean_squared_error(const Image& a, const Image& b);

    /// Bilinear resampling with half-pixel centers (no antialiasing).
    Image resize_bilinear(const Image& src, int width, int height);

    /// Adjoint of resize_bilinear: maps a gradient on the resized image back onto the source grid.
    Image resize_bilinear_backward(const Image& grad_out, int src_width, int src_height);

    /// Target size of a scale factor; never smaller than one pixel.
    int scaled_extent(int extent, double scale) noexcept;

} // namespace gsstyle
