#include "gsstyle/image.hpp"

#include "gsstyle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>

namespace gsstyle {

    Image::Image(int width, int height, int channels, double fill)
        : width_(width),
          height_(height),
          channels_(channels) {
        if (width < 0 || height < 0 || channels < 0) {
            throw ArgumentError(fmt::format("invalid image shape {}x{}x{}", width, height, channels));
        }
        data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
    }

    Image& Image::operator+=(const Image& other) {
        if (!same_shape(other)) {
            throw ArgumentError("image shape mismatch in +=");
        }
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] += other.data_[i];
        }
        return *this;
    }

    Image& Image::operator-=(const Image& other) {
        if (!same_shape(other)) {
            throw ArgumentError("image shape mismatch in -=");
        }
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] -= other.data_[i];
        }
        return *this;
    }

    Image& Image::operator*=(double k) noexcept {
        for (double& v : data_) {
            v *= k;
        }
        return *this;
    }

    Image operator+(Image a, const Image& b) { return a += b; }
    Image operator-(Image a, const Image& b) { return a -= b; }
    Image operator*(Image a, double k) { return a *= k; }

    double sum_of_squares(const Image& image) noexcept {
        double s = 0.0;
        for (double v : image.data()) {
            s += v * v;
        }
        return s;
    }

    double mean_squared_error(const Image& a, const Image& b) {
        if (!a.same_shape(b)) {
            throw ArgumentError(fmt::format("shape mismatch: {}x{}x{} vs {}x{}x{}",
                                            a.width(), a.height(), a.channels(),
                                            b.width(), b.height(), b.channels()));
        }
        if (a.empty()) {
            return 0.0;
        }
        double s = 0.0;
        auto da = a.data();
        auto db = b.data();
        for (std::size_t i = 0; i < da.size(); ++i) {
            const double d = da[i] - db[i];
            s += d * d;
        }
        return s / static_cast<double>(da.size());
    }

    int scaled_extent(int extent, double scale) noexcept {
        return std::max(1, static_cast<int>(std::lround(extent * scale)));
    }

    namespace {

        struct Tap {
            int i0;
            int i1;
            double w1; // weight of i1; i0 gets 1 - w1
        };

        // Half-pixel-center source coordinate for each destination index (align_corners = false).
        std::vector<Tap> make_taps(int src, int dst) {
            std::vector<Tap> taps(static_cast<std::size_t>(dst));
            const double ratio = static_cast<double>(src) / dst;
            for (int d = 0; d < dst; ++d) {
                double s = (d + 0.5) * ratio - 0.5;
                s = std::max(s, 0.0);
                int i0 = static_cast<int>(std::floor(s));
                i0 = std::min(i0, src - 1);
                const int i1 = std::min(i0 + 1, src - 1);
                taps[static_cast<std::size_t>(d)] = {i0, i1, s - i0};
            }
            return taps;
        }

    } // namespace

    Image resize_bilinear(const Image& src, int width, int height) {
        if (width <= 0 || height <= 0) {
            throw ArgumentError(fmt::format("invalid resize target {}x{}", width, height));
        }
        if (src.width() == width && src.height() == height) {
            return src;
        }
        if (src.empty()) {
            throw ArgumentError("cannot resize an empty image");
        }
        const auto tx = make_taps(src.width(), width);
        const auto ty = make_taps(src.height(), height);
        Image out(width, height, src.channels());
        for (int y = 0; y < height; ++y) {
            const Tap& ry = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < width; ++x) {
                const Tap& rx = tx[static_cast<std::size_t>(x)];
                for (int c = 0; c < src.channels(); ++c) {
                    const double top = (1.0 - rx.w1) * src.at(rx.i0, ry.i0, c) + rx.w1 * src.at(rx.i1, ry.i0, c);
                    const double bottom = (1.0 - rx.w1) * src.at(rx.i0, ry.i1, c) + rx.w1 * src.at(rx.i1, ry.i1, c);
                    out.at(x, y, c) = (1.0 - ry.w1) * top + ry.w1 * bottom;
                }
            }
        }
        return out;
    }

    Image resize_bilinear_backward(const Image& grad_out, int src_width, int src_height) {
        if (grad_out.width() == src_width && grad_out.height() == src_height) {
            return grad_out;
        }
        const auto tx = make_taps(src_width, grad_out.width());
        const auto ty = make_taps(src_height, grad_out.height());
        Image grad(src_width, src_height, grad_out.channels());
        for (int y = 0; y < grad_out.height(); ++y) {
            const Tap& ry = ty[static_cast<std::size_t>(y)];
            for (int x = 0; x < grad_out.width(); ++x) {
                const Tap& rx = tx[static_cast<std::size_t>(x)];
                for (int c = 0; c < grad_out.channels(); ++c) {
                    const double g = grad_out.at(x, y, c);
                    grad.at(rx.i0, ry.i0, c) += (1.0 - rx.w1) * (1.0 - ry.w1) * g;
                    grad.at(rx.i1, ry.i0, c) += rx.w1 * (1.0 - ry.w1) * g;
                    grad.at(rx.i0, ry.i1, c) += (1.0 - rx.w1) * ry.w1 * g;
                    grad.at(rx.i1, ry.i1, c) += rx.w1 * ry.w1 * g;
                }
            }
        }
        return grad;
    }

} // namespace gsstyle
