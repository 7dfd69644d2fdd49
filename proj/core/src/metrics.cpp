#include "gsstyle/metrics.hpp"

#include "gsstyle/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>

namespace gsstyle {

    namespace {

        constexpr int kWindow = 11;
        constexpr double kSigma = 1.5;

        void require_same(const Image& a, const Image& b, const char* who) {
            if (!a.same_shape(b)) {
                throw ArgumentError(fmt::format("{}: shapes differ ({}x{}x{} vs {}x{}x{})", who, a.width(), a.height(),
                                                a.channels(), b.width(), b.height(), b.channels()));
            }
            if (a.empty()) {
                throw ArgumentError(fmt::format("{}: empty image", who));
            }
        }

        // Valid-mode separable filter of one channel: (W-10) x (H-10) output.
        std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::vector<double>& k) {
            const int ow = w - kWindow + 1;
            const int oh = h - kWindow + 1;
            std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < ow; ++x) {
                    double s = 0.0;
                    for (int i = 0; i < kWindow; ++i) {
                        s += k[i] * plane[static_cast<std::size_t>(y) * w + x + i];
                    }
                    tmp[static_cast<std::size_t>(y) * ow + x] = s;
                }
            }
            std::vector<double> out(static_cast<std::size_t>(ow) * oh);
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    double s = 0.0;
                    for (int i = 0; i < kWindow; ++i) {
                        s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
                    }
                    out[static_cast<std::size_t>(y) * ow + x] = s;
                }
            }
            return out;
        }

    } // namespace

    double psnr(const Image& a, const Image& b, double peak) {
        require_same(a, b, "psnr");
        const double mse = mean_squared_error(a, b);
        if (mse <= 0.0) {
            return kPsnrCap;
        }
        return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
    }

    std::vector<double> ssim_window_1d() {
        std::vector<double> k(kWindow);
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            const double d = i - kWindow / 2;
            k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += k[i];
        }
        for (double& v : k) {
            v /= sum;
        }
        return k;
    }

    double ssim(const Image& a, const Image& b, double peak) {
        require_same(a, b, "ssim");
        const int w = a.width();
        const int h = a.height();
        if (w < kWindow || h < kWindow) {
            throw ArgumentError(fmt::format("ssim needs images of at least {}x{}, got {}x{}", kWindow, kWindow, w, h));
        }
        const double c1 = (0.01 * peak) * (0.01 * peak);
        const double c2 = (0.03 * peak) * (0.03 * peak);
        const auto k = ssim_window_1d();
        const std::size_t n = static_cast<std::size_t>(w) * h;

        double total = 0.0;
        for (int c = 0; c < a.channels(); ++c) {
            std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
            for (int j = 0; j < h; ++j) {
                for (int i = 0; i < w; ++i) {
                    const std::size_t p = static_cast<std::size_t>(j) * w + i;
                    x[p] = a.at(i, j, c);
                    y[p] = b.at(i, j, c);
                    xx[p] = x[p] * x[p];
                    yy[p] = y[p] * y[p];
                    xy[p] = x[p] * y[p];
                }
            }
            const auto mx = filter_valid(x, w, h, k);
            const auto my = filter_valid(y, w, h, k);
            const auto sxx = filter_valid(xx, w, h, k);
            const auto syy = filter_valid(yy, w, h, k);
            const auto sxy = filter_valid(xy, w, h, k);
            double acc = 0.0;
            for (std::size_t p = 0; p < mx.size(); ++p) {
                const double vx = sxx[p] - mx[p] * mx[p];
                const double vy = syy[p] - my[p] * my[p];
                const double cxy = sxy[p] - mx[p] * my[p];
                acc += ((2.0 * mx[p] * my[p] + c1) * (2.0 * cxy + c2)) /
                       ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
            }
            total += acc / static_cast<double>(mx.size());
        }
        return total / a.channels();
    }

    double lpips(const Image& a, const Image& b, FeatureExtractor& extractor, std::vector<int> layers) {
        require_same(a, b, "lpips");
        if (layers.empty()) {
            for (int l : extractor.layer_ids()) {
                if (l != 0) {
                    layers.push_back(l);
                }
            }
        }
        if (layers.empty()) {
            throw ArgumentError("lpips: extractor exposes no feature layers");
        }
        constexpr double eps = 1e-10;
        const auto fa = extractor.features(a, layers);
        const auto fb = extractor.features(b, layers);
        double total = 0.0;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const Image& p = fa[l];
            const Image& q = fb[l];
            const int ch = p.channels();
            const std::size_t positions = static_cast<std::size_t>(p.width()) * p.height();
            auto pd = p.data();
            auto qd = q.data();
            double layer = 0.0;
            for (std::size_t i = 0; i < positions; ++i) {
                double np = 0.0;
                double nq = 0.0;
                for (int c = 0; c < ch; ++c) {
                    np += pd[i * ch + c] * pd[i * ch + c];
                    nq += qd[i * ch + c] * qd[i * ch + c];
                }
                np = std::sqrt(np) + eps;
                nq = std::sqrt(nq) + eps;
                for (int c = 0; c < ch; ++c) {
                    const double d = pd[i * ch + c] / np - qd[i * ch + c] / nq;
                    layer += d * d;
                }
            }
            total += layer / static_cast<double>(positions);
        }
        return total / static_cast<double>(layers.size());
    }

} // namespace gsstyle
