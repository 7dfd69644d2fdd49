#include "gsstyle/sh.hpp"

namespace gsstyle::sh {

    namespace {
        constexpr double kC1 = 0.4886025119029199;
        constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                  -1.0925484305920792, 0.5462742152960396};
        constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                  0.3731763325901154, -0.4570457994644658, 1.445305721320277,
                                  -0.5900435899266435};
    } // namespace

    std::array<double, 16> basis(int degree, const std::array<double, 3>& dir) noexcept {
        std::array<double, 16> b{};
        b[0] = kC0;
        if (degree < 1) {
            return b;
        }
        const double x = dir[0], y = dir[1], z = dir[2];
        b[1] = -kC1 * y;
        b[2] = kC1 * z;
        b[3] = -kC1 * x;
        if (degree < 2) {
            return b;
        }
        const double xx = x * x, yy = y * y, zz = z * z;
        const double xy = x * y, yz = y * z, xz = x * z;
        b[4] = kC2[0] * xy;
        b[5] = kC2[1] * yz;
        b[6] = kC2[2] * (2.0 * zz - xx - yy);
        b[7] = kC2[3] * xz;
        b[8] = kC2[4] * (xx - yy);
        if (degree < 3) {
            return b;
        }
        b[9] = kC3[0] * y * (3.0 * xx - yy);
        b[10] = kC3[1] * xy * z;
        b[11] = kC3[2] * y * (4.0 * zz - xx - yy);
        b[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
        b[13] = kC3[4] * x * (4.0 * zz - xx - yy);
        b[14] = kC3[5] * z * (xx - yy);
        b[15] = kC3[6] * x * (xx - 3.0 * yy);
        return b;
    }

    Rgb evaluate(const GaussianCloud& cloud, std::size_t index, const std::array<double, 3>& dir) noexcept {
        const auto b = basis(cloud.sh_degree, dir);
        const std::size_t k = static_cast<std::size_t>(cloud.rest_per_channel());
        Rgb color{};
        for (std::size_t c = 0; c < 3; ++c) {
            double v = b[0] * cloud.sh_dc[index * 3 + c];
            const double* rest = cloud.sh_rest.data() + index * 3 * k + c * k;
            for (std::size_t j = 0; j < k; ++j) {
                v += b[j + 1] * rest[j];
            }
            color[c] = v + kColorOffset;
        }
        return color;
    }

    void accumulate_gradient(const GaussianCloud& cloud, std::size_t index, const std::array<double, 3>& dir,
                             const Rgb& grad_color, CloudGradient& grad) noexcept {
        const auto b = basis(cloud.sh_degree, dir);
        const std::size_t k = static_cast<std::size_t>(cloud.rest_per_channel());
        for (std::size_t c = 0; c < 3; ++c) {
            grad.sh_dc[index * 3 + c] += b[0] * grad_color[c];
            double* rest = grad.sh_rest.data() + index * 3 * k + c * k;
            for (std::size_t j = 0; j < k; ++j) {
                rest[j] += b[j + 1] * grad_color[c];
            }
        }
    }

} // namespace gsstyle::sh
