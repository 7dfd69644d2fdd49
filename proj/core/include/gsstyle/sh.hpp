#pragma once

#include "gsstyle/gaussian_cloud.hpp"
#include "gsstyle/image.hpp"

#include <array>

namespace gsstyle::sh {

    inline constexpr double kC0 = 0.28209479177387814;
    inline constexpr double kColorOffset = 0.5;

    /// Real SH basis values for a unit direction, up to the given degree. Entry 0 is the DC
    /// basis; entries 1..15 follow the usual 3DGS ordering. Unused entries are zero.
    std::array<double, 16> basis(int degree, const std::array<double, 3>& dir) noexcept;

    /// color_c = C0 * dc_c + sum_k basis_k * rest_{c,k} + 0.5. No clamping.
    Rgb evaluate(const GaussianCloud& cloud, std::size_t index, const std::array<double, 3>& dir) noexcept;

    /// Accumulates dL/d(sh_dc, sh_rest) for Gaussian `index` given dL/dcolor.
    void accumulate_gradient(const GaussianCloud& cloud, std::size_t index, const std::array<double, 3>& dir,
                             const Rgb& grad_color, CloudGradient& grad) noexcept;

} // namespace gsstyle::sh
