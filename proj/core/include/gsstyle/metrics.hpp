#pragma once

#include "gsstyle/image.hpp"
#include "gsstyle/priors.hpp"

#include <vector>

namespace gsstyle {

    inline constexpr double kPsnrCap = 100.0;

    /// 10 log10(peak^2 / MSE), capped at 100 dB (also for identical images).
    /// Throws ArgumentError on a shape mismatch or an empty image.
    double psnr(const Image& a, const Image& b, double peak = 1.0);

    /// Mean SSIM over all valid 11x11 windows (Gaussian, sigma 1.5), averaged over channels.
    /// C1 = (0.01 peak)^2, C2 = (0.03 peak)^2. Throws ArgumentError on a shape mismatch or when
    /// either side is smaller than 11 pixels.
    double ssim(const Image& a, const Image& b, double peak = 1.0);

    /// Normalized 11-tap Gaussian (sigma 1.5) used by ssim.
    std::vector<double> ssim_window_1d();

    /// Feature-space distance: at every position each layer's channel vector is scaled to unit
    /// length, squared differences are summed over channels and averaged over positions, then
    /// averaged over layers. Default layers are the extractor's layers except the identity layer 0.
    double lpips(const Image& a, const Image& b, FeatureExtractor& extractor, std::vector<int> layers = {});

} // namespace gsstyle
