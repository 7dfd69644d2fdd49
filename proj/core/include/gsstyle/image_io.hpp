#pragma once

#include "gsstyle/image.hpp"

#include <cstdint>
#include <filesystem>

namespace gsstyle {

    enum class Transfer {
        Linear, // values written as-is after clamping
        Srgb    // linear values passed through the sRGB OETF before quantization
    };

    /// Writes an 8-bit PNG (1 or 3 channels). Values are clamped to [0,1] here and only here.
    void write_png(const std::filesystem::path& path, const Image& image, Transfer transfer = Transfer::Srgb);

    /// Reads an 8-bit PNG into [0,1] values with 3 channels. Alpha is dropped, gray is expanded.
    /// Stored code values are returned as-is (no inverse transfer).
    Image read_png(const std::filesystem::path& path);

    double linear_to_srgb(double v) noexcept;
    std::uint8_t quantize_unit(double v) noexcept;

} // namespace gsstyle
