#pragma once

#include "gsstyle/gaussian_cloud.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gsstyle {

    /// Reads a binary little-endian 3DGS PLY (x,y,z, f_dc_*, f_rest_*, opacity, scale_*, rot_*).
    /// Unknown vertex properties (normals etc.) are skipped. Rotations are renormalized and
    /// sh_degree is inferred from the number of f_rest properties.
    ///
    /// Throws FormatError naming the missing/invalid field, UnsupportedEncodingError for ASCII or
    /// big-endian bodies, IoError if the file cannot be read.
    GaussianCloud load_ply(const std::filesystem::path& path);

    /// Writes the canonical layout: x,y,z, f_dc_0..2, f_rest_0..(3K-1), opacity, scale_0..2, rot_0..3,
    /// all float32. Values are written verbatim (no quaternion normalization).
    void save_ply(const GaussianCloud& cloud, const std::filesystem::path& path);

    /// Property names of the canonical layout for a given SH degree, in file order.
    std::vector<std::string> canonical_ply_properties(int sh_degree);

} // namespace gsstyle
