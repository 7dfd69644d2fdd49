#pragma once

#include "gsstyle/image.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace gsstyle::cli {

    // Exit codes shared by all commands.
    inline constexpr int kOk = 0;
    inline constexpr int kFailure = 1;      // bad input data, I/O, numerical abort
    inline constexpr int kConfigError = 2;  // invalid configuration or arguments

    /// Runs a configured stylization. Writes stylized.ply, run.jsonl, summary.json and per-phase
    /// previews (previews/*.png) into the output directory.
    int cmd_stylize(const std::filesystem::path& config, const std::optional<std::filesystem::path>& output_dir,
                    std::ostream& out, std::ostream& err);

    /// One sRGB PNG per camera, named after the camera.
    int cmd_render(const std::filesystem::path& ply, const std::filesystem::path& cameras,
                   const std::filesystem::path& out_dir, const Rgb& background, std::ostream& out, std::ostream& err);

    /// PSNR / SSIM / LPIPS for every PNG present in both directories, as JSON on `out`.
    int cmd_eval(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b, std::uint64_t feature_seed,
                 std::ostream& out, std::ostream& err);

    /// Scene statistics as JSON.
    int cmd_inspect(const std::filesystem::path& ply, std::ostream& out, std::ostream& err);

} // namespace gsstyle::cli
