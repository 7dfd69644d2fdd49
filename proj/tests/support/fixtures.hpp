#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace gsstyle::testing {

    /// Files used by the command-line tests, all written into one directory:
    ///   two_gaussians.ply, missing_opacity.ply, one_camera.json   (render / inspect)
    ///   scene.ply, cameras.json, style.png                        (stylize inputs)
    ///   toy_run.toml, missing_style.toml, gap.toml                (run configs)
    struct CliFixtures {
        std::filesystem::path dir;
        std::filesystem::path two_gaussians;
        std::filesystem::path missing_opacity;
        std::filesystem::path one_camera;
        std::filesystem::path scene;
        std::filesystem::path cameras;
        std::filesystem::path style;
        std::filesystem::path toy_run;
        std::filesystem::path missing_style;
        std::filesystem::path gap;
    };

    CliFixtures write_cli_fixtures(const std::filesystem::path& dir, std::int64_t steps = 30);

    /// The [scene]/[style]/[schedule] body of toy_run.toml without the [run] table.
    std::string toy_run_body(std::int64_t steps);

} // namespace gsstyle::testing
