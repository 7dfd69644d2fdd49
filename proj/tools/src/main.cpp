#include "gsstyle_cli/commands.hpp"

#include <CLI11.hpp>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"gsstyle: color-only stylization of 3D Gaussian scenes"};
    app.require_subcommand(1);

    std::string config;
    std::string output_dir;
    auto* stylize = app.add_subcommand("stylize", "run a configured stylization");
    stylize->add_option("config", config, "run config (TOML)")->required();
    stylize->add_option("--output-dir", output_dir, "override output.dir from the config");

    std::string ply, cameras, out_dir;
    std::vector<double> background{0.0, 0.0, 0.0};
    auto* render = app.add_subcommand("render", "render a scene from every camera to PNG");
    render->add_option("ply", ply, "scene PLY")->required();
    render->add_option("cameras", cameras, "camera JSON")->required();
    render->add_option("out_dir", out_dir, "output directory")->required();
    render->add_option("--background", background, "background color, three values in [0,1]")->expected(3);

    std::string dir_a, dir_b;
    std::uint64_t feature_seed = 0;
    auto* eval = app.add_subcommand("eval", "compare two directories of PNG images");
    eval->add_option("dir_a", dir_a)->required();
    eval->add_option("dir_b", dir_b)->required();
    eval->add_option("--feature-seed", feature_seed, "seed of the feature extractor used for LPIPS");

    std::string inspect_ply;
    auto* inspect = app.add_subcommand("inspect", "print scene statistics as JSON");
    inspect->add_option("ply", inspect_ply, "scene PLY")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : gsstyle::cli::kConfigError;
    }

    if (*stylize) {
        std::optional<std::filesystem::path> override_dir;
        if (!output_dir.empty()) {
            override_dir = output_dir;
        }
        return gsstyle::cli::cmd_stylize(config, override_dir, std::cout, std::cerr);
    }
    if (*render) {
        return gsstyle::cli::cmd_render(ply, cameras, out_dir, {background[0], background[1], background[2]},
                                        std::cout, std::cerr);
    }
    if (*eval) {
        return gsstyle::cli::cmd_eval(dir_a, dir_b, feature_seed, std::cout, std::cerr);
    }
    return gsstyle::cli::cmd_inspect(inspect_ply, std::cout, std::cerr);
}
