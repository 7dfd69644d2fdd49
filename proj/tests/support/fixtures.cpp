#include "fixtures.hpp"

#include "scenes.hpp"

#include "gsstyle/camera.hpp"
#include "gsstyle/image_io.hpp"
#include "gsstyle/ply.hpp"

#include <cmath>
#include <fmt/core.h>
#include <fstream>
#include <numbers>

namespace gsstyle::testing {

    namespace {

        const std::vector<std::string> kCanonical = {"x",       "y",       "z",       "f_dc_0", "f_dc_1",
                                                     "f_dc_2",  "opacity", "scale_0", "scale_1", "scale_2",
                                                     "rot_0",   "rot_1",   "rot_2",   "rot_3"};

        void write_text(const std::filesystem::path& p, const std::string& text) {
            std::ofstream(p, std::ios::binary) << text;
        }

    } // namespace

    std::string toy_run_body(std::int64_t steps) {
        const std::int64_t a = steps / 3;
        const std::int64_t b = 2 * steps / 3;
        return fmt::format(R"([scene]
ply = "scene.ply"
cameras = "cameras.json"
background = [0.0, 0.0, 0.0]

[style]
image = "style.png"
content_text = "three colored blobs"

[output]
dir = "out"
previews = true

[schedule]
n_opt = 4

[[schedule.timetable]]
start = 0
end = {0}
phase = "GLOBAL_ADAPTIVE"

[[schedule.timetable]]
start = 0
end = {0}
phase = "LOCAL_RGB"

[[schedule.timetable]]
start = {0}
end = {1}
phase = "GLOBAL_FREE"

[[schedule.timetable]]
start = {1}
end = {2}
phase = "LOCAL"

[optimizer]
lr_dc = 0.02
)",
                           a, b, steps);
    }

    CliFixtures write_cli_fixtures(const std::filesystem::path& dir, std::int64_t steps) {
        std::filesystem::create_directories(dir);
        CliFixtures f;
        f.dir = dir;
        f.two_gaussians = dir / "two_gaussians.ply";
        f.missing_opacity = dir / "missing_opacity.ply";
        f.one_camera = dir / "one_camera.json";
        f.scene = dir / "scene.ply";
        f.cameras = dir / "cameras.json";
        f.style = dir / "style.png";
        f.toy_run = dir / "toy_run.toml";
        f.missing_style = dir / "missing_style.toml";
        f.gap = dir / "gap.toml";

        // red in front, blue behind and to the right; f_dc 1.772 gives color ~1.0
        const std::vector<std::vector<float>> rows = {
            {0.0f, 0.0f, 0.0f, 1.772f, -1.772f, -1.772f, 3.0f, -1.0f, -1.0f, -1.0f, 1.0f, 0.0f, 0.0f, 0.0f},
            {0.5f, 0.0f, 1.0f, -1.772f, -1.772f, 1.772f, 3.0f, -0.7f, -0.9f, -1.1f, 0.9f, 0.1f, 0.2f, 0.3f},
        };
        write_raw_ply(f.two_gaussians, kCanonical, rows);

        std::vector<std::string> no_opacity = kCanonical;
        no_opacity.erase(no_opacity.begin() + 6);
        std::vector<std::vector<float>> short_rows = rows;
        for (auto& r : short_rows) {
            r.erase(r.begin() + 6);
        }
        write_raw_ply(f.missing_opacity, no_opacity, short_rows);

        CameraView cam = front_camera(32, 32);
        cam.name = "front";
        save_cameras({cam}, f.one_camera);

        save_ply(three_gaussians({0.9, 0.9, 0.9}, {0.3, 0.3, 0.9}, {0.5, 0.5, 0.5}), f.scene);
        save_cameras(orbit_ring(4, {0.0, 0.0, 0.3}, 4.0, 0.5, 24, 24, std::numbers::pi / 3.0), f.cameras);

        Image style(32, 32, 3);
        for (int y = 0; y < 32; ++y) {
            for (int x = 0; x < 32; ++x) {
                style.at(x, y, 0) = 0.2 + 0.6 * x / 31.0;
                style.at(x, y, 1) = 0.5 + 0.4 * std::sin(0.6 * y);
                style.at(x, y, 2) = (x / 4 + y / 4) % 2 == 0 ? 0.85 : 0.15;
            }
        }
        write_png(f.style, style, Transfer::Linear);

        write_text(f.toy_run, "[run]\nseed = 11\n\n" + toy_run_body(steps));
        write_text(f.missing_style, "[run]\nseed = 11\n\n" + [&] {
            std::string body = toy_run_body(steps);
            const auto at = body.find("\"style.png\"");
            body.replace(at, 11, "\"no_such_style.png\"");
            return body;
        }());
        write_text(f.gap, R"([run]
seed = 3

[scene]
ply = "scene.ply"
cameras = "cameras.json"

[style]
image = "style.png"
content_text = "blobs"

[[schedule.timetable]]
start = 0
end = 4
phase = "GLOBAL_ADAPTIVE"

[[schedule.timetable]]
start = 6
end = 10
phase = "LOCAL"
)");
        return f;
    }

} // namespace gsstyle::testing
