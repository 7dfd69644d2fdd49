#include "gsstyle_cli/commands.hpp"

#include "gsstyle/camera.hpp"
#include "gsstyle/config.hpp"
#include "gsstyle/errors.hpp"
#include "gsstyle/image_io.hpp"
#include "gsstyle/metrics.hpp"
#include "gsstyle/ply.hpp"
#include "gsstyle/renderer.hpp"
#include "gsstyle/toy_priors.hpp"
#include "gsstyle/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/core.h>
#include <fmt/ostream.h>
#include <fstream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>

namespace gsstyle::cli {

    namespace fs = std::filesystem;
    using json = nlohmann::ordered_json;

    namespace {

        /// Maps library exceptions to a one-line message and an exit code.
        template <class F>
        int guarded(std::ostream& err, F&& body) {
            try {
                return body();
            } catch (const ConfigError& e) {
                if (e.key().empty()) {
                    fmt::print(err, "error: {}\n", e.what());
                } else {
                    fmt::print(err, "error: config key '{}': {}\n", e.key(), e.what());
                }
                return kConfigError;
            } catch (const FormatError& e) {
                fmt::print(err, "error: field '{}': {}\n", e.field(), e.what());
                return kFailure;
            } catch (const NonFiniteLossError& e) {
                fmt::print(err, "error: aborted at step {}: {}\n", e.step(), e.what());
                return kFailure;
            } catch (const Error& e) {
                fmt::print(err, "error: {}\n", e.what());
                return kFailure;
            } catch (const fs::filesystem_error& e) {
                fmt::print(err, "error: {}\n", e.what());
                return kFailure;
            }
        }

        void write_file(const fs::path& path, const std::string& text) {
            std::ofstream out(path, std::ios::binary);
            if (!out || !(out << text)) {
                throw IoError(fmt::format("cannot write {}", path.string()));
            }
        }

        std::string safe_name(const CameraView& view, std::size_t index) {
            std::string name = view.name.empty() ? fmt::format("view_{:03d}", index) : view.name;
            for (char& c : name) {
                if (c == '/' || c == '\\' || c == ':') {
                    c = '_';
                }
            }
            return name;
        }

        std::set<std::string> png_names(const fs::path& dir) {
            if (!fs::is_directory(dir)) {
                throw IoError(fmt::format("not a directory: {}", dir.string()));
            }
            std::set<std::string> names;
            for (const auto& entry : fs::directory_iterator(dir)) {
                if (entry.is_regular_file() && entry.path().extension() == ".png") {
                    names.insert(entry.path().filename().string());
                }
            }
            return names;
        }

    } // namespace

    int cmd_stylize(const fs::path& config_path, const std::optional<fs::path>& output_dir, std::ostream& out,
                    std::ostream& err) {
        return guarded(err, [&] {
            RunConfig cfg = load_run_config(config_path);
            if (output_dir) {
                cfg.output_dir = *output_dir;
            }
            const GaussianCloud scene = load_ply(cfg.scene_ply);
            const std::vector<CameraView> views = load_cameras(cfg.cameras);
            if (views.empty()) {
                throw ConfigError("scene.cameras", "camera file lists no views");
            }
            Image style = read_png(cfg.style_image);
            const Image score_target = cfg.score_target ? read_png(*cfg.score_target) : style;

            OwnedProviders owned = create_providers(cfg.providers, score_target);
            const ProviderSet providers = owned.view();
            TrainerConfig tc = make_trainer_config(cfg, *providers.features);

            fs::create_directories(cfg.output_dir);
            const StyleBundle bundle =
                make_style_bundle(scene, views, std::move(style), cfg.content_text, cfg.style_text, providers,
                                  cfg.mask_threshold, cfg.background, cfg.style_image.filename().string());

            if (cfg.previews) {
                const fs::path preview_dir = cfg.output_dir / "previews";
                fs::create_directories(preview_dir);
                const auto ring = view_order(views, cfg.start_view);
                const CameraView preview_view = views[ring.front()];
                const ModeTimetable& tt = tc.timetable;
                // One preview at the last step of every contiguous phase run.
                tc.on_step = [&, preview_dir, preview_view](const StepRecord& rec, const GaussianCloud& cloud) {
                    const bool last = rec.step + 1 >= tt.total_steps();
                    if (last || tt.phase_at(rec.step + 1).phase != rec.phase) {
                        const RenderOutput r = render(cloud, preview_view, cfg.background);
                        write_png(preview_dir / fmt::format("step_{:06d}_{}.png", rec.step + 1, phase_name(rec.phase)),
                                  r.rgb);
                    }
                };
            }

            const StylizeResult result = stylize(scene, views, bundle, providers, tc);

            save_ply(result.cloud, cfg.output_dir / "stylized.ply");
            write_run_jsonl(result.record, cfg.output_dir / "run.jsonl");
            write_file(cfg.output_dir / "summary.json", run_summary_json(result.record, result.cloud));

            const bool frozen = GeometrySnapshot::of(scene).bitwise_equal(result.cloud);
            json report;
            report["output_dir"] = cfg.output_dir.string();
            report["steps"] = result.record.steps.size();
            report["geometry_unchanged"] = frozen;
            if (!result.record.steps.empty()) {
                report["first_loss"] = result.record.steps.front().total;
                report["last_loss"] = result.record.steps.back().total;
            }
            out << report.dump(2) << '\n';
            return frozen ? kOk : kFailure;
        });
    }

    int cmd_render(const fs::path& ply, const fs::path& cameras, const fs::path& out_dir, const Rgb& background,
                   std::ostream& out, std::ostream& err) {
        return guarded(err, [&] {
            const GaussianCloud cloud = load_ply(ply);
            const std::vector<CameraView> views = load_cameras(cameras);
            fs::create_directories(out_dir);
            json written = json::array();
            for (std::size_t i = 0; i < views.size(); ++i) {
                const RenderOutput r = render(cloud, views[i], background);
                const fs::path file = out_dir / (safe_name(views[i], i) + ".png");
                write_png(file, r.rgb);
                written.push_back(file.filename().string());
            }
            out << json{{"images", written}}.dump(2) << '\n';
            return kOk;
        });
    }

    int cmd_eval(const fs::path& dir_a, const fs::path& dir_b, std::uint64_t feature_seed, std::ostream& out,
                 std::ostream& err) {
        return guarded(err, [&] {
            const auto a = png_names(dir_a);
            const auto b = png_names(dir_b);
            std::vector<std::string> only_a, only_b;
            std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
            std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
            if (!only_a.empty() || !only_b.empty()) {
                json diff{{"only_in_a", only_a}, {"only_in_b", only_b}};
                fmt::print(err, "error: image sets differ: {}\n", diff.dump());
                return kFailure;
            }
            auto extractor = toy::feature_extractor(feature_seed);
            json pairs = json::array();
            double sp = 0.0, ss = 0.0, sl = 0.0;
            for (const auto& name : a) {
                const Image ia = read_png(dir_a / name);
                const Image ib = read_png(dir_b / name);
                const double p = psnr(ia, ib);
                const double s = ssim(ia, ib);
                const double l = lpips(ia, ib, *extractor);
                sp += p;
                ss += s;
                sl += l;
                pairs.push_back({{"name", name}, {"psnr", p}, {"ssim", s}, {"lpips", l}});
            }
            const double n = a.empty() ? 1.0 : static_cast<double>(a.size());
            json report;
            report["pairs"] = pairs;
            report["mean"] = a.empty() ? json(nullptr) : json{{"psnr", sp / n}, {"ssim", ss / n}, {"lpips", sl / n}};
            out << report.dump(2) << '\n';
            return kOk;
        });
    }

    int cmd_inspect(const fs::path& ply, std::ostream& out, std::ostream& err) {
        return guarded(err, [&] {
            const GaussianCloud c = load_ply(ply);
            json report;
            report["gaussians"] = c.size();
            report["sh_degree"] = c.sh_degree;
            if (c.empty()) {
                report["bbox"] = nullptr;
                report["opacity"] = nullptr;
            } else {
                std::array<double, 3> lo, hi;
                lo.fill(std::numeric_limits<double>::infinity());
                hi.fill(-std::numeric_limits<double>::infinity());
                for (std::size_t i = 0; i < c.size(); ++i) {
                    for (int k = 0; k < 3; ++k) {
                        lo[k] = std::min(lo[k], c.positions[i * 3 + k]);
                        hi[k] = std::max(hi[k], c.positions[i * 3 + k]);
                    }
                }
                double omin = 1.0, omax = 0.0, osum = 0.0;
                for (double logit : c.opacity_logits) {
                    const double o = 1.0 / (1.0 + std::exp(-logit));
                    omin = std::min(omin, o);
                    omax = std::max(omax, o);
                    osum += o;
                }
                report["bbox"] = {{"min", lo}, {"max", hi}};
                report["opacity"] = {{"min", omin}, {"max", omax}, {"mean", osum / static_cast<double>(c.size())}};
            }
            out << report.dump(2) << '\n';
            return kOk;
        });
    }

} // namespace gsstyle::cli
