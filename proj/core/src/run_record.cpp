#include "gsstyle/errors.hpp"
#include "gsstyle/trainer.hpp"

#include <algorithm>
#include <cstring>
#include <fmt/core.h>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

namespace gsstyle {

    namespace {

        using ordered = nlohmann::ordered_json;

        ordered step_json(const StepRecord& s) {
            ordered j;
            j["step"] = s.step;
            j["phase"] = std::string(phase_name(s.phase));
            j["rgb_overlay"] = s.rgb_overlay;
            j["view"] = s.view;
            j["alpha_step"] = s.alpha;
            j["timestep"] = s.timestep;
            j["delta_lambda"] = s.delta_lambda;
            j["loss"] = {{"total", s.total}, {"style", s.style}, {"dssd", s.dssd}, {"rgb", s.rgb},
                         {"mask", s.mask},   {"sos", s.sos},     {"csd", s.csd},   {"qa", s.qa}};
            j["grad_norm"] = s.grad_norm;
            return j;
        }

        std::string digest(std::span<const double> values) {
            std::uint64_t h = 0xcbf29ce484222325ULL;
            for (double v : values) {
                unsigned char bytes[sizeof(double)];
                std::memcpy(bytes, &v, sizeof v);
                for (unsigned char b : bytes) {
                    h ^= b;
                    h *= 0x100000001b3ULL;
                }
            }
            return fmt::format("{:016x}", h);
        }

    } // namespace

    void write_run_jsonl(const RunRecord& record, const std::filesystem::path& path) {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError(fmt::format("cannot write {}", path.string()));
        }
        const auto delta = oscillation_metric(record);
        for (std::size_t i = 0; i < record.steps.size(); ++i) {
            ordered j = step_json(record.steps[i]);
            // delta between this step's gradient norm and the previous one
            j["oscillation"] = i == 0 ? ordered(nullptr) : ordered(delta[i - 1]);
            out << j.dump() << '\n';
        }
        if (!out) {
            throw IoError(fmt::format("write failed for {}", path.string()));
        }
    }

    std::string run_summary_json(const RunRecord& record, const GaussianCloud& final_cloud) {
        ordered j;
        j["seed"] = record.seed;
        j["steps"] = record.steps.size();
        if (!record.steps.empty()) {
            j["first"] = step_json(record.steps.front());
            j["last"] = step_json(record.steps.back());
        }

        std::map<std::string, std::size_t> phases;
        std::size_t overlay = 0;
        for (const auto& s : record.steps) {
            ++phases[std::string(phase_name(s.phase))];
            overlay += s.rgb_overlay ? 1 : 0;
        }
        ordered pj = ordered::object();
        for (const auto& [name, count] : phases) {
            pj[name] = count;
        }
        j["phase_steps"] = pj;
        j["rgb_overlay_steps"] = overlay;

        const auto delta = oscillation_metric(record);
        ordered oj;
        oj["count"] = delta.size();
        double mean = 0.0;
        double mx = 0.0;
        for (double d : delta) {
            mean += d;
            mx = std::max(mx, d);
        }
        oj["mean"] = delta.empty() ? 0.0 : mean / static_cast<double>(delta.size());
        oj["max"] = mx;
        oj["series"] = delta;
        j["oscillation"] = oj;

        j["checkpoints"] = record.checkpoints;
        j["cloud"] = {{"gaussians", final_cloud.size()},
                      {"sh_degree", final_cloud.sh_degree},
                      {"sh_dc_digest", digest(final_cloud.sh_dc)},
                      {"sh_rest_digest", digest(final_cloud.sh_rest)},
                      {"geometry_digest", digest(final_cloud.positions) + digest(final_cloud.rotations) +
                                              digest(final_cloud.log_scales) + digest(final_cloud.opacity_logits)}};
        return j.dump(2) + "\n";
    }

} // namespace gsstyle
