#pragma once

#include "gsstyle/priors.hpp"
#include "gsstyle/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gsstyle {

    /// A stylization run as described by a TOML file. Relative paths are resolved against the
    /// directory holding the config file.
    struct RunConfig {
        std::filesystem::path source;       // the config file itself
        std::uint64_t seed = 0;             // run.seed, mandatory
        std::optional<std::int64_t> steps;  // run.steps: truncates the timetable horizon

        std::filesystem::path scene_ply;    // scene.ply
        std::filesystem::path cameras;      // scene.cameras
        Rgb background{0.0, 0.0, 0.0};      // scene.background

        std::filesystem::path style_image;  // style.image
        std::string content_text;           // style.content_text
        std::optional<std::string> style_text;
        double mask_threshold = 0.5;

        std::filesystem::path output_dir;   // output.dir
        std::int64_t checkpoint_every = 0;
        bool previews = true;

        ProviderConfig providers;
        std::optional<std::filesystem::path> score_target; // toy backend: implied clean image

        ExpertWeights weights;
        std::string sos_preset = "five_layer";
        std::vector<int> sos_layers;       // overrides the preset when set
        std::vector<double> sos_weights;   // overrides 1e3/C^2 when set
        std::vector<double> sos_scales{1.0, 0.5, 0.25};
        long sos_pretrain_iterations = 0;
        double sos_pretrain_scale = 0.5;
        QAConfig qa;
        AdamConfig adam;
        bool train_sh_rest = true;
        int n_opt = 10;
        std::size_t start_view = 0;
        std::int64_t fix_free_block = 100;
        std::optional<ModeTimetable> timetable; // schedule.timetable; default when absent
    };

    /// Parses and validates. Throws ConfigError whose key() is the dotted path of the offending
    /// entry ("style.image", "schedule.timetable", ...); TimetableError for coverage problems.
    /// Referenced input files must exist.
    RunConfig load_run_config(const std::filesystem::path& path);

    /// Same, from TOML text; `base_dir` resolves relative paths.
    RunConfig parse_run_config(const std::string& toml_text, const std::filesystem::path& base_dir,
                               const std::filesystem::path& source = "<string>");

    /// SOS settings resolved against the extractor's channel counts.
    SOSConfig resolve_sos(const RunConfig& config, const FeatureExtractor& extractor);

    /// Effective timetable: configured or default, truncated to run.steps when given.
    ModeTimetable resolve_timetable(const RunConfig& config);

    TrainerConfig make_trainer_config(const RunConfig& config, const FeatureExtractor& extractor);

} // namespace gsstyle
