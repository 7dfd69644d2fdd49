#pragma once

#include "gsstyle/camera.hpp"
#include "gsstyle/dssd.hpp"
#include "gsstyle/experts.hpp"
#include "gsstyle/gaussian_cloud.hpp"
#include "gsstyle/priors.hpp"
#include "gsstyle/scheduler.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gsstyle {

    /// Composite objective weights: lambda_style * L_style + lambda_sos * L_sos + lambda_csd * L_csd
    /// + lambda_qa * L_qa, with the style block configured by `dssd`.
    struct ExpertWeights {
        double lambda_style = 1.0;
        double lambda_sos = 10.0;
        double lambda_csd = 1.0;
        double lambda_qa = 0.5;
        DSSDConfig dssd;

        /// Throws ConfigError: negative weight (key "weights.lambda_*"), or all four zero ("weights").
        void validate() const;
    };

    /// Everything the objective needs about the style, precomputed once per run.
    struct StyleBundle {
        Image reference;
        StyleEmbedding style;
        std::string prompt;                // diffusion conditioning text y
        std::vector<Image> guidance_views; // pre-stylized view per camera, or empty
        std::vector<Image> target_masks;   // per camera, or empty when lambda_mask = 0
    };

    /// Cleans the style embedding, renders the initial scene to build guidance views (via the
    /// stylizer, when present) and binary masks at `mask_threshold`.
    StyleBundle make_style_bundle(const GaussianCloud& initial, std::span<const CameraView> views, Image reference,
                                  const std::string& content_text, const std::optional<std::string>& style_text,
                                  const ProviderSet& providers, double mask_threshold = 0.5,
                                  const Rgb& background = {0.0, 0.0, 0.0}, const std::string& source_image_id = {});

    struct ObjectiveSettings {
        ExpertWeights weights;
        SOSConfig sos;
        QAConfig qa;
        Rgb background{0.0, 0.0, 0.0};
        std::uint64_t seed = 0;
    };

    struct CompositeResult {
        double total = 0.0;
        double style = 0.0; // L_style (already includes its inner weights)
        double dssd = 0.0;
        double rgb = 0.0;
        double mask = 0.0;
        double sos = 0.0;
        double csd = 0.0;
        double qa = 0.0;
        CloudGradient gradient; // over the color parameters; geometry entries stay zero
    };

    /// Composite loss and color gradient for the view and guidance scheduled by `plan`.
    /// Experts with zero weight are skipped and report 0.
    CompositeResult composite_loss(const GaussianCloud& cloud, std::span<const CameraView> views,
                                   const StyleBundle& bundle, const ObjectiveSettings& settings,
                                   const ProviderSet& providers, const StepPlan& plan, bool sos_pretraining = false);

    struct AdamConfig {
        double lr_dc = 2.5e-3;
        double lr_rest = 1.25e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-15;
    };

    /// First and second moments for the color parameters.
    struct AdamState {
        std::int64_t t = 0;
        std::vector<double> m_dc, v_dc, m_rest, v_rest;

        static AdamState for_cloud(const GaussianCloud& cloud);
        /// Updates sh_dc (and sh_rest when `train_rest`) in place. Geometry is never touched.
        void step(GaussianCloud& cloud, const CloudGradient& grad, const AdamConfig& cfg, bool train_rest);
    };

    struct StepRecord {
        std::int64_t step = 0;
        Phase phase = Phase::GlobalAdaptive;
        bool rgb_overlay = false;
        std::size_t view = 0;
        double alpha = 0.0;
        int timestep = 0;
        double delta_lambda = 0.0;
        double total = 0.0;
        double style = 0.0;
        double dssd = 0.0;
        double rgb = 0.0;
        double mask = 0.0;
        double sos = 0.0;
        double csd = 0.0;
        double qa = 0.0;
        double grad_norm = 0.0;
    };

    struct RunRecord {
        std::uint64_t seed = 0;
        std::vector<StepRecord> steps;
        std::vector<std::int64_t> checkpoints; // steps at which a checkpoint was written
    };

    /// delta_t = |g_{t+1} - g_t| over the recorded gradient norms. Empty for fewer than 2 steps.
    std::vector<double> oscillation_metric(const RunRecord& record);

    /// One JSON object per step. Deterministic formatting (shortest round-trip doubles).
    void write_run_jsonl(const RunRecord& record, const std::filesystem::path& path);
    /// Summary without paths or timestamps so identical runs give identical bytes.
    std::string run_summary_json(const RunRecord& record, const GaussianCloud& final_cloud);

    struct Checkpoint {
        std::int64_t step = 0; // last completed step
        std::uint64_t seed = 0;
        GaussianCloud cloud;
        AdamState adam;
    };

    /// <dir>/<stem>.ply plus <dir>/<stem>.json holding step, seed and optimizer moments.
    void write_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& dir, const std::string& stem);
    Checkpoint read_checkpoint(const std::filesystem::path& dir, const std::string& stem);

    struct TrainerConfig {
        ObjectiveSettings objective;
        AdamConfig adam;
        bool train_sh_rest = true;
        int n_opt = 10;
        std::size_t start_view = 0;
        ModeTimetable timetable = default_timetable();
        std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
        std::filesystem::path checkpoint_dir; // also receives the diagnostic snapshot on abort
        /// Called after each completed step with the updated cloud.
        std::function<void(const StepRecord&, const GaussianCloud&)> on_step;
    };

    struct StylizeResult {
        GaussianCloud cloud;
        RunRecord record;
        AdamState adam;
    };

    /// Runs the timetable from step 0 (or from `resume`), updating only the color parameters.
    /// A non-finite loss or gradient aborts with NonFiniteLossError after writing
    /// <checkpoint_dir>/nonfinite.{ply,json} when a directory is configured.
    StylizeResult stylize(const GaussianCloud& cloud, std::span<const CameraView> views, const StyleBundle& bundle,
                          const ProviderSet& providers, const TrainerConfig& config,
                          const Checkpoint* resume = nullptr);

} // namespace gsstyle
