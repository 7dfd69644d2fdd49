#pragma once

#include "gsstyle/camera.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gsstyle {

    enum class GuidanceMode {
        Global,
        Local
    };

    /// Normalized position in the optimization cycle.
    ///   Global: (floor(i / n_view) mod n_opt) / n_opt  -- all views share one noise level per sweep
    ///   Local:  (i mod n_opt) / n_opt                   -- one view is refined n_opt times
    /// Throws ArgumentError when n_view or n_opt < 1 or i_step < 0.
    double alpha_step(std::int64_t i_step, int n_view, int n_opt, GuidanceMode mode);

    /// t = round((1 - sqrt(alpha)) * T) clipped to [t_min, t_max], absolute timesteps.
    /// Throws ConfigError when t_min > t_max, ArgumentError when alpha is outside [0, 1].
    int sample_timestep(double alpha, int total_timesteps, int t_min, int t_max);

    inline constexpr double kCfgFloor = 7.5;

    /// max(7.5, lambda_max * alpha^2). Throws ConfigError when lambda_max < 7.5.
    double dynamic_cfg(double alpha, double lambda_max);

    struct ScheduleConstants {
        int total_timesteps = 1000;
        int t_min = 20;
        int t_max = 750;
        double lambda_max = 20.0;

        void validate() const;
    };

    struct GuidanceState {
        std::int64_t i_step = 0;
        int n_view = 1;
        int n_opt = 10;
        GuidanceMode mode = GuidanceMode::Global;

        double alpha() const { return alpha_step(i_step, n_view, n_opt, mode); }
    };

    /// Everything the scheduler derives for one step.
    struct GuidanceSample {
        double alpha = 0.0;
        int timestep = 0;
        double delta_lambda = kCfgFloor;
    };

    GuidanceSample derive_guidance(const GuidanceState& state, const ScheduleConstants& constants);

    /// Indices into `azimuths`, sorted by azimuth (stable on ties) and rotated so that position
    /// `start` of the sorted ring comes first. Throws ArgumentError on an empty list.
    std::vector<std::size_t> view_order(std::span<const int> azimuths, std::size_t start = 0);
    std::vector<std::size_t> view_order(std::span<const CameraView> views, std::size_t start = 0);

    enum class Phase {
        LocalRgb,
        GlobalAdaptive,
        GlobalFix,
        GlobalFree,
        Local
    };

    std::string_view phase_name(Phase phase) noexcept;
    /// Parses "LOCAL_RGB", "GLOBAL_ADAPTIVE", ... (case-insensitive). Empty optional if unknown.
    std::optional<Phase> parse_phase(std::string_view text);
    GuidanceMode mode_of(Phase phase) noexcept;

    /// One timetable row covering steps [start, end). LOCAL_RGB rows are overlays: they switch
    /// the RGB guidance loss on over their range and do not take part in coverage. Any other
    /// row is a base phase; `overlay` = true additionally switches the RGB loss on for it.
    struct TimetableEntry {
        std::int64_t start = 0;
        std::int64_t end = 0;
        Phase phase = Phase::GlobalAdaptive;
        bool overlay = false;
    };

    struct PhaseAt {
        Phase phase;
        bool rgb_overlay;
    };

    class ModeTimetable {
    public:
        /// Validates eagerly: base rows must tile [0, total_steps) exactly. Throws TimetableError
        /// (key "schedule.timetable") naming the first uncovered or doubly covered range.
        ModeTimetable(std::vector<TimetableEntry> entries, std::int64_t total_steps);

        std::int64_t total_steps() const noexcept { return total_; }
        const std::vector<TimetableEntry>& entries() const noexcept { return entries_; }

        /// Throws ArgumentError outside [0, total_steps).
        PhaseAt phase_at(std::int64_t i_step) const;

    private:
        std::vector<TimetableEntry> entries_;
        std::vector<TimetableEntry> base_; // sorted by start
        std::int64_t total_;
    };

    /// Three-stage default: [0,1000) GLOBAL_ADAPTIVE with the RGB overlay on [100,600),
    /// [1000,1900) GLOBAL_FIX / GLOBAL_FREE alternating in blocks of `block` steps,
    /// [1900,2800) LOCAL.
    ModeTimetable default_timetable(std::int64_t block = 100);

    /// Full per-step plan: phase, guidance numbers and the view to optimize.
    struct StepPlan {
        std::int64_t step = 0;
        Phase phase = Phase::GlobalAdaptive;
        bool rgb_overlay = false;
        GuidanceMode mode = GuidanceMode::Global;
        GuidanceSample guidance;
        std::size_t view = 0; // index into the caller's view list
    };

    class Scheduler {
    public:
        Scheduler(ModeTimetable timetable, ScheduleConstants constants, std::vector<std::size_t> ring, int n_opt,
                  std::uint64_t seed);

        const ModeTimetable& timetable() const noexcept { return timetable_; }
        const ScheduleConstants& constants() const noexcept { return constants_; }
        int n_view() const noexcept { return static_cast<int>(ring_.size()); }
        int n_opt() const noexcept { return n_opt_; }

        /// GLOBAL phases visit one view per step, so n_view consecutive steps form one sweep at a
        /// shared noise level. FIX and ADAPTIVE walk the ring in order; FREE walks a seeded
        /// permutation of it that changes every sweep. LOCAL stays on one view for n_opt steps.
        StepPlan plan(std::int64_t i_step) const;

    private:
        ModeTimetable timetable_;
        ScheduleConstants constants_;
        std::vector<std::size_t> ring_;
        int n_opt_;
        std::uint64_t seed_;
    };

} // namespace gsstyle
