#include "gsstyle/scheduler.hpp"

#include "gsstyle/errors.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fmt/core.h>
#include <numeric>

namespace gsstyle {

    double alpha_step(std::int64_t i_step, int n_view, int n_opt, GuidanceMode mode) {
        if (n_view < 1 || n_opt < 1) {
            throw ArgumentError(fmt::format("n_view and n_opt must be >= 1 (got {}, {})", n_view, n_opt));
        }
        if (i_step < 0) {
            throw ArgumentError(fmt::format("step index must be >= 0, got {}", i_step));
        }
        const std::int64_t k = mode == GuidanceMode::Global ? (i_step / n_view) % n_opt : i_step % n_opt;
        return static_cast<double>(k) / n_opt;
    }

    int sample_timestep(double alpha, int total_timesteps, int t_min, int t_max) {
        if (t_min > t_max) {
            throw ConfigError("schedule.t_min", fmt::format("t_min ({}) exceeds t_max ({})", t_min, t_max));
        }
        if (!(alpha >= 0.0 && alpha <= 1.0)) {
            throw ArgumentError(fmt::format("alpha_step must lie in [0, 1], got {}", alpha));
        }
        const auto t = static_cast<int>(std::lround((1.0 - std::sqrt(alpha)) * total_timesteps));
        return std::clamp(t, t_min, t_max);
    }

    double dynamic_cfg(double alpha, double lambda_max) {
        if (!(lambda_max >= kCfgFloor)) {
            throw ConfigError("schedule.lambda_max", fmt::format("lambda_max must be >= {}, got {}", kCfgFloor, lambda_max));
        }
        return std::max(kCfgFloor, lambda_max * alpha * alpha);
    }

    void ScheduleConstants::validate() const {
        if (total_timesteps < 2) {
            throw ConfigError("schedule.total_timesteps", fmt::format("must be >= 2, got {}", total_timesteps));
        }
        if (t_min < 0) {
            throw ConfigError("schedule.t_min", fmt::format("must be >= 0, got {}", t_min));
        }
        if (t_min > t_max) {
            throw ConfigError("schedule.t_min", fmt::format("t_min ({}) exceeds t_max ({})", t_min, t_max));
        }
        if (t_max > total_timesteps) {
            throw ConfigError("schedule.t_max", fmt::format("t_max ({}) exceeds T ({})", t_max, total_timesteps));
        }
        if (!(lambda_max >= kCfgFloor)) {
            throw ConfigError("schedule.lambda_max", fmt::format("must be >= {}, got {}", kCfgFloor, lambda_max));
        }
    }

    GuidanceSample derive_guidance(const GuidanceState& state, const ScheduleConstants& constants) {
        GuidanceSample s;
        s.alpha = state.alpha();
        s.timestep = sample_timestep(s.alpha, constants.total_timesteps, constants.t_min, constants.t_max);
        s.delta_lambda = dynamic_cfg(s.alpha, constants.lambda_max);
        return s;
    }

    std::vector<std::size_t> view_order(std::span<const int> azimuths, std::size_t start) {
        if (azimuths.empty()) {
            throw ArgumentError("view_order needs at least one view");
        }
        std::vector<std::size_t> order(azimuths.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return azimuths[a] < azimuths[b]; });
        std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(start % order.size()), order.end());
        return order;
    }

    std::vector<std::size_t> view_order(std::span<const CameraView> views, std::size_t start) {
        std::vector<int> az;
        az.reserve(views.size());
        for (const auto& v : views) {
            az.push_back(v.azimuth_index);
        }
        return view_order(std::span<const int>(az), start);
    }

    namespace {
        constexpr std::pair<Phase, std::string_view> kPhaseNames[] = {
            {Phase::LocalRgb, "LOCAL_RGB"},
            {Phase::GlobalAdaptive, "GLOBAL_ADAPTIVE"},
            {Phase::GlobalFix, "GLOBAL_FIX"},
            {Phase::GlobalFree, "GLOBAL_FREE"},
            {Phase::Local, "LOCAL"},
        };

        std::string range_text(std::int64_t a, std::int64_t b) { return fmt::format("[{}, {})", a, b); }
    } // namespace

    std::string_view phase_name(Phase phase) noexcept {
        for (const auto& [p, name] : kPhaseNames) {
            if (p == phase) {
                return name;
            }
        }
        return "UNKNOWN";
    }

    std::optional<Phase> parse_phase(std::string_view text) {
        std::string upper(text);
        for (char& c : upper) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            if (c == '-') {
                c = '_';
            }
        }
        for (const auto& [p, name] : kPhaseNames) {
            if (upper == name) {
                return p;
            }
        }
        return std::nullopt;
    }

    GuidanceMode mode_of(Phase phase) noexcept {
        return phase == Phase::Local || phase == Phase::LocalRgb ? GuidanceMode::Local : GuidanceMode::Global;
    }

    ModeTimetable::ModeTimetable(std::vector<TimetableEntry> entries, std::int64_t total_steps)
        : entries_(std::move(entries)),
          total_(total_steps) {
        constexpr const char* key = "schedule.timetable";
        if (total_ < 0) {
            throw TimetableError(key, fmt::format("total step count must be >= 0, got {}", total_));
        }
        for (const auto& e : entries_) {
            if (e.start < 0 || e.end <= e.start) {
                throw TimetableError(key, fmt::format("invalid range {} for phase {}", range_text(e.start, e.end),
                                                      phase_name(e.phase)));
            }
            if (e.phase != Phase::LocalRgb) {
                base_.push_back(e);
            }
        }
        if (total_ > 0 && base_.empty()) {
            throw TimetableError(key, fmt::format("timetable is empty; steps {} are uncovered", range_text(0, total_)));
        }
        std::stable_sort(base_.begin(), base_.end(),
                         [](const TimetableEntry& a, const TimetableEntry& b) { return a.start < b.start; });
        std::int64_t cursor = 0;
        for (const auto& e : base_) {
            if (e.start > cursor) {
                throw TimetableError(key, fmt::format("steps {} are not covered by any phase", range_text(cursor, e.start)));
            }
            if (e.start < cursor) {
                throw TimetableError(key, fmt::format("steps {} are covered by more than one phase",
                                                      range_text(e.start, std::min(cursor, e.end))));
            }
            cursor = e.end;
        }
        if (cursor < total_) {
            throw TimetableError(key, fmt::format("steps {} are not covered by any phase", range_text(cursor, total_)));
        }
    }

    PhaseAt ModeTimetable::phase_at(std::int64_t i_step) const {
        if (i_step < 0 || i_step >= total_) {
            throw ArgumentError(fmt::format("step {} outside the timetable horizon {}", i_step, range_text(0, total_)));
        }
        // Last base row starting at or before i_step; validation guarantees it contains i_step.
        auto it = std::upper_bound(base_.begin(), base_.end(), i_step,
                                   [](std::int64_t v, const TimetableEntry& e) { return v < e.start; });
        const TimetableEntry& base = *std::prev(it);
        PhaseAt out{base.phase, base.overlay};
        for (const auto& e : entries_) {
            if (e.phase == Phase::LocalRgb && i_step >= e.start && i_step < e.end) {
                out.rgb_overlay = true;
            }
        }
        return out;
    }

    ModeTimetable default_timetable(std::int64_t block) {
        if (block < 1) {
            throw ArgumentError("alternation block must be >= 1");
        }
        std::vector<TimetableEntry> rows;
        rows.push_back({0, 1000, Phase::GlobalAdaptive, false});
        rows.push_back({100, 600, Phase::LocalRgb, true});
        bool fix = true;
        for (std::int64_t s = 1000; s < 1900; s += block) {
            rows.push_back({s, std::min<std::int64_t>(s + block, 1900), fix ? Phase::GlobalFix : Phase::GlobalFree, false});
            fix = !fix;
        }
        rows.push_back({1900, 2800, Phase::Local, false});
        return ModeTimetable(std::move(rows), 2800);
    }

    Scheduler::Scheduler(ModeTimetable timetable, ScheduleConstants constants, std::vector<std::size_t> ring,
                         int n_opt, std::uint64_t seed)
        : timetable_(std::move(timetable)),
          constants_(constants),
          ring_(std::move(ring)),
          n_opt_(n_opt),
          seed_(seed) {
        constants_.validate();
        if (ring_.empty()) {
            throw ArgumentError("scheduler needs at least one view");
        }
        if (n_opt_ < 1) {
            throw ConfigError("schedule.n_opt", fmt::format("must be >= 1, got {}", n_opt_));
        }
    }

    StepPlan Scheduler::plan(std::int64_t i_step) const {
        const auto at = timetable_.phase_at(i_step);
        StepPlan p;
        p.step = i_step;
        p.phase = at.phase;
        p.rgb_overlay = at.rgb_overlay;
        p.mode = mode_of(at.phase);
        const int n_view = this->n_view();
        p.guidance = derive_guidance({i_step, n_view, n_opt_, p.mode}, constants_);

        const auto n = static_cast<std::int64_t>(n_view);
        if (p.mode == GuidanceMode::Local) {
            p.view = ring_[static_cast<std::size_t>((i_step / n_opt_) % n)];
        } else if (at.phase == Phase::GlobalFree) {
            std::vector<std::size_t> perm = ring_;
            detail::seeded_shuffle(perm, detail::mix(seed_, static_cast<std::uint64_t>(i_step / n)));
            p.view = perm[static_cast<std::size_t>(i_step % n)];
        } else {
            p.view = ring_[static_cast<std::size_t>(i_step % n)];
        }
        return p;
    }

} // namespace gsstyle
