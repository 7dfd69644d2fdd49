#include "gsstyle/errors.hpp"
#include "gsstyle/scheduler.hpp"

#include <algorithm>
#include <gtest/gtest.h>
#include <set>

using namespace gsstyle;

TEST(Scheduler, AlphaStepHandTable) {
    EXPECT_DOUBLE_EQ(alpha_step(25, 4, 10, GuidanceMode::Global), 0.6);
    EXPECT_DOUBLE_EQ(alpha_step(41, 4, 10, GuidanceMode::Global), 0.0);
    EXPECT_DOUBLE_EQ(alpha_step(3, 4, 10, GuidanceMode::Global), 0.0);
    EXPECT_DOUBLE_EQ(alpha_step(4, 4, 10, GuidanceMode::Global), 0.1);
    EXPECT_DOUBLE_EQ(alpha_step(39, 4, 10, GuidanceMode::Global), 0.9);
    EXPECT_DOUBLE_EQ(alpha_step(0, 4, 10, GuidanceMode::Local), 0.0);
    EXPECT_DOUBLE_EQ(alpha_step(13, 4, 10, GuidanceMode::Local), 0.3);
    EXPECT_DOUBLE_EQ(alpha_step(20, 4, 10, GuidanceMode::Local), 0.0);
    EXPECT_THROW(alpha_step(0, 0, 10, GuidanceMode::Global), ArgumentError);
    EXPECT_THROW(alpha_step(0, 1, 0, GuidanceMode::Local), ArgumentError);
    EXPECT_THROW(alpha_step(-1, 1, 1, GuidanceMode::Local), ArgumentError);
}

TEST(Scheduler, AlphaStepRangeAndPeriodExhaustive) {
    for (int n_view : {1, 3, 8}) {
        for (int n_opt : {1, 4, 10}) {
            const std::int64_t period_g = static_cast<std::int64_t>(n_view) * n_opt;
            for (std::int64_t i = 0; i < 10 * period_g; ++i) {
                const double g = alpha_step(i, n_view, n_opt, GuidanceMode::Global);
                const double l = alpha_step(i, n_view, n_opt, GuidanceMode::Local);
                ASSERT_GE(g, 0.0);
                ASSERT_LT(g, 1.0);
                ASSERT_GE(l, 0.0);
                ASSERT_LT(l, 1.0);
                ASSERT_EQ(g, alpha_step(i + period_g, n_view, n_opt, GuidanceMode::Global));
                ASSERT_EQ(l, alpha_step(i + n_opt, n_view, n_opt, GuidanceMode::Local));
            }
        }
    }
}

TEST(Scheduler, TimestepHandTable) {
    // t = round((1 - sqrt(a)) * 1000) clipped to [20, 750]
    EXPECT_EQ(sample_timestep(0.0, 1000, 20, 750), 750);
    EXPECT_EQ(sample_timestep(0.01, 1000, 20, 750), 750);
    EXPECT_EQ(sample_timestep(0.0625, 1000, 20, 750), 750);
    EXPECT_EQ(sample_timestep(0.25, 1000, 20, 750), 500);
    EXPECT_EQ(sample_timestep(0.36, 1000, 20, 750), 400);
    EXPECT_EQ(sample_timestep(0.64, 1000, 20, 750), 200);
    EXPECT_EQ(sample_timestep(0.81, 1000, 20, 750), 100);
    EXPECT_EQ(sample_timestep(0.9409, 1000, 20, 750), 30);
    EXPECT_EQ(sample_timestep(0.99, 1000, 20, 750), 20);
    EXPECT_EQ(sample_timestep(1.0, 1000, 20, 750), 20);
    EXPECT_THROW(sample_timestep(0.5, 1000, 800, 750), ConfigError);
    EXPECT_THROW(sample_timestep(1.5, 1000, 20, 750), ArgumentError);
}

TEST(Scheduler, TimestepMonotoneOnDenseGrid) {
    int prev = 1 << 30;
    for (int k = 0; k <= 10000; ++k) {
        const int t = sample_timestep(k / 10000.0, 1000, 20, 750);
        EXPECT_LE(t, prev);
        EXPECT_GE(t, 20);
        EXPECT_LE(t, 750);
        prev = t;
    }
}

TEST(Scheduler, DynamicCfgHandTable) {
    EXPECT_DOUBLE_EQ(dynamic_cfg(0.0, 20.0), 7.5);
    EXPECT_DOUBLE_EQ(dynamic_cfg(0.5, 20.0), 7.5);
    EXPECT_NEAR(dynamic_cfg(0.7, 20.0), 9.8, 1e-12);
    EXPECT_NEAR(dynamic_cfg(0.9, 20.0), 16.2, 1e-12);
    EXPECT_DOUBLE_EQ(dynamic_cfg(1.0, 20.0), 20.0);
    EXPECT_THROW(dynamic_cfg(0.5, 7.0), ConfigError);
}

TEST(Scheduler, DynamicCfgMonotoneAndBounded) {
    double prev = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        const double d = dynamic_cfg(k / 1000.0, 20.0);
        EXPECT_GE(d, prev);
        EXPECT_GE(d, 7.5);
        EXPECT_LE(d, 20.0);
        prev = d;
    }
}

TEST(Scheduler, DefaultConstants) {
    const ScheduleConstants c;
    EXPECT_EQ(c.total_timesteps, 1000);
    EXPECT_EQ(c.t_min, 20);
    EXPECT_EQ(c.t_max, 750);
    EXPECT_EQ(c.lambda_max, 20.0);
    const GuidanceSample lo = derive_guidance({0, 4, 10, GuidanceMode::Global}, c);
    EXPECT_EQ(lo.timestep, 750);
    EXPECT_EQ(lo.delta_lambda, 7.5);
    const GuidanceSample mid = derive_guidance({25, 4, 10, GuidanceMode::Global}, c);
    EXPECT_DOUBLE_EQ(mid.alpha, 0.6);
    EXPECT_EQ(mid.timestep, 225); // round(1000 * (1 - sqrt(0.6))) = round(225.403)
    EXPECT_NEAR(mid.delta_lambda, 7.5, 0.0);
}

TEST(Scheduler, ViewOrder) {
    const std::vector<int> az{180, 0, 90};
    EXPECT_EQ(view_order(az), (std::vector<std::size_t>{1, 2, 0}));
    const std::vector<int> one{42};
    EXPECT_EQ(view_order(one), (std::vector<std::size_t>{0}));
    const std::vector<int> ring{0, 1, 2, 3, 4, 5, 6, 7};
    EXPECT_EQ(view_order(ring, 4), (std::vector<std::size_t>{4, 5, 6, 7, 0, 1, 2, 3}));
    const std::vector<int> dup{5, 1, 5, 1};
    EXPECT_EQ(view_order(dup), (std::vector<std::size_t>{1, 3, 0, 2}));
    EXPECT_THROW(view_order(std::vector<int>{}), ArgumentError);
}

TEST(Scheduler, DefaultTimetableLookups) {
    const ModeTimetable tt = default_timetable();
    EXPECT_EQ(tt.total_steps(), 2800);
    EXPECT_EQ(tt.phase_at(2000).phase, Phase::Local);
    EXPECT_FALSE(tt.phase_at(2000).rgb_overlay);
    EXPECT_EQ(tt.phase_at(300).phase, Phase::GlobalAdaptive);
    EXPECT_TRUE(tt.phase_at(300).rgb_overlay);
    EXPECT_FALSE(tt.phase_at(99).rgb_overlay);
    EXPECT_TRUE(tt.phase_at(100).rgb_overlay);
    EXPECT_TRUE(tt.phase_at(599).rgb_overlay);
    EXPECT_FALSE(tt.phase_at(600).rgb_overlay);
    EXPECT_EQ(tt.phase_at(1000).phase, Phase::GlobalFix);
    EXPECT_EQ(tt.phase_at(1100).phase, Phase::GlobalFree);
    EXPECT_EQ(tt.phase_at(1899).phase, Phase::GlobalFix);
    EXPECT_EQ(tt.phase_at(1900).phase, Phase::Local);
    EXPECT_THROW(tt.phase_at(2800), ArgumentError);
    EXPECT_THROW(tt.phase_at(-1), ArgumentError);
}

TEST(Scheduler, PhaseAtAgreesWithBruteForceTable) {
    const std::vector<TimetableEntry> rows{
        {0, 7, Phase::GlobalAdaptive, false}, {3, 9, Phase::LocalRgb, true}, {7, 12, Phase::GlobalFree, false},
        {12, 13, Phase::GlobalFix, true},     {13, 20, Phase::Local, false},
    };
    const ModeTimetable tt(rows, 20);
    for (std::int64_t i = 0; i < 20; ++i) {
        std::optional<Phase> base;
        bool overlay = false;
        for (const auto& r : rows) {
            if (i >= r.start && i < r.end) {
                if (r.phase == Phase::LocalRgb) {
                    overlay = true;
                } else {
                    ASSERT_FALSE(base.has_value());
                    base = r.phase;
                    overlay = overlay || r.overlay;
                }
            }
        }
        ASSERT_TRUE(base.has_value());
        EXPECT_EQ(tt.phase_at(i).phase, *base) << i;
        EXPECT_EQ(tt.phase_at(i).rgb_overlay, overlay) << i;
    }
}

TEST(Scheduler, TimetableValidation) {
    EXPECT_THROW(ModeTimetable({}, 10), TimetableError);
    try {
        ModeTimetable({{0, 4, Phase::Local, false}, {6, 10, Phase::Local, false}}, 10);
        FAIL();
    } catch (const TimetableError& e) {
        EXPECT_EQ(e.key(), "schedule.timetable");
        EXPECT_NE(std::string(e.what()).find("[4, 6)"), std::string::npos) << e.what();
    }
    EXPECT_THROW(ModeTimetable({{0, 6, Phase::Local, false}, {4, 10, Phase::Local, false}}, 10), TimetableError);
    EXPECT_THROW(ModeTimetable({{0, 8, Phase::Local, false}}, 10), TimetableError);
    EXPECT_THROW(ModeTimetable({{3, 2, Phase::Local, false}}, 10), TimetableError);
    // an overlay alone does not cover anything
    EXPECT_THROW(ModeTimetable({{0, 10, Phase::LocalRgb, true}}, 10), TimetableError);
}

TEST(Scheduler, PhaseNamesRoundTrip) {
    for (Phase p : {Phase::LocalRgb, Phase::GlobalAdaptive, Phase::GlobalFix, Phase::GlobalFree, Phase::Local}) {
        EXPECT_EQ(parse_phase(phase_name(p)), p);
    }
    EXPECT_EQ(parse_phase("global-free"), Phase::GlobalFree);
    EXPECT_FALSE(parse_phase("sideways").has_value());
    EXPECT_EQ(mode_of(Phase::Local), GuidanceMode::Local);
    EXPECT_EQ(mode_of(Phase::GlobalFree), GuidanceMode::Global);
}

TEST(Scheduler, PlanViewSelection) {
    // ring positions are view ids 10..13 so they are distinguishable from ring indices
    const std::vector<std::size_t> ring{10, 11, 12, 13};
    const ModeTimetable tt({{0, 8, Phase::GlobalFix, false}, {8, 40, Phase::GlobalFree, false},
                            {40, 60, Phase::Local, false}},
                           60);
    const Scheduler s(tt, {}, ring, 5, 99);

    for (std::int64_t i = 0; i < 8; ++i) {
        EXPECT_EQ(s.plan(i).view, ring[static_cast<std::size_t>(i % 4)]);
        EXPECT_EQ(s.plan(i).mode, GuidanceMode::Global);
    }
    bool any_reordered = false;
    for (std::int64_t sweep = 8; sweep < 40; sweep += 4) {
        std::vector<std::size_t> seen;
        for (std::int64_t i = sweep; i < sweep + 4; ++i) {
            seen.push_back(s.plan(i).view);
            EXPECT_EQ(s.plan(i).guidance.alpha, s.plan(sweep).guidance.alpha); // shared noise level
        }
        any_reordered = any_reordered || seen != ring;
        std::sort(seen.begin(), seen.end());
        EXPECT_EQ(seen, ring);
    }
    EXPECT_TRUE(any_reordered);
    for (std::int64_t i = 40; i < 60; ++i) {
        EXPECT_EQ(s.plan(i).view, ring[static_cast<std::size_t>((i / 5) % 4)]);
        EXPECT_EQ(s.plan(i).mode, GuidanceMode::Local);
        EXPECT_DOUBLE_EQ(s.plan(i).guidance.alpha, static_cast<double>(i % 5) / 5.0);
    }
    // deterministic for a seed
    const Scheduler again(tt, {}, ring, 5, 99);
    for (std::int64_t i = 0; i < 60; ++i) {
        EXPECT_EQ(s.plan(i).view, again.plan(i).view);
    }
}
