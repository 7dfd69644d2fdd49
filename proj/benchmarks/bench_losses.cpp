#include "gsstyle/experts.hpp"
#include "gsstyle/metrics.hpp"
#include "gsstyle/toy_priors.hpp"
#include "gsstyle/trainer.hpp"

#include "scenes.hpp"
#include "toy_stack.hpp"

#include <benchmark/benchmark.h>

using namespace gsstyle;

static void BM_Gram(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const Image f = testing::random_image(2, 64, 64, c);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gram(f));
    }
}
BENCHMARK(BM_Gram)->Arg(8)->Arg(64);

static void BM_Ssim(benchmark::State& state) {
    const int s = static_cast<int>(state.range(0));
    const Image a = testing::random_image(3, s, s);
    const Image b = testing::random_image(4, s, s);
    for (auto _ : state) {
        benchmark::DoNotOptimize(ssim(a, b));
    }
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

static void BM_SosLoss(benchmark::State& state) {
    auto extractor = toy::feature_extractor(1);
    const SOSConfig cfg = SOSConfig::five_layer(*extractor);
    const Image view = testing::random_image(5, 64, 64);
    const Image ref = testing::random_image(6, 96, 96);
    const std::vector<Image> views{view};
    for (auto _ : state) {
        benchmark::DoNotOptimize(sos_loss(views, ref, *extractor, cfg));
    }
}
BENCHMARK(BM_SosLoss);

static void BM_CompositeStep(benchmark::State& state) {
    testing::ToyStack s = testing::four_expert_three_gaussians(10);
    const Scheduler sch(s.config.timetable, s.config.objective.weights.dssd.schedule, view_order(s.views, 0),
                        s.config.n_opt, s.config.objective.seed);
    std::int64_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            composite_loss(s.scene, s.views, s.bundle, s.config.objective, s.providers, sch.plan(i++ % 10)));
    }
}
BENCHMARK(BM_CompositeStep);
BENCHMARK_MAIN();
