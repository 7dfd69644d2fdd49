#include "gsstyle/renderer.hpp"

#include "scenes.hpp"

#include <benchmark/benchmark.h>

using namespace gsstyle;

static void BM_Render(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const int size = static_cast<int>(state.range(1));
    const GaussianCloud cloud = testing::random_scene(7, n, 3);
    const CameraView view = testing::front_camera(size, size);
    for (auto _ : state) {
        benchmark::DoNotOptimize(render(cloud, view));
    }
    state.SetItemsProcessed(state.iterations() * size * size);
}
BENCHMARK(BM_Render)->Args({20, 32})->Args({200, 64})->Args({2000, 128});

static void BM_ColorGradient(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const GaussianCloud cloud = testing::random_scene(8, n, 3);
    const CameraView view = testing::front_camera(64, 64);
    const Image grad = testing::random_image(1, 64, 64, 3, -1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(color_gradient(cloud, view, grad));
    }
}
BENCHMARK(BM_ColorGradient)->Arg(20)->Arg(200);
