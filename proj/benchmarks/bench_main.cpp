#include <benchmark/benchmark.h>

#include "plax/estimation.hpp"
#include "plax/metrics.hpp"
#include "plax/pipeline.hpp"
#include "plax/structure.hpp"
#include "plax/synthetic.hpp"

using namespace plax;

namespace {

const OracleScene& clean_scene() {
    static const OracleScene scene = generate_scene(SceneConfig::default_driving());
    return scene;
}

const OracleScene& noisy_scene() {
    static const OracleScene scene = [] {
        SceneConfig cfg = SceneConfig::default_driving();
        cfg.noise_px = 0.5;
        cfg.outlier_fraction = 0.2;
        return generate_scene(cfg);
    }();
    return scene;
}

void BM_dlt_homography(benchmark::State& state) {
    const auto& scene = clean_scene();
    std::vector<Correspondence> matches(scene.correspondences.items.begin(),
                                        scene.correspondences.items.begin() + state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(dlt_homography(matches));
    }
}
BENCHMARK(BM_dlt_homography)->Arg(8)->Arg(64)->Arg(400);

void BM_ransac_homography(benchmark::State& state) {
    const auto& scene = noisy_scene();
    RansacParams params;
    params.seed = 7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ransac_homography(scene.correspondences, params));
    }
}
BENCHMARK(BM_ransac_homography);

void BM_refine_homography(benchmark::State& state) {
    const auto& scene = noisy_scene();
    RansacParams params;
    params.seed = 7;
    const RansacResult rr = ransac_homography(scene.correspondences, params);
    const auto pairs = residual_pairs(rr.homography, scene.correspondences, 2.0);
    const Epipole e = estimate_epipole(pairs);
    RefineOptions opts;
    opts.min_parallax = 2.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            refine_homography_parallax(rr.homography, scene.correspondences, e, opts));
    }
}
BENCHMARK(BM_refine_homography);

void BM_structure_map(benchmark::State& state) {
    const auto& scene = clean_scene();
    for (auto _ : state) {
        benchmark::DoNotOptimize(structure_map(scene.correspondences, scene.true_homography,
                                               scene.true_epipole, scene.true_k_scale));
    }
}
BENCHMARK(BM_structure_map);

void BM_depth_metrics(benchmark::State& state) {
    const auto& scene = clean_scene();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            depth_metrics({&scene.true_depth, &scene.true_depth, {}}));
    }
}
BENCHMARK(BM_depth_metrics);

void BM_full_pipeline(benchmark::State& state) {
    const auto& scene = noisy_scene();
    PipelineOptions opts;
    opts.seed = 7;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            estimate_pipeline(scene.correspondences, scene.config.intrinsics, opts));
    }
}
BENCHMARK(BM_full_pipeline);

} // namespace

BENCHMARK_MAIN();
