// Serial reference vs OpenMP for each batch kernel.

#include "hemicap/coverage.hpp"
#include "hemicap/kernels.hpp"
#include "hemicap/session.hpp"
#include "hemicap/simcam.hpp"

#include <benchmark/benchmark.h>

using namespace hemicap;

namespace {

std::vector<MarkerObservation> observations(int n) {
    const SessionConfig c = SessionConfig::defaults();
    std::mt19937_64 rng(11);
    std::vector<MarkerObservation> out;
    for (int i = 0; i < n; ++i) {
        const Pose gt = simcam::random_marker_view(rng, c.intrinsics, c.marker_spec, 0.3, 1.5);
        out.push_back(simcam::synth_observation(gt, c.intrinsics, c.marker_spec, 0.5, rng));
    }
    return out;
}

std::vector<Pose> object_poses(int n) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(-0.3, 0.3), z(0.3, 2.0);
    std::vector<Pose> out;
    for (int i = 0; i < n; ++i) {
        out.push_back({UnitQuaternion::from_components(g(rng), g(rng), g(rng), g(rng)), {u(rng), u(rng), z(rng)}});
    }
    return out;
}

template <auto Fn>
void bm_min_angle(benchmark::State& state) {
    const PatchLayout layout = build_hemisphere_layout(int(state.range(0)), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(layout.centers));
}

template <auto Fn>
void bm_poses(benchmark::State& state) {
    const SessionConfig c = SessionConfig::defaults();
    const auto obs = observations(int(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(obs, c.intrinsics, c.marker_spec));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_annotate(benchmark::State& state) {
    const SessionConfig c = SessionConfig::defaults();
    const auto poses = object_poses(int(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(poses, c.intrinsics, c.object_model));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bm_min_angle<kernels::min_pairwise_angle_serial>)->Name("min_pairwise_angle/serial")->Arg(100)->Arg(400)->Arg(1600);
BENCHMARK(bm_min_angle<kernels::min_pairwise_angle>)->Name("min_pairwise_angle/omp")->Arg(100)->Arg(400)->Arg(1600);
BENCHMARK(bm_poses<kernels::estimate_poses_serial>)->Name("estimate_poses/serial")->Arg(1000)->Arg(10000);
BENCHMARK(bm_poses<kernels::estimate_poses>)->Name("estimate_poses/omp")->Arg(1000)->Arg(10000);
BENCHMARK(bm_annotate<kernels::annotate_many_serial>)->Name("annotate_many/serial")->Arg(1000)->Arg(100000);
BENCHMARK(bm_annotate<kernels::annotate_many>)->Name("annotate_many/omp")->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
