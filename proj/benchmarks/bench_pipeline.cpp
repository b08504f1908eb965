#include <benchmark/benchmark.h>

#include "mistnormal/estimator.hpp"
#include "mistnormal/wiping.hpp"

using namespace mistnormal;
using geometry::Angle;

namespace {

scene::Scene tilted_scene(double az_deg) {
  scene::PlaneTarget p;
  p.azimuth = Angle::from_degrees(az_deg);
  return {p, scene::spray_cross(p, {}, 2.5, 3), scene::Background::textureless(), {}};
}

imaging::CameraView view_at(const scene::Scene& s, double offset_deg) {
  return {geometry::arc_viewpoint(geometry::initial_camera_pose(s.plane.center, 100.0), s.plane.center,
                                  Angle::from_degrees(offset_deg), geometry::ArcAxis::Azimuth),
          {}};
}

void BM_RenderView(benchmark::State& state) {
  const auto s = tilted_scene(20.0);
  const auto v = view_at(s, 10.0);
  const imaging::NoiseModel noise{2.0, 0.0, 1};
  for (auto _ : state) benchmark::DoNotOptimize(imaging::render_view(s, v, 0.0, noise));
}
BENCHMARK(BM_RenderView)->Unit(benchmark::kMillisecond);

void BM_ExtractMistedArea(benchmark::State& state) {
  const auto s = tilted_scene(20.0);
  const auto v = view_at(s, 10.0);
  const auto frame = imaging::render_view(s, v, 0.0, {2.0, 0.0, 1});
  const auto seed = imaging::seed_rect_around(imaging::project(v, s.plane.center), 15, 1280, 720);
  for (auto _ : state) benchmark::DoNotOptimize(imaging::extract_misted_area(frame, seed));
}
BENCHMARK(BM_ExtractMistedArea)->Unit(benchmark::kMillisecond);

void BM_MeasureAxes(benchmark::State& state) {
  const auto s = tilted_scene(20.0);
  const auto v = view_at(s, 10.0);
  const auto frame = imaging::render_view(s, v, 0.0, {});
  for (auto _ : state) benchmark::DoNotOptimize(imaging::measure_axes(frame.truth_mask, v, 100.0));
}
BENCHMARK(BM_MeasureAxes)->Unit(benchmark::kMillisecond);

void BM_AzimuthSweep(benchmark::State& state) {
  const auto s = tilted_scene(20.0);
  const auto plan = estimator::plan_sweep({}, Angle::from_degrees(static_cast<double>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(estimator::sweep_and_estimate(s, plan, std::nullopt, {2.0, 0.0, 1}));
}
BENCHMARK(BM_AzimuthSweep)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_WipeSession(benchmark::State& state) {
  wiping::WipePlan plan;
  plan.stroke_normal = geometry::normal_from_angles(Angle::from_degrees(5.8), Angle{});
  const auto ink = wiping::InkMap::painted_stripe(150.0, 33.3, 1.0, 20.0, 0.8, 1);
  for (auto _ : state) benchmark::DoNotOptimize(wiping::execute_wipe(plan, {}, {}, state.range(0) != 0, ink));
}
BENCHMARK(BM_WipeSession)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
