#include "mistnormal/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mistnormal::estimator {

std::string_view to_string(ArcAxis axis) {
  return axis == ArcAxis::Azimuth ? "azimuth" : "elevation";
}

void SweepPlan::validate() const {
  geometry.validate();
  require(offsets.size() >= 3, "a sweep needs at least three viewpoints");
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    require(offsets[i].radians > offsets[i - 1].radians, "sweep offsets must strictly increase");
  }
  require(span().radians <= geometry.sweep_angle.radians * (1.0 + 1e-12),
          "sweep span exceeds the sweep angle");
}

double SweepPlan::traverse_time_s() const {
  return geometry.standoff_mm * span().radians / geometry.wrist_speed_mm_s;
}

SweepPlan plan_sweep(const geometry::SprayGeometry& g, Angle step, ArcAxis axis) {
  g.validate();
  require(step.radians > 0.0 && std::isfinite(step.radians), "sweep step must be positive");
  const auto speed = geometry::check_spray_speed(g);
  if (!speed.feasible) {
    throw Error(ErrorKind::BudgetExceeded,
                "arc traverse takes " + std::to_string(speed.traverse_time_s) + " s, budget is " +
                    std::to_string(g.completion_budget_s) + " s (needs >= " +
                    std::to_string(speed.min_speed_mm_s) + " mm/s)");
  }
  const int intervals = static_cast<int>(std::floor(g.sweep_angle.radians / step.radians + 1e-9));
  SweepPlan plan;
  plan.axis = axis;
  plan.geometry = g;
  plan.offsets.reserve(intervals + 1);
  for (int i = 0; i <= intervals; ++i) {
    plan.offsets.push_back(Angle{(i - 0.5 * intervals) * step.radians});
  }
  plan.validate();
  return plan;
}

int select_argmax(std::span<const double> lengths, std::span<const Angle> offsets, double tie_tolerance,
                  double absolute_slack) {
  require(!lengths.empty() && lengths.size() == offsets.size(), "need one length per offset");
  const double best = *std::max_element(lengths.begin(), lengths.end());
  require(tie_tolerance >= 0.0 && absolute_slack >= 0.0, "tie tolerances must be non-negative");
  const double slack = std::max(tie_tolerance * std::abs(best), absolute_slack);
  std::vector<int> tied;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] >= best - slack) tied.push_back(static_cast<int>(i));
  }
  // Smallest |offset|, then the negative one.
  auto preferred = [&](int a, int b) {
    const double ma = std::abs(offsets[a].radians), mb = std::abs(offsets[b].radians);
    if (ma != mb) return ma < mb ? a : b;
    return offsets[a].radians < offsets[b].radians ? a : b;
  };
  const int last = static_cast<int>(lengths.size()) - 1;
  const bool hits_first = tied.front() == 0;
  const bool hits_last = tied.back() == last;
  if (hits_first && hits_last) return preferred(0, last);
  if (hits_first) return 0;
  if (hits_last) return last;

  // Pixel quantization makes the flat top of the curve alternate between
  // neighbouring values, so ties resolve to their median viewpoint.
  const std::size_t k = tied.size();
  if (k % 2 == 1) return tied[k / 2];
  return preferred(tied[k / 2 - 1], tied[k / 2]);
}

Angle resolve_sign(const geometry::AngleCandidates& candidates, Angle argmax_offset) {
  if (argmax_offset.radians > 0.0) return candidates.positive;
  if (argmax_offset.radians < 0.0) return candidates.negative;
  return Angle{0.0};
}

std::uint64_t frame_seed(std::uint64_t base, ArcAxis axis, int index) {
  std::uint64_t x = base ^ (axis == ArcAxis::Azimuth ? 0xA5A5A5A5ull : 0x5A5A5A5A00000000ull);
  x += 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(index + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

namespace {

AxisEstimate run_axis(const scene::Scene& scene, const SweepPlan& plan, const imaging::NoiseModel& noise,
                      const EstimatorOptions& options, double clock_start_s) {
  const auto& g = plan.geometry;
  const geometry::CameraPose initial = geometry::initial_camera_pose(scene.plane.center, g.standoff_mm);

  AxisEstimate est;
  est.axis = plan.axis;
  est.samples.reserve(plan.offsets.size());
  std::vector<double> lengths;
  lengths.reserve(plan.offsets.size());

  for (std::size_t i = 0; i < plan.offsets.size(); ++i) {
    const Angle offset = plan.offsets[i];
    const double t = clock_start_s + g.standoff_mm * (offset - plan.offsets.front()).radians / g.wrist_speed_mm_s;
    const double vis = scene::mist_visibility(scene.mist, t);
    if (vis <= 0.0) {
      throw Error(ErrorKind::MistEvaporated, "mist gone at t = " + std::to_string(t) + " s during the " +
                                                 std::string(to_string(plan.axis)) + " sweep");
    }

    imaging::CameraView view{geometry::arc_viewpoint(initial, scene.plane.center, offset, plan.axis),
                             options.intrinsics};
    imaging::NoiseModel frame_noise = noise;
    frame_noise.seed = frame_seed(noise.seed, plan.axis, static_cast<int>(i));
    const imaging::RenderedFrame frame = imaging::render_view(scene, view, t, frame_noise);

    const Eigen::Vector2d anchor_px = imaging::project(view, scene.plane.to_world(scene.mist.center_on_plane));
    const imaging::PixelRect seed = imaging::seed_rect_around(anchor_px, options.seed_size_px,
                                                              options.intrinsics.width, options.intrinsics.height);
    const Mask mask = imaging::extract_misted_area(frame, seed, options.segmenter);
    if (options.observer) options.observer(plan.axis, static_cast<int>(i), frame, mask);

    imaging::MistObservation obs = imaging::measure_axes(mask, view, g.standoff_mm, options.measure);
    obs.viewpoint_index = static_cast<int>(i);

    ViewpointSample sample;
    sample.offset = offset;
    const bool az = plan.axis == ArcAxis::Azimuth;
    sample.L_mm = az ? obs.L_azimuth_mm : obs.L_elevation_mm;
    sample.chord_px = az ? obs.azimuth_chord_px : obs.elevation_chord_px;
    sample.visibility = vis;
    sample.timestamp_s = t;
    sample.f_score = frame.truth_mask.count() > 0 ? imaging::f_score(mask, frame.truth_mask) : 0.0;
    est.samples.push_back(sample);
    lengths.push_back(sample.L_mm);
  }

  const double mm_per_px = g.standoff_mm / options.intrinsics.focal_px;
  est.argmax_index = select_argmax(lengths, plan.offsets, options.tie_tolerance, options.tie_tolerance_px * mm_per_px);
  est.argmax_angle = plan.offsets[est.argmax_index];
  est.span_saturated = est.argmax_index == 0 || est.argmax_index == static_cast<int>(lengths.size()) - 1;
  try {
    const auto candidates = geometry::angle_from_projected_length(g.half_length_mm, lengths[est.argmax_index]);
    est.closed_form_angle = resolve_sign(candidates, est.argmax_angle);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InfeasibleLength) throw;
  }
  return est;
}

}  // namespace

EstimationResult sweep_and_estimate(const scene::Scene& scene, const SweepPlan& azimuth_plan,
                                    const std::optional<SweepPlan>& elevation_plan,
                                    const imaging::NoiseModel& noise, const EstimatorOptions& options) {
  azimuth_plan.validate();
  require(azimuth_plan.axis == ArcAxis::Azimuth, "first plan must sweep azimuth");
  if (elevation_plan) {
    elevation_plan->validate();
    require(elevation_plan->axis == ArcAxis::Elevation, "second plan must sweep elevation");
  }
  noise.validate();
  options.intrinsics.validate();

  double total = azimuth_plan.traverse_time_s();
  if (elevation_plan) total += elevation_plan->traverse_time_s();
  const double budget = azimuth_plan.geometry.completion_budget_s;
  if (!(total < budget)) {
    throw Error(ErrorKind::BudgetExceeded, "sweeps need " + std::to_string(total) + " s, budget is " +
                                               std::to_string(budget) + " s");
  }

  const double start = scene.mist.spray_end_time_s;
  EstimationResult result;
  result.azimuth = run_axis(scene, azimuth_plan, noise, options, start);
  result.theta_hat = result.azimuth.argmax_angle;
  double clock = start + azimuth_plan.traverse_time_s();
  if (elevation_plan) {
    result.elevation = run_axis(scene, *elevation_plan, noise, options, clock);
    clock += elevation_plan->traverse_time_s();
    // The elevation arc sees the plane's vertical trace; fold the azimuth back in.
    result.phi_hat = geometry::normal_elevation_from_trace(result.theta_hat, result.elevation->argmax_angle);
  }
  result.normal = geometry::normal_from_angles(result.theta_hat, result.phi_hat);
  result.time_spent_s = clock - start;
  return result;
}

double rmse(std::span<const Angle> errors) {
  if (errors.empty()) throw Error(ErrorKind::EmptyInput, "rmse of an empty list");
  double s = 0.0;
  for (const Angle e : errors) s += e.degrees() * e.degrees();
  return std::sqrt(s / static_cast<double>(errors.size()));
}

}  // namespace mistnormal::estimator
