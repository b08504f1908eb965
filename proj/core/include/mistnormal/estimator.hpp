#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mistnormal/geometry.hpp"
#include "mistnormal/imaging.hpp"
#include "mistnormal/scene.hpp"

namespace mistnormal::estimator {

using geometry::Angle;
using geometry::ArcAxis;

std::string_view to_string(ArcAxis axis);

/// Viewpoints i = 1..n along one arc, centered on the initial direction.
struct SweepPlan {
  ArcAxis axis = ArcAxis::Azimuth;
  std::vector<Angle> offsets;
  geometry::SprayGeometry geometry;

  /// Throws InvalidArgument unless offsets strictly increase, n >= 3 and the
  /// span does not exceed the sweep angle.
  void validate() const;
  Angle span() const { return offsets.back() - offsets.front(); }
  /// Arc travel time across the span at the wrist speed.
  double traverse_time_s() const;
};

/// Offsets covering [-beta/2, +beta/2] at `step`. Throws BudgetExceeded when
/// the arc cannot be traversed within the completion budget.
SweepPlan plan_sweep(const geometry::SprayGeometry& geometry, Angle step,
                     ArcAxis axis = ArcAxis::Azimuth);

struct ViewpointSample {
  Angle offset;
  double L_mm = 0.0;
  double chord_px = 0.0;
  double visibility = 1.0;
  double timestamp_s = 0.0;
  double f_score = 0.0;
};

struct AxisEstimate {
  ArcAxis axis = ArcAxis::Azimuth;
  std::vector<ViewpointSample> samples;
  int argmax_index = -1;
  /// Angle between the argmax viewpoint and the initial direction.
  Angle argmax_angle;
  /// Foreshortening inversion of the argmax length, sign taken from the
  /// argmax offset. Empty when the length was infeasible.
  std::optional<Angle> closed_form_angle;
  /// The argmax sits on the first or last viewpoint: the estimate is only a
  /// bound.
  bool span_saturated = false;
};

struct EstimationResult {
  Angle theta_hat;
  Angle phi_hat;
  geometry::UnitVec3 normal = geometry::UnitVec3::normalized(Eigen::Vector3d::UnitX());
  AxisEstimate azimuth;
  std::optional<AxisEstimate> elevation;
  double time_spent_s = 0.0;

  bool span_saturated() const {
    return azimuth.span_saturated || (elevation && elevation->span_saturated);
  }
};

using FrameObserver =
    std::function<void(ArcAxis axis, int index, const imaging::RenderedFrame& frame, const Mask& extracted)>;

struct EstimatorOptions {
  imaging::Intrinsics intrinsics;
  int seed_size_px = 15;
  imaging::SegmenterOptions segmenter;
  imaging::MeasureOptions measure;
  /// Relative tolerance under which two lengths count as the same maximum.
  double tie_tolerance = 1e-9;
  /// Lengths this many pixels short of the maximum also count as tied;
  /// differences below the pixel pitch are staircase artefacts.
  double tie_tolerance_px = 0.5;
  FrameObserver observer;
};

/// Index of the maximal length. Tied maxima that touch either end of the
/// span resolve to that end. Otherwise the tied viewpoints resolve to their
/// median; with an even count, the middle pair goes to the smaller |offset|,
/// then the negative one.
/// A length counts as tied when within tie_tolerance * max or
/// absolute_slack of the maximum, whichever is larger.
int select_argmax(std::span<const double> lengths, std::span<const Angle> offsets,
                  double tie_tolerance = 1e-9, double absolute_slack = 0.0);

/// Picks the candidate whose sign matches the argmax offset; offset 0 gives 0.
Angle resolve_sign(const geometry::AngleCandidates& candidates, Angle argmax_offset);

/// Per-frame noise seed derived from the trial seed, the arc and the index.
std::uint64_t frame_seed(std::uint64_t base, ArcAxis axis, int index);

/// Runs the azimuth sweep and, when given, the elevation sweep after it on
/// the same evaporation clock, starting when the spray ends.
/// Throws BudgetExceeded, MistEvaporated and anything imaging throws.
EstimationResult sweep_and_estimate(const scene::Scene& scene, const SweepPlan& azimuth_plan,
                                    const std::optional<SweepPlan>& elevation_plan,
                                    const imaging::NoiseModel& noise,
                                    const EstimatorOptions& options = {});

/// Root mean square in degrees. Throws EmptyInput.
double rmse(std::span<const Angle> errors);

}  // namespace mistnormal::estimator
