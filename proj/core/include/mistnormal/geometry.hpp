#pragma once

// Closed-form relations between plane tilt, foreshortened mist length,
// plane normal, viewpoint arcs and the arc-speed constraint.
//
// World frame: the plane anchor sits at the origin of the sweep arcs, the
// initial camera looks along -x, +y is to the camera's right and +z is up.
// Azimuth rotates about +z, elevation tilts toward +z.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <numbers>
#include <utility>

#include "mistnormal/error.hpp"

namespace mistnormal::geometry {

/// Plane-relative angle. Stored in radians; degrees at every interface.
struct Angle {
  double radians = 0.0;

  static constexpr Angle from_radians(double r) { return Angle{r}; }
  static constexpr Angle from_degrees(double d) { return Angle{d * std::numbers::pi / 180.0}; }
  constexpr double degrees() const { return radians * 180.0 / std::numbers::pi; }

  constexpr Angle operator-() const { return Angle{-radians}; }
  constexpr Angle operator+(Angle o) const { return Angle{radians + o.radians}; }
  constexpr Angle operator-(Angle o) const { return Angle{radians - o.radians}; }
  constexpr Angle operator*(double k) const { return Angle{radians * k}; }
  constexpr auto operator<=>(const Angle&) const = default;
};

/// True when |a| is strictly inside (-90 deg, +90 deg).
bool is_tilt_angle(Angle a);

class UnitVec3 {
 public:
  /// Normalizes v; throws InvalidArgument for a zero or non-finite vector.
  static UnitVec3 normalized(const Eigen::Vector3d& v);

  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }
  const Eigen::Vector3d& vec() const { return v_; }

 private:
  explicit UnitVec3(const Eigen::Vector3d& v) : v_(v) {}
  Eigen::Vector3d v_;
};

/// Arm half length l, standoff r, sweep angle beta, arc speed and the time
/// budget before the mist starts to degrade.
struct SprayGeometry {
  double half_length_mm = 50.0;
  double standoff_mm = 100.0;
  Angle sweep_angle = Angle::from_degrees(60.0);
  double wrist_speed_mm_s = 50.0;
  double completion_budget_s = 6.0;

  /// Throws InvalidArgument when any field is outside its domain.
  void validate() const;
};

/// Both signed solutions (+theta, -theta) of the foreshortening relation.
struct AngleCandidates {
  Angle positive;
  Angle negative;
};

/// Inverts L = 2l / cos(theta). Lengths in [2l - tol, 2l) clamp to zero;
/// anything shorter throws InfeasibleLength.
AngleCandidates angle_from_projected_length(double half_length_mm, double length_mm,
                                            double tol_mm);
/// Same, with the default clamping band of 1% of 2l.
AngleCandidates angle_from_projected_length(double half_length_mm, double length_mm);

/// N = (cos el cos az, cos el sin az, sin el).
UnitVec3 normal_from_angles(Angle azimuth, Angle elevation);

struct SpraySpeedCheck {
  bool feasible = false;
  double min_speed_mm_s = 0.0;
  double traverse_time_s = 0.0;
};

/// feasible iff r * beta / v_wrist < T_completion.
SpraySpeedCheck check_spray_speed(const SprayGeometry& g);

/// Camera pose; rotation columns are the camera right, down and forward
/// (optical axis) directions expressed in world coordinates.
struct CameraPose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  Eigen::Vector3d right() const { return rotation.col(0); }
  Eigen::Vector3d down() const { return rotation.col(1); }
  Eigen::Vector3d forward() const { return rotation.col(2); }
};

enum class ArcAxis { Azimuth, Elevation };

/// The camera standing `standoff_mm` in front of `anchor` along +x, looking
/// back at it with +z up.
CameraPose initial_camera_pose(const Eigen::Vector3d& anchor, double standoff_mm);

/// Rotates `initial` about the anchor by `offset`: about the camera up axis
/// for azimuth, about the camera left axis for elevation (positive offsets
/// move the camera toward +y / +z respectively). Offset 0 returns `initial`
/// unchanged.
CameraPose arc_viewpoint(const CameraPose& initial, const Eigen::Vector3d& anchor, Angle offset,
                         ArcAxis axis);

/// Elevation of the plane's trace in the vertical plane through the initial
/// optical axis: tan(trace) = tan(elevation) / cos(azimuth). The elevation
/// arc sweep and the vertical mist arm both see this angle.
Angle elevation_trace_from_normal(Angle azimuth, Angle elevation);
/// Inverse of elevation_trace_from_normal.
Angle normal_elevation_from_trace(Angle azimuth, Angle trace);

}  // namespace mistnormal::geometry
