#include "mistnormal/geometry.hpp"

#include <cmath>
#include <string>

namespace mistnormal::geometry {

namespace {
constexpr double kHalfTurn = std::numbers::pi / 2.0;
}

bool is_tilt_angle(Angle a) {
  return std::isfinite(a.radians) && std::abs(a.radians) < kHalfTurn;
}

UnitVec3 UnitVec3::normalized(const Eigen::Vector3d& v) {
  const double n = v.norm();
  require(std::isfinite(n) && n > 0.0, "UnitVec3 needs a finite non-zero vector");
  return UnitVec3(v / n);
}

void SprayGeometry::validate() const {
  require(half_length_mm > 0.0, "half length must be positive");
  require(standoff_mm > 0.0, "standoff must be positive");
  require(sweep_angle.radians > 0.0 && sweep_angle.radians < std::numbers::pi,
          "sweep angle must lie in (0, 180) degrees");
  require(wrist_speed_mm_s > 0.0, "wrist speed must be positive");
  require(completion_budget_s > 0.0, "completion budget must be positive");
}

AngleCandidates angle_from_projected_length(double half_length_mm, double length_mm,
                                            double tol_mm) {
  require(half_length_mm > 0.0, "half length must be positive");
  require(length_mm > 0.0, "projected length must be positive");
  require(tol_mm >= 0.0, "tolerance must be non-negative");
  const double full = 2.0 * half_length_mm;
  if (length_mm < full - tol_mm) {
    throw Error(ErrorKind::InfeasibleLength,
                "measured length " + std::to_string(length_mm) + " mm is shorter than 2l = " +
                    std::to_string(full) + " mm");
  }
  if (length_mm < full) return {Angle{0.0}, Angle{-0.0}};
  const double theta = std::acos(full / length_mm);
  return {Angle{theta}, Angle{-theta}};
}

AngleCandidates angle_from_projected_length(double half_length_mm, double length_mm) {
  return angle_from_projected_length(half_length_mm, length_mm, 0.02 * half_length_mm);
}

UnitVec3 normal_from_angles(Angle azimuth, Angle elevation) {
  require(is_tilt_angle(azimuth) && is_tilt_angle(elevation),
          "azimuth and elevation must lie in (-90, 90) degrees");
  const double ca = std::cos(azimuth.radians);
  const double sa = std::sin(azimuth.radians);
  const double ce = std::cos(elevation.radians);
  const double se = std::sin(elevation.radians);
  return UnitVec3::normalized(Eigen::Vector3d(ce * ca, ce * sa, se));
}

SpraySpeedCheck check_spray_speed(const SprayGeometry& g) {
  g.validate();
  const double arc = g.standoff_mm * g.sweep_angle.radians;
  SpraySpeedCheck out;
  out.traverse_time_s = arc / g.wrist_speed_mm_s;
  out.min_speed_mm_s = arc / g.completion_budget_s;
  out.feasible = out.traverse_time_s < g.completion_budget_s;
  return out;
}

CameraPose initial_camera_pose(const Eigen::Vector3d& anchor, double standoff_mm) {
  require(standoff_mm > 0.0, "standoff must be positive");
  CameraPose pose;
  pose.position = anchor + Eigen::Vector3d(standoff_mm, 0.0, 0.0);
  pose.rotation.col(0) = Eigen::Vector3d(0.0, 1.0, 0.0);
  pose.rotation.col(1) = Eigen::Vector3d(0.0, 0.0, -1.0);
  pose.rotation.col(2) = Eigen::Vector3d(-1.0, 0.0, 0.0);
  return pose;
}

CameraPose arc_viewpoint(const CameraPose& initial, const Eigen::Vector3d& anchor, Angle offset,
                         ArcAxis axis) {
  const Eigen::Vector3d radial = initial.position - anchor;
  if (radial.norm() < 1e-9) throw Error(ErrorKind::DegenerateArc, "camera sits on the anchor");
  require(std::isfinite(offset.radians), "arc offset must be finite");
  if (offset.radians == 0.0) return initial;

  const Eigen::Vector3d rot_axis =
      axis == ArcAxis::Azimuth ? Eigen::Vector3d(-initial.down()) : Eigen::Vector3d(-initial.right());
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(offset.radians, rot_axis.normalized()).toRotationMatrix();

  CameraPose out;
  out.position = anchor + rot * radial;
  out.rotation = rot * initial.rotation;
  return out;
}

Angle elevation_trace_from_normal(Angle azimuth, Angle elevation) {
  require(is_tilt_angle(azimuth) && is_tilt_angle(elevation),
          "azimuth and elevation must lie in (-90, 90) degrees");
  return Angle{std::atan(std::tan(elevation.radians) / std::cos(azimuth.radians))};
}

Angle normal_elevation_from_trace(Angle azimuth, Angle trace) {
  require(is_tilt_angle(azimuth) && is_tilt_angle(trace),
          "azimuth and trace must lie in (-90, 90) degrees");
  return Angle{std::atan(std::tan(trace.radians) * std::cos(azimuth.radians))};
}

}  // namespace mistnormal::geometry
