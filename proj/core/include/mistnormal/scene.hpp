#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "mistnormal/geometry.hpp"
#include "mistnormal/image.hpp"

namespace mistnormal::scene {

using geometry::Angle;

enum class SurfaceKind { Mirror, Glass };

std::string_view to_string(SurfaceKind kind);
SurfaceKind surface_kind_from_string(std::string_view name);

/// Flat target. Azimuth/elevation are the ground-truth tilt relative to the
/// initial optical axis; plane coordinates (s, t) run along the horizontal
/// in-plane axis and the in-plane axis closest to +z.
struct PlaneTarget {
  Angle azimuth;
  Angle elevation;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double width_mm = 300.0;
  double height_mm = 300.0;
  SurfaceKind surface_kind = SurfaceKind::Glass;
  double thickness_mm = 3.0;

  void validate() const;

  Eigen::Vector3d normal() const;
  Eigen::Vector3d horizontal_axis() const;
  Eigen::Vector3d vertical_axis() const;

  Eigen::Vector2d to_plane(const Eigen::Vector3d& world) const;
  Eigen::Vector3d to_world(const Eigen::Vector2d& plane) const;
  /// Signed distance of a world point in front of the plane (positive on the
  /// camera side).
  double height_above(const Eigen::Vector3d& world) const;
  bool contains(const Eigen::Vector2d& plane) const;
};

enum class Arm { Azimuth = 0, Elevation = 1 };

/// Cross-shaped condensation footprint in plane coordinates.
struct CrossMist {
  Eigen::Vector2d center_on_plane = Eigen::Vector2d::Zero();
  double arm_half_length_mm = 50.0;
  double arm_width_mm = 10.0;
  /// Far end of each arm relative to the center; the arm runs from -end to +end.
  Eigen::Vector2d azimuth_arm_end = Eigen::Vector2d(50.0, 0.0);
  Eigen::Vector2d elevation_arm_end = Eigen::Vector2d(0.0, 50.0);
  std::array<double, 2> deposited_s{0.0, 0.0};
  double spray_end_time_s = 0.0;
  double onset_time_s = 6.0;
  double dry_time_s = 81.2;

  void validate() const;

  double arm_length_mm(Arm arm) const;
  /// Positive inside the cross, in millimetres on the plane.
  double signed_distance(const Eigen::Vector2d& plane_point) const;
};

/// Room temperature to time until the mist is fully dry.
class EvaporationTable {
 public:
  /// Throws InvalidArgument unless non-empty, dry times positive and
  /// non-increasing with temperature.
  explicit EvaporationTable(std::vector<std::pair<double, double>> entries);

  /// 20/25/30 C -> 92/74/68 s.
  static EvaporationTable measured_default();

  const std::vector<std::pair<double, double>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<double, double>> entries_;
};

/// Piecewise-linear in temperature, clamped at the table ends.
double dry_time_for_temperature(const EvaporationTable& table, double temperature_c);

/// 1 until onset, linear to 0 at dry time, 0 afterwards.
double mist_visibility(const CrossMist& mist, double now_s);

enum class BackgroundPlacement { Reflected, Transmitted, Textureless };

std::string_view to_string(BackgroundPlacement placement);

/// What the camera sees through (glass) or in (mirror) the target. Image
/// backgrounds hang on a backdrop plane parallel to the initial image plane.
struct Background {
  BackgroundPlacement placement = BackgroundPlacement::Textureless;
  Image image;
  std::uint8_t level = 60;
  double distance_mm = 500.0;
  double width_mm = 1200.0;

  void validate() const;

  static Background textureless(std::uint8_t level = 60);
  /// Reflected for mirrors, transmitted for glass.
  static Background for_surface(SurfaceKind kind, Image image);
};

struct Appearance {
  std::uint8_t mist_gray = 200;
  double mirror_reflectance = 0.9;
  double glass_transmittance = 0.92;
};

struct SprayLimits {
  double max_standoff_mm = 100.0;
  double max_thickness_mm = 3.0;
  double min_one_way_duration_s = 2.0;
};

struct SprayOptions {
  double arm_width_mm = 10.0;
  double onset_time_s = 6.0;
  double dry_time_s = 81.2;
  double spray_end_time_s = 0.0;
  SprayLimits limits;
};

/// Sprays a cross with a trajectory parallel to the initial image plane.
/// Failure precedence: SprayOutOfRange, SurfaceTooThick, UnderDeposited.
CrossMist spray_cross(const PlaneTarget& plane, const geometry::SprayGeometry& spray,
                      double per_arm_duration_s, int reciprocations,
                      const SprayOptions& options = {});

/// Immutable world snapshot.
struct Scene {
  PlaneTarget plane;
  CrossMist mist;
  Background background;
  Appearance appearance;
};

}  // namespace mistnormal::scene
