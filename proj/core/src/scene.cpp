#include "mistnormal/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mistnormal::scene {

std::string_view to_string(SurfaceKind kind) {
  return kind == SurfaceKind::Mirror ? "mirror" : "glass";
}

SurfaceKind surface_kind_from_string(std::string_view name) {
  if (name == "mirror") return SurfaceKind::Mirror;
  if (name == "glass") return SurfaceKind::Glass;
  throw Error(ErrorKind::InvalidArgument, "unknown surface kind '" + std::string(name) + "'");
}

std::string_view to_string(BackgroundPlacement placement) {
  switch (placement) {
    case BackgroundPlacement::Reflected: return "reflected";
    case BackgroundPlacement::Transmitted: return "transmitted";
    case BackgroundPlacement::Textureless: return "textureless";
  }
  return "textureless";
}

void PlaneTarget::validate() const {
  require(geometry::is_tilt_angle(azimuth) && geometry::is_tilt_angle(elevation),
          "plane tilt must lie in (-90, 90) degrees");
  require(width_mm > 0.0 && height_mm > 0.0, "plane extent must be positive");
  require(thickness_mm > 0.0, "plane thickness must be positive");
}

Eigen::Vector3d PlaneTarget::normal() const {
  return geometry::normal_from_angles(azimuth, elevation).vec();
}

Eigen::Vector3d PlaneTarget::horizontal_axis() const {
  return Eigen::Vector3d(-std::sin(azimuth.radians), std::cos(azimuth.radians), 0.0);
}

Eigen::Vector3d PlaneTarget::vertical_axis() const {
  return normal().cross(horizontal_axis());
}

Eigen::Vector2d PlaneTarget::to_plane(const Eigen::Vector3d& world) const {
  const Eigen::Vector3d d = world - center;
  return {d.dot(horizontal_axis()), d.dot(vertical_axis())};
}

Eigen::Vector3d PlaneTarget::to_world(const Eigen::Vector2d& plane) const {
  return center + plane.x() * horizontal_axis() + plane.y() * vertical_axis();
}

double PlaneTarget::height_above(const Eigen::Vector3d& world) const {
  return normal().dot(world - center);
}

bool PlaneTarget::contains(const Eigen::Vector2d& p) const {
  return std::abs(p.x()) <= 0.5 * width_mm && std::abs(p.y()) <= 0.5 * height_mm;
}

void CrossMist::validate() const {
  require(arm_half_length_mm > 0.0, "arm half length must be positive");
  require(arm_width_mm > 0.0, "arm width must be positive");
  require(onset_time_s > 0.0 && onset_time_s <= dry_time_s, "need 0 < onset <= dry time");
}

double CrossMist::arm_length_mm(Arm arm) const {
  return 2.0 * (arm == Arm::Azimuth ? azimuth_arm_end : elevation_arm_end).norm();
}

namespace {

// Box centered at the origin with half extents (along, across) in the frame
// of `axis_end`; positive inside.
double box_signed_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& axis_end, double half_width) {
  const double half_length = axis_end.norm();
  const Eigen::Vector2d along = axis_end / half_length;
  const Eigen::Vector2d across(-along.y(), along.x());
  const double qa = std::abs(p.dot(along)) - half_length;
  const double qc = std::abs(p.dot(across)) - half_width;
  if (qa <= 0.0 && qc <= 0.0) return -std::max(qa, qc);
  const double oa = std::max(qa, 0.0);
  const double oc = std::max(qc, 0.0);
  return -std::sqrt(oa * oa + oc * oc);
}

}  // namespace

double CrossMist::signed_distance(const Eigen::Vector2d& plane_point) const {
  const Eigen::Vector2d p = plane_point - center_on_plane;
  const double hw = 0.5 * arm_width_mm;
  return std::max(box_signed_distance(p, azimuth_arm_end, hw),
                  box_signed_distance(p, elevation_arm_end, hw));
}

EvaporationTable::EvaporationTable(std::vector<std::pair<double, double>> entries)
    : entries_(std::move(entries)) {
  require(!entries_.empty(), "evaporation table needs at least one entry");
  std::sort(entries_.begin(), entries_.end());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    require(std::isfinite(entries_[i].first), "temperature must be finite");
    require(entries_[i].second > 0.0, "dry time must be positive");
    if (i > 0) {
      require(entries_[i].first > entries_[i - 1].first, "duplicate temperature in table");
      require(entries_[i].second <= entries_[i - 1].second,
              "dry time must not increase with temperature");
    }
  }
}

EvaporationTable EvaporationTable::measured_default() {
  return EvaporationTable({{20.0, 92.0}, {25.0, 74.0}, {30.0, 68.0}});
}

double dry_time_for_temperature(const EvaporationTable& table, double temperature_c) {
  const auto& e = table.entries();
  if (temperature_c <= e.front().first) return e.front().second;
  if (temperature_c >= e.back().first) return e.back().second;
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (temperature_c <= e[i].first) {
      const auto [t0, d0] = e[i - 1];
      const auto [t1, d1] = e[i];
      if (temperature_c == t1) return d1;
      const double f = (temperature_c - t0) / (t1 - t0);
      return d0 + f * (d1 - d0);
    }
  }
  return e.back().second;
}

double mist_visibility(const CrossMist& mist, double now_s) {
  require(now_s >= mist.spray_end_time_s, "visibility queried before the spray ended");
  const double elapsed = now_s - mist.spray_end_time_s;
  if (elapsed < mist.onset_time_s) return 1.0;
  if (elapsed >= mist.dry_time_s) return 0.0;
  const double v = 1.0 - (elapsed - mist.onset_time_s) / (mist.dry_time_s - mist.onset_time_s);
  return std::clamp(v, 0.0, 1.0);
}

void Background::validate() const {
  require(placement == BackgroundPlacement::Textureless || !image.empty(),
          "image backgrounds need a non-empty image");
  require(distance_mm > 0.0 && width_mm > 0.0, "backdrop geometry must be positive");
}

Background Background::textureless(std::uint8_t level) {
  Background b;
  b.placement = BackgroundPlacement::Textureless;
  b.level = level;
  return b;
}

Background Background::for_surface(SurfaceKind kind, Image image) {
  Background b;
  b.placement = kind == SurfaceKind::Mirror ? BackgroundPlacement::Reflected
                                            : BackgroundPlacement::Transmitted;
  b.image = std::move(image);
  b.validate();
  return b;
}

CrossMist spray_cross(const PlaneTarget& plane, const geometry::SprayGeometry& spray,
                      double per_arm_duration_s, int reciprocations, const SprayOptions& options) {
  plane.validate();
  spray.validate();
  require(per_arm_duration_s > 0.0, "spray duration must be positive");
  require(reciprocations >= 1, "need at least one reciprocation");

  const SprayLimits& lim = options.limits;
  if (spray.standoff_mm > lim.max_standoff_mm) {
    throw Error(ErrorKind::SprayOutOfRange, "standoff " + std::to_string(spray.standoff_mm) +
                                                " mm exceeds " + std::to_string(lim.max_standoff_mm) + " mm");
  }
  if (plane.thickness_mm > lim.max_thickness_mm) {
    throw Error(ErrorKind::SurfaceTooThick, "thickness " + std::to_string(plane.thickness_mm) +
                                                " mm exceeds " + std::to_string(lim.max_thickness_mm) + " mm");
  }
  if (per_arm_duration_s < lim.min_one_way_duration_s) {
    throw Error(ErrorKind::UnderDeposited, "one-way spray of " + std::to_string(per_arm_duration_s) +
                                               " s leaves no visible mist");
  }

  // The nozzle travels 2l along +-y and +-z at the initial standoff and
  // deposits where its axis (-x) meets the plane.
  const double l = spray.half_length_mm;
  const double ta = std::tan(plane.azimuth.radians);
  const double te = std::tan(plane.elevation.radians);
  const double ca = std::cos(plane.azimuth.radians);
  const double ce = std::cos(plane.elevation.radians);

  CrossMist mist;
  mist.center_on_plane = Eigen::Vector2d::Zero();
  mist.arm_half_length_mm = l;
  mist.arm_width_mm = options.arm_width_mm;
  mist.azimuth_arm_end = Eigen::Vector2d(l / ca, 0.0);
  mist.elevation_arm_end = Eigen::Vector2d(l * te * ta, l / ce);
  mist.deposited_s = {per_arm_duration_s * reciprocations, per_arm_duration_s * reciprocations};
  mist.spray_end_time_s = options.spray_end_time_s;
  mist.onset_time_s = options.onset_time_s;
  mist.dry_time_s = options.dry_time_s;
  mist.validate();
  return mist;
}

}  // namespace mistnormal::scene
