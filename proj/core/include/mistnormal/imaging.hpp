#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "mistnormal/geometry.hpp"
#include "mistnormal/image.hpp"
#include "mistnormal/scene.hpp"

namespace mistnormal::imaging {

/// Pinhole intrinsics. Pixel (x, y) covers [x, x+1) x [y, y+1); the
/// principal point is in the same continuous coordinates.
struct Intrinsics {
  int width = 1280;
  int height = 720;
  double focal_px = 600.0;
  double cx = 640.0;
  double cy = 360.0;

  void validate() const;
  /// Centered principal point for a given resolution.
  static Intrinsics centered(int width, int height, double focal_px);
};

struct CameraView {
  geometry::CameraPose pose;
  Intrinsics intrinsics;
};

/// Projects a world point to continuous pixel coordinates. The point must be
/// in front of the camera.
Eigen::Vector2d project(const CameraView& view, const Eigen::Vector3d& world);

/// Appearance noise applied to the rendered mist.
///
/// boundary_jitter_sigma_px displaces the mist boundary by a smooth Gaussian
/// field (lattice spacing jitter_cell_px); dropout_rate blanks individual
/// mist pixels. Both draw from `seed` only.
struct NoiseModel {
  double boundary_jitter_sigma_px = 0.0;
  double dropout_rate = 0.0;
  std::uint64_t seed = 0;
  double jitter_cell_px = 8.0;

  void validate() const;
};

struct RenderedFrame {
  Image image;
  Mask truth_mask;
  double timestamp_s = 0.0;
  double visibility = 1.0;
};

/// Renders the scene as seen from `view` at time `now_s`.
/// Throws DegenerateView when the camera sees the plane edge-on or from behind.
RenderedFrame render_view(const scene::Scene& scene, const CameraView& view, double now_s,
                          const NoiseModel& noise);

struct PixelRect {
  int x = 0;
  int y = 0;
  int width = 1;
  int height = 1;
};

/// Square seed rectangle of side `size` centered on a continuous pixel point,
/// clipped to the image.
PixelRect seed_rect_around(const Eigen::Vector2d& center, int size, int image_width, int image_height);

struct SegmenterOptions {
  /// Minimum colour distance between the seed and border models.
  double min_contrast = 12.0;
  /// Pixels this close to the seed model (as a fraction of the contrast)
  /// qualify regardless of texture.
  double tight_fraction = 0.25;
  /// Otherwise the 3x3 luma standard deviation must stay below this.
  double max_local_std = 4.0;
};

/// Deterministic foreground extraction: a seed colour model from the seed
/// rectangle, a background model from the image border, and 4-connected
/// growth through pixels nearer the seed model that are either close to it
/// or locally flat. Throws NoForeground.
Mask extract_misted_area(const RenderedFrame& frame, const PixelRect& seed_rect,
                         const SegmenterOptions& options = {});

struct MistObservation {
  /// Outer boundary as a closed polygon of pixel-corner vertices.
  std::vector<Eigen::Vector2d> contour;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  Eigen::Vector2d major_axis = Eigen::Vector2d::UnitX();
  Eigen::Vector2d minor_axis = Eigen::Vector2d::UnitY();
  /// Direction of the arm closer to the image horizontal, and of the other
  /// arm. Each is fitted separately, so they need not be perpendicular.
  Eigen::Vector2d azimuth_axis = Eigen::Vector2d::UnitX();
  Eigen::Vector2d elevation_axis = Eigen::Vector2d::UnitY();
  /// Intersection of the two arm lines; the chords run through it.
  Eigen::Vector2d crossing = Eigen::Vector2d::Zero();
  double azimuth_chord_px = 0.0;
  double elevation_chord_px = 0.0;
  double L_azimuth_mm = 0.0;
  double L_elevation_mm = 0.0;
  std::size_t area_px = 0;
  int viewpoint_index = -1;
};

struct MeasureOptions {
  std::size_t min_area_px = 100;
  /// Relative eigenvalue gap below which the second moments cannot orient
  /// the cross and the four-fold moment is used instead.
  double isotropy_tolerance = 0.05;
};

/// Fits a line to each arm, intersects each with the mask boundary
/// and converts the chords to millimetres at `plane_distance_mm`.
/// Throws MaskTooSmall.
MistObservation measure_axes(const Mask& mask, const CameraView& view, double plane_distance_mm,
                             const MeasureOptions& options = {});

/// Distance between the extreme boundary crossings of the line through
/// `origin` along `direction`, in pixels.
double chord_length_px(const Mask& mask, const Eigen::Vector2d& origin, const Eigen::Vector2d& direction);

/// Outer boundary of the 4-connected component containing the first set
/// pixel in raster order; empty for an empty mask.
std::vector<Eigen::Vector2d> outer_contour(const Mask& mask);

/// Harmonic mean of precision and recall. Throws EmptyTruth.
double f_score(const Mask& predicted, const Mask& truth);

}  // namespace mistnormal::imaging
