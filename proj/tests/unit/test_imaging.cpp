#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "generators.hpp"
#include "mistnormal/imaging.hpp"
#include "mistnormal/scene.hpp"

using namespace mistnormal;
using namespace mistnormal::imaging;
using geometry::Angle;
using geometry::ArcAxis;
using mistnormal::testing::cross_mask;
using mistnormal::testing::for_all;
using mistnormal::testing::Gen;

namespace {

scene::Scene make_scene(double az_deg, scene::SurfaceKind kind = scene::SurfaceKind::Glass, double el_deg = 0.0) {
  scene::PlaneTarget p;
  p.azimuth = Angle::from_degrees(az_deg);
  p.elevation = Angle::from_degrees(el_deg);
  p.surface_kind = kind;
  return {p, scene::spray_cross(p, {}, 2.5, 3), scene::Background::textureless(), {}};
}

CameraView view_at(const scene::Scene& s, double offset_deg, ArcAxis axis = ArcAxis::Azimuth,
                   Intrinsics k = {}) {
  const auto init = geometry::initial_camera_pose(s.plane.center, 100.0);
  return {geometry::arc_viewpoint(init, s.plane.center, Angle::from_degrees(offset_deg), axis), k};
}

Mask extract(const RenderedFrame& f, const scene::Scene& s, const CameraView& v) {
  const auto seed = seed_rect_around(project(v, s.plane.to_world(s.mist.center_on_plane)), 15,
                                     v.intrinsics.width, v.intrinsics.height);
  return extract_misted_area(f, seed);
}

// Independent truth: cast the pixel-center ray and test the two arm boxes.
bool oracle_in_mist(const scene::Scene& s, const CameraView& v, int x, int y, double* margin) {
  const auto& k = v.intrinsics;
  const Eigen::Vector3d d = v.pose.rotation * Eigen::Vector3d((x + 0.5 - k.cx) / k.focal_px,
                                                              (y + 0.5 - k.cy) / k.focal_px, 1.0);
  const Eigen::Vector3d n = s.plane.normal();
  const double t = n.dot(s.plane.center - v.pose.position) / n.dot(d);
  const Eigen::Vector2d q = s.plane.to_plane(v.pose.position + t * d);
  double best = -1e9;
  for (const Eigen::Vector2d& end : {s.mist.azimuth_arm_end, s.mist.elevation_arm_end}) {
    const Eigen::Vector2d along = end.normalized(), across(-along.y(), along.x());
    const double ea = end.norm() - std::abs(q.dot(along));
    const double ec = 0.5 * s.mist.arm_width_mm - std::abs(q.dot(across));
    best = std::max(best, std::min(ea, ec));
  }
  *margin = std::abs(best);
  return best > 0.0;
}

Intrinsics small_camera(int w, int h, double f) { return Intrinsics::centered(w, h, f); }

}  // namespace

TEST(Project, CenterMapsToPrincipalPoint) {
  const auto s = make_scene(0.0);
  const auto v = view_at(s, 0.0);
  const Eigen::Vector2d p = project(v, s.plane.center);
  EXPECT_NEAR(p.x(), 640.0, 1e-9);
  EXPECT_NEAR(p.y(), 360.0, 1e-9);
  // +y is image right, +z is image up.
  EXPECT_GT(project(v, Eigen::Vector3d(0, 10, 0)).x(), 640.0);
  EXPECT_LT(project(v, Eigen::Vector3d(0, 0, 10)).y(), 360.0);
}

TEST(RenderView, PerpendicularCrossIsCentered) {
  const auto s = make_scene(0.0);
  const auto f = render_view(s, view_at(s, 0.0), 0.0, {});
  double sx = 0, sy = 0;
  std::size_t n = 0;
  for (int y = 0; y < 720; ++y)
    for (int x = 0; x < 1280; ++x)
      if (f.truth_mask.get(x, y)) sx += x + 0.5, sy += y + 0.5, ++n;
  ASSERT_GT(n, 0u);
  EXPECT_NEAR(sx / n, 640.0, 1.0);
  EXPECT_NEAR(sy / n, 360.0, 1.0);
}

TEST(RenderView, TruthMatchesRayOracle) {
  for (double az : {-35.0, 0.0, 20.0}) {
    for (double off : {-25.0, 0.0, 12.0}) {
      const auto s = make_scene(az, scene::SurfaceKind::Mirror, 8.0);
      const auto v = view_at(s, off);
      const auto f = render_view(s, v, 0.0, {});
      Gen g(41);
      int checked = 0;
      for (int i = 0; i < 4000; ++i) {
        const int x = g.integer(0, 1279), y = g.integer(0, 719);
        double margin = 0;
        const bool in = oracle_in_mist(s, v, x, y, &margin);
        if (margin < 1e-6) continue;
        ++checked;
        EXPECT_EQ(f.truth_mask.get(x, y), in) << x << "," << y;
      }
      EXPECT_GT(checked, 3900);
    }
  }
}

TEST(RenderView, AppearanceLevels) {
  auto s = make_scene(0.0, scene::SurfaceKind::Mirror);
  const auto f = render_view(s, view_at(s, 0.0), 0.0, {});
  EXPECT_EQ(f.image.at(640, 360), 200);
  EXPECT_EQ(f.image.at(10, 10), 54);  // 60 * 0.9
  s.plane.surface_kind = scene::SurfaceKind::Glass;
  EXPECT_EQ(render_view(s, view_at(s, 0.0), 0.0, {}).image.at(10, 10), 55);  // 60 * 0.92
  // Half visibility blends halfway toward the backdrop.
  s.mist.onset_time_s = 6.0;
  s.mist.dry_time_s = 68.0;
  const auto half = render_view(s, view_at(s, 0.0), 37.0, {});
  EXPECT_EQ(half.image.at(640, 360), 128);
  EXPECT_DOUBLE_EQ(half.visibility, 0.5);
}

TEST(RenderView, ZeroVisibilityHasEmptyTruth) {
  auto s = make_scene(10.0);
  const auto f = render_view(s, view_at(s, 0.0), 500.0, {});
  EXPECT_EQ(f.truth_mask.count(), 0u);
  EXPECT_EQ(f.visibility, 0.0);
  try {
    extract(f, s, view_at(s, 0.0));
    ADD_FAILURE() << "expected NoForeground";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoForeground);
  }
}

TEST(RenderView, DeterministicForFixedSeed) {
  const auto s = make_scene(20.0);
  const auto v = view_at(s, 7.0);
  const NoiseModel n{2.0, 0.05, 99};
  const auto a = render_view(s, v, 1.0, n);
  const auto b = render_view(s, v, 1.0, n);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.truth_mask, b.truth_mask);
  const auto c = render_view(s, v, 1.0, NoiseModel{2.0, 0.05, 100});
  EXPECT_NE(a.image, c.image);
  EXPECT_EQ(a.truth_mask, c.truth_mask);
}

TEST(RenderView, DegenerateViews) {
  const auto s = make_scene(0.0);
  CameraView behind = view_at(s, 0.0);
  behind.pose.position = Eigen::Vector3d(-100, 0, 0);
  behind.pose.rotation.col(2) = Eigen::Vector3d(1, 0, 0);
  behind.pose.rotation.col(0) = Eigen::Vector3d(0, -1, 0);
  EXPECT_THROW(render_view(s, behind, 0.0, {}), Error);
  try {
    render_view(s, view_at(s, 90.0), 0.0, {});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateView);
  }
}

TEST(ExtractMistedArea, ZeroNoiseReproducesTruth) {
  for (auto kind : {scene::SurfaceKind::Mirror, scene::SurfaceKind::Glass}) {
    for (double az : {-40.0, -20.0, 0.0, 20.0, 40.0}) {
      for (double off : {-30.0, 0.0, 15.0}) {
        const auto s = make_scene(az, kind);
        const auto v = view_at(s, off);
        const auto f = render_view(s, v, 0.0, {});
        const Mask m = extract(f, s, v);
        EXPECT_EQ(m, f.truth_mask) << az << " " << off;
        EXPECT_EQ(f_score(m, f.truth_mask), 1.0);
      }
    }
  }
}

TEST(ExtractMistedArea, FScoreDropsWithJitter) {
  const auto s = make_scene(20.0);
  const auto v = view_at(s, 10.0);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    double prev = 2.0;
    for (double sigma : {0.0, 1.0, 2.0, 4.0}) {
      const auto f = render_view(s, v, 0.0, NoiseModel{sigma, 0.0, seed});
      const double score = f_score(extract(f, s, v), f.truth_mask);
      EXPECT_LT(score, prev) << "sigma " << sigma << " seed " << seed;
      prev = score;
    }
  }
}

TEST(ExtractMistedArea, LowContrastAndBadSeed) {
  auto s = make_scene(0.0);
  s.appearance.mist_gray = 62;
  const auto v = view_at(s, 0.0);
  const auto f = render_view(s, v, 0.0, {});
  EXPECT_THROW(extract(f, s, v), Error);
  EXPECT_THROW(extract_misted_area(f, PixelRect{1275, 0, 10, 10}), Error);
}

TEST(SeedRect, ClippedToImage) {
  const auto r = seed_rect_around({2.0, 700.0}, 15, 1280, 720);
  EXPECT_GE(r.x, 0);
  EXPECT_LE(r.y + r.height, 720);
  EXPECT_GT(r.width, 0);
  const auto c = seed_rect_around({640.0, 360.0}, 15, 1280, 720);
  EXPECT_EQ(c.width, 15);
  EXPECT_NEAR(c.x + 0.5 * c.width, 640.0, 0.5);
}

TEST(MeasureAxes, ConstructedCross) {
  const Intrinsics k = small_camera(640, 480, 1000.0);
  const Mask m = cross_mask(640, 480, 320.0, 240.0, 300.0, 200.0, 20.0, 0.0);
  const CameraView v{geometry::initial_camera_pose(Eigen::Vector3d::Zero(), 100.0), k};
  const auto obs = measure_axes(m, v, 100.0);
  EXPECT_NEAR(obs.azimuth_chord_px, 300.0, 1e-6);
  EXPECT_NEAR(obs.elevation_chord_px, 200.0, 1e-6);
  EXPECT_NEAR(obs.L_azimuth_mm, 30.0, 1e-6);
  EXPECT_NEAR(obs.L_elevation_mm, 20.0, 1e-6);
  EXPECT_NEAR(obs.major_axis.dot(obs.minor_axis), 0.0, 1e-6);
  EXPECT_NEAR(obs.centroid.x(), 320.0, 1e-9);
  EXPECT_EQ(obs.area_px, m.count());
}

TEST(MeasureAxes, RotationInvariance) {
  const Intrinsics k = small_camera(640, 480, 1000.0);
  const CameraView v{geometry::initial_camera_pose(Eigen::Vector3d::Zero(), 100.0), k};
  for (int i = 0; i < 36; ++i) {
    const double deg = 10.0 * i;
    const Mask m = cross_mask(640, 480, 320.3, 240.7, 300.0, 200.0, 20.0, deg);
    const auto obs = measure_axes(m, v, 100.0);
    const double hi = std::max(obs.azimuth_chord_px, obs.elevation_chord_px);
    const double lo = std::min(obs.azimuth_chord_px, obs.elevation_chord_px);
    EXPECT_NEAR(hi, 300.0, 1.0) << deg;
    EXPECT_NEAR(lo, 200.0, 1.0) << deg;
    EXPECT_NEAR(obs.major_axis.dot(obs.minor_axis), 0.0, 1e-6);
  }
}

TEST(MeasureAxes, IsotropicCrossUsesFourFoldMoment) {
  const Intrinsics k = small_camera(640, 480, 1000.0);
  const CameraView v{geometry::initial_camera_pose(Eigen::Vector3d::Zero(), 100.0), k};
  for (double deg : {0.0, 20.0, -35.0}) {
    const Mask m = cross_mask(640, 480, 320.0, 240.0, 200.0, 200.0, 16.0, deg);
    const auto obs = measure_axes(m, v, 100.0);
    EXPECT_NEAR(obs.azimuth_chord_px, 200.0, 1.0) << deg;
    EXPECT_NEAR(obs.elevation_chord_px, 200.0, 1.0) << deg;
  }
}

TEST(MeasureAxes, ContourIsSimpleAndEnclosesTheMask) {
  const Intrinsics k = small_camera(320, 240, 500.0);
  const CameraView v{geometry::initial_camera_pose(Eigen::Vector3d::Zero(), 100.0), k};
  const Mask m = cross_mask(320, 240, 160.0, 120.0, 150.0, 90.0, 12.0, 25.0);
  const auto obs = measure_axes(m, v, 100.0);
  ASSERT_GE(obs.contour.size(), 4u);
  std::set<std::pair<double, double>> seen;
  double area2 = 0.0;
  for (std::size_t i = 0; i < obs.contour.size(); ++i) {
    const auto& a = obs.contour[i];
    const auto& b = obs.contour[(i + 1) % obs.contour.size()];
    EXPECT_TRUE(seen.insert({a.x(), a.y()}).second) << "repeated vertex";
    area2 += a.x() * b.y() - b.x() * a.y();
    // Crack edges are axis-aligned.
    EXPECT_TRUE(a.x() == b.x() || a.y() == b.y());
  }
  EXPECT_DOUBLE_EQ(std::abs(area2) / 2.0, static_cast<double>(m.count()));
}

TEST(MeasureAxes, SinglePixelContour) {
  Mask m(5, 5);
  m.set(2, 3);
  const auto c = outer_contour(m);
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c.front(), Eigen::Vector2d(2, 3));
  EXPECT_TRUE(outer_contour(Mask(3, 3)).empty());
}

TEST(MeasureAxes, TooSmall) {
  const Intrinsics k = small_camera(64, 48, 100.0);
  const CameraView v{geometry::initial_camera_pose(Eigen::Vector3d::Zero(), 100.0), k};
  const Mask m = cross_mask(64, 48, 32, 24, 20, 10, 2, 0);
  try {
    measure_axes(m, v, 100.0);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaskTooSmall);
  }
}

TEST(ChordLength, OriginOutsideTheMask) {
  Mask m(50, 10);
  for (int x = 20; x < 30; ++x) m.set(x, 5);
  EXPECT_NEAR(chord_length_px(m, {5.0, 5.5}, {1.0, 0.0}), 10.0, 1e-6);
  EXPECT_NEAR(chord_length_px(m, {25.0, 5.5}, {1.0, 0.0}), 10.0, 1e-6);
  EXPECT_EQ(chord_length_px(m, {25.0, 1.5}, {1.0, 0.0}), 0.0);
}

TEST(Foreshortening, PerpendicularViewSeesTheLongestChord) {
  for (double az = -40.0; az <= 40.0; az += 10.0) {
    const auto s = make_scene(az);
    auto chord_at = [&](double off) {
      const auto v = view_at(s, off);
      const auto f = render_view(s, v, 0.0, {});
      return measure_axes(extract(f, s, v), v, 100.0).azimuth_chord_px;
    };
    const double perpendicular = chord_at(az);
    for (double off = -50.0; off <= 50.0; off += 5.0) {
      if (std::abs(off - az) > 60.0) continue;  // too close to edge-on
      EXPECT_GE(perpendicular, chord_at(off)) << "az " << az << " off " << off;
    }
  }
}

TEST(FScore, Examples) {
  Mask t(10, 1), p(10, 1);
  for (int x = 0; x < 10; ++x) t.set(x, 0);
  EXPECT_EQ(f_score(t, t), 1.0);
  for (int x = 0; x < 5; ++x) p.set(x, 0);
  EXPECT_DOUBLE_EQ(f_score(p, t), 2.0 / 3.0);
  Mask a(4, 1), b(4, 1);
  a.set(0, 0);
  b.set(3, 0);
  EXPECT_EQ(f_score(a, b), 0.0);
  EXPECT_THROW(f_score(a, Mask(4, 1)), Error);
  EXPECT_THROW(f_score(a, Mask(3, 1)), Error);
}

TEST(FScore, ExhaustiveThreeByThree) {
  for (int pi = 0; pi < 512; ++pi) {
    for (int ti = 1; ti < 512; ++ti) {
      Mask p(3, 3), t(3, 3);
      int tp = 0, fp = 0, fn = 0;
      for (int b = 0; b < 9; ++b) {
        const bool pb = (pi >> b) & 1, tb = (ti >> b) & 1;
        p.set(b % 3, b / 3, pb);
        t.set(b % 3, b / 3, tb);
        tp += pb && tb;
        fp += pb && !tb;
        fn += !pb && tb;
      }
      const double expected = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
      ASSERT_NEAR(f_score(p, t), expected, 1e-15) << pi << " " << ti;
    }
  }
}

TEST(NoiseModel, Validation) {
  EXPECT_THROW((NoiseModel{-1.0, 0.0, 0}.validate()), Error);
  EXPECT_THROW((NoiseModel{0.0, 1.0, 0}.validate()), Error);
  EXPECT_NO_THROW((NoiseModel{0.0, 0.99, 0}.validate()));
}
