#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "generators.hpp"
#include "mistnormal/estimator.hpp"

using namespace mistnormal;
using namespace mistnormal::estimator;
using mistnormal::testing::for_all;
using mistnormal::testing::Gen;

namespace {

scene::Scene make_scene(double az_deg, double el_deg = 0.0, const geometry::SprayGeometry& g = {}) {
  scene::PlaneTarget p;
  p.azimuth = Angle::from_degrees(az_deg);
  p.elevation = Angle::from_degrees(el_deg);
  return {p, scene::spray_cross(p, g, 2.5, 3), scene::Background::textureless(), {}};
}

std::vector<Angle> offsets_deg(std::initializer_list<double> v) {
  std::vector<Angle> out;
  for (double d : v) out.push_back(Angle::from_degrees(d));
  return out;
}

std::optional<ErrorKind> kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST(PlanSweep, DefaultGeometry) {
  const auto plan = plan_sweep({}, Angle::from_degrees(1.0));
  ASSERT_EQ(plan.offsets.size(), 61u);
  EXPECT_NEAR(plan.offsets.front().degrees(), -30.0, 1e-12);
  EXPECT_NEAR(plan.offsets.back().degrees(), 30.0, 1e-12);
  EXPECT_NEAR(plan.offsets[30].degrees(), 0.0, 1e-12);
  EXPECT_NEAR(plan.traverse_time_s(), 2.0943951023931957, 1e-12);
}

TEST(PlanSweep, SlowWristExceedsBudget) {
  geometry::SprayGeometry g;
  g.wrist_speed_mm_s = 17.0;
  EXPECT_EQ(kind_of([&] { plan_sweep(g, Angle::from_degrees(1.0)); }), ErrorKind::BudgetExceeded);
  g.wrist_speed_mm_s = 17.5;
  EXPECT_NO_THROW(plan_sweep(g, Angle::from_degrees(1.0)));
}

TEST(PlanSweep, InvalidPlans) {
  EXPECT_THROW(plan_sweep({}, Angle::from_degrees(0.0)), Error);
  EXPECT_THROW(plan_sweep({}, Angle::from_degrees(40.0)), Error);
  SweepPlan p = plan_sweep({}, Angle::from_degrees(10.0));
  std::swap(p.offsets[0], p.offsets[1]);
  EXPECT_THROW(p.validate(), Error);
}

TEST(SelectArgmax, UniqueMaximum) {
  const auto off = offsets_deg({-2, -1, 0, 1, 2});
  EXPECT_EQ(select_argmax(std::vector<double>{1, 2, 5, 3, 1}, off), 2);
  EXPECT_EQ(select_argmax(std::vector<double>{1, 2, 3, 4, 5}, off), 4);
}

TEST(SelectArgmax, TieRules) {
  const auto off = offsets_deg({-2, -1, 0, 1, 2});
  // Separated ties resolve to the median tied viewpoint.
  EXPECT_EQ(select_argmax(std::vector<double>{1, 5, 2, 5, 1}, off), 1);
  // An even number of separated ties takes the middle pair's preferred member.
  const auto wide = offsets_deg({-4, -3, -2, -1, 0, 1, 2, 3, 4});
  EXPECT_EQ(select_argmax(std::vector<double>{1, 1, 5, 1, 1, 5, 1, 5, 1}, wide), 5);
  EXPECT_EQ(select_argmax(std::vector<double>{1, 1, 1, 5, 1, 5, 1, 1, 1}, wide), 3);
  // A contiguous plateau resolves to its middle.
  EXPECT_EQ(select_argmax(std::vector<double>{1, 5, 5, 5, 1}, off), 2);
  // Even plateau: the middle pair, nearer zero.
  EXPECT_EQ(select_argmax(std::vector<double>{5, 5, 5, 5, 1}, off), 0);
  EXPECT_EQ(select_argmax(std::vector<double>{1, 1, 5, 5, 1}, off), 2);
  // Touching a boundary wins.
  EXPECT_EQ(select_argmax(std::vector<double>{1, 1, 5, 2, 5}, off), 4);
  EXPECT_EQ(select_argmax(std::vector<double>{1, 2, 5, 5, 5}, off), 4);
  EXPECT_EQ(select_argmax(std::vector<double>{5, 5, 1, 2, 3}, off), 0);
  // Both ends tied: the negative end.
  EXPECT_EQ(select_argmax(std::vector<double>{5, 1, 1, 1, 5}, off), 0);
  EXPECT_THROW(select_argmax(std::vector<double>{}, std::vector<Angle>{}), Error);
  EXPECT_THROW(select_argmax(std::vector<double>{1, 2}, off), Error);
}

TEST(SelectArgmax, ScalingInvariance) {
  const auto off = plan_sweep({}, Angle::from_degrees(1.0)).offsets;
  for_all(500, 11, [&](Gen& g, int) {
    std::vector<double> L(off.size());
    for (auto& v : L) v = std::round(g.uniform(90.0, 120.0) * 4.0) / 4.0;  // frequent ties
    const int base = select_argmax(L, off);
    EXPECT_EQ(select_argmax(L, off), base);
    for (double k : {0.25, 3.0, 1e3}) {
      std::vector<double> s(L);
      for (auto& v : s) v *= k;
      EXPECT_EQ(select_argmax(s, off), base) << k;
    }
  });
}

TEST(ResolveSign, Examples) {
  const geometry::AngleCandidates c{Angle::from_degrees(20.0), Angle::from_degrees(-20.0)};
  EXPECT_EQ(resolve_sign(c, Angle::from_degrees(20.0)).degrees(), 20.0);
  EXPECT_EQ(resolve_sign(c, Angle::from_degrees(-20.0)).degrees(), -20.0);
  EXPECT_EQ(resolve_sign({Angle{0.0}, Angle{0.0}}, Angle{0.0}).degrees(), 0.0);
}

TEST(Rmse, Examples) {
  EXPECT_EQ(rmse(offsets_deg({0, 0, 0})), 0.0);
  EXPECT_NEAR(rmse(offsets_deg({3, 4})), 3.5355339059327378, 1e-12);
  EXPECT_NEAR(rmse(std::vector<Angle>(9, Angle::from_degrees(4.2))), 4.2, 1e-12);
  EXPECT_EQ(kind_of([] { rmse(std::vector<Angle>{}); }), ErrorKind::EmptyInput);
}

TEST(FrameSeed, DistinctPerAxisAndIndex) {
  EXPECT_EQ(frame_seed(5, ArcAxis::Azimuth, 3), frame_seed(5, ArcAxis::Azimuth, 3));
  EXPECT_NE(frame_seed(5, ArcAxis::Azimuth, 3), frame_seed(5, ArcAxis::Elevation, 3));
  EXPECT_NE(frame_seed(5, ArcAxis::Azimuth, 3), frame_seed(5, ArcAxis::Azimuth, 4));
  EXPECT_NE(frame_seed(5, ArcAxis::Azimuth, 3), frame_seed(6, ArcAxis::Azimuth, 3));
}

TEST(SweepAndEstimate, ZeroNoiseAzimuth) {
  // The wide arc keeps the +-40 degree targets inside the sweep.
  geometry::SprayGeometry g;
  g.sweep_angle = Angle::from_degrees(90.0);
  const auto plan = plan_sweep(g, Angle::from_degrees(1.0));
  for (double az : {-40.0, -20.0, -10.0, 0.0, 10.0, 20.0, 40.0}) {
    const auto r = sweep_and_estimate(make_scene(az, 0.0, g), plan, std::nullopt, {});
    EXPECT_LE(std::abs(r.theta_hat.degrees() - az), 0.6) << az;
    EXPECT_FALSE(r.span_saturated()) << az;
    ASSERT_TRUE(r.azimuth.closed_form_angle.has_value());
    EXPECT_LE(std::abs(r.azimuth.closed_form_angle->degrees() - az), 1.0) << az;
    EXPECT_EQ(r.azimuth.samples.size(), plan.offsets.size());
    EXPECT_LT(r.time_spent_s, g.completion_budget_s);
  }
}

TEST(SweepAndEstimate, ZeroNoiseWithElevation) {
  const auto az = plan_sweep({}, Angle::from_degrees(1.0), ArcAxis::Azimuth);
  const auto el = plan_sweep({}, Angle::from_degrees(1.0), ArcAxis::Elevation);
  const auto r = sweep_and_estimate(make_scene(15.0, 10.0), az, el, {});
  EXPECT_NEAR(r.theta_hat.degrees(), 15.0, 0.6);
  EXPECT_NEAR(r.phi_hat.degrees(), 10.0, 0.7);
  EXPECT_NEAR(r.time_spent_s, 2.0 * az.traverse_time_s(), 1e-9);
  ASSERT_TRUE(r.elevation.has_value());
  const Eigen::Vector3d n = geometry::normal_from_angles(r.theta_hat, r.phi_hat).vec();
  EXPECT_NEAR(r.normal.vec().dot(n), 1.0, 1e-12);
  // Timestamps follow the shared clock.
  EXPECT_GT(r.elevation->samples.front().timestamp_s, r.azimuth.samples.back().timestamp_s - 1e-9);
}

TEST(SweepAndEstimate, NarrowSpanSaturates) {
  geometry::SprayGeometry g;
  g.sweep_angle = Angle::from_degrees(30.0);
  const auto plan = plan_sweep(g, Angle::from_degrees(1.0));
  const auto r = sweep_and_estimate(make_scene(20.0, 0.0, g), plan, std::nullopt, {});
  EXPECT_TRUE(r.span_saturated());
  EXPECT_EQ(r.azimuth.argmax_index, static_cast<int>(plan.offsets.size()) - 1);
  EXPECT_NEAR(r.theta_hat.degrees(), 15.0, 1e-9);
}

TEST(SweepAndEstimate, BudgetHonesty) {
  geometry::SprayGeometry g;
  g.wrist_speed_mm_s = 20.0;  // one arc fits, two do not
  const auto az = plan_sweep(g, Angle::from_degrees(5.0), ArcAxis::Azimuth);
  const auto el = plan_sweep(g, Angle::from_degrees(5.0), ArcAxis::Elevation);
  const auto s = make_scene(0.0, 0.0, g);
  const auto r = sweep_and_estimate(s, az, std::nullopt, {});
  EXPECT_LT(r.time_spent_s, g.completion_budget_s);
  EXPECT_EQ(kind_of([&] { sweep_and_estimate(s, az, el, {}); }), ErrorKind::BudgetExceeded);
}

TEST(SweepAndEstimate, MistEvaporatesMidSweep) {
  auto s = make_scene(0.0);
  // Visibility drops from 1 to 0 between two captures.
  s.mist.onset_time_s = 1.0;
  s.mist.dry_time_s = 1.001;
  const auto plan = plan_sweep({}, Angle::from_degrees(2.0));
  EXPECT_EQ(kind_of([&] { sweep_and_estimate(s, plan, std::nullopt, {}); }), ErrorKind::MistEvaporated);
}

TEST(SweepAndEstimate, Deterministic) {
  const auto plan = plan_sweep({}, Angle::from_degrees(2.0));
  const auto s = make_scene(12.0);
  const imaging::NoiseModel n{2.0, 0.0, 4242};
  const auto a = sweep_and_estimate(s, plan, std::nullopt, n);
  const auto b = sweep_and_estimate(s, plan, std::nullopt, n);
  ASSERT_EQ(a.azimuth.samples.size(), b.azimuth.samples.size());
  for (std::size_t i = 0; i < a.azimuth.samples.size(); ++i)
    EXPECT_EQ(a.azimuth.samples[i].L_mm, b.azimuth.samples[i].L_mm);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
}

TEST(SweepAndEstimate, RejectsMismatchedPlans) {
  const auto az = plan_sweep({}, Angle::from_degrees(5.0), ArcAxis::Azimuth);
  EXPECT_THROW(sweep_and_estimate(make_scene(0.0), az, az, {}), Error);
}

// Fifty seeded trials per noise level over three tilt angles.
TEST(SweepAndEstimateSlow, RmseGrowsWithBoundaryJitter) {
  const auto plan = plan_sweep({}, Angle::from_degrees(1.0));
  const double truths[] = {-20.0, 0.0, 20.0};
  double previous = -1.0;
  for (double sigma : {0.0, 1.0, 2.0, 4.0}) {
    std::vector<Angle> errors;
    for (int t = 0; t < 50; ++t) {
      const double truth = truths[t % 3];
      const imaging::NoiseModel n{sigma, 0.0, 1000003ull * (t + 1)};
      const auto r = sweep_and_estimate(make_scene(truth), plan, std::nullopt, n);
      errors.push_back(r.theta_hat - Angle::from_degrees(truth));
    }
    const double e = rmse(errors);
    EXPECT_GE(e, previous) << "sigma " << sigma;
    previous = e;
  }
}
