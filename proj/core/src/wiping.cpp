#include "mistnormal/wiping.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace mistnormal::wiping {

using Eigen::Vector2d;
using Eigen::Vector3d;

void ForceBand::validate() const {
  require(f_min_n > 0.0 && f_min_n < f_max_n, "force band needs 0 < f_min < f_max");
}

double contact_force(const Vector3d& tool_tip, const ContactModel& model) {
  require(model.stiffness_n_per_mm > 0.0, "stiffness must be positive");
  const double penetration = -model.plane.height_above(tool_tip);
  return penetration > 0.0 ? model.stiffness_n_per_mm * penetration : 0.0;
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Advance: return "advance";
    case Command::Retreat: return "retreat";
    case Command::Hold: return "hold";
  }
  return "hold";
}

Command regulate_step(double force_n, const ForceBand& band, double step_size_mm) {
  require(step_size_mm > 0.0, "step size must be positive");
  if (force_n < band.f_min_n) return Command::Advance;
  if (force_n > band.f_max_n) return Command::Retreat;
  return Command::Hold;
}

InkMap::InkMap(Vector2d origin_mm, double cell_mm, int cols, int rows)
    : origin_(origin_mm), cell_mm_(cell_mm), cols_(cols), rows_(rows), cells_(cols, rows) {
  require(cell_mm > 0.0 && cols > 0 && rows > 0, "ink grid must be non-empty");
}

InkMap InkMap::painted_stripe(double length_mm, double height_mm, double cell_mm, double margin_mm,
                              double ragged_sigma_mm, std::uint64_t seed) {
  require(length_mm > 0.0 && height_mm > 0.0 && margin_mm >= 0.0, "stripe must have positive size");
  require(ragged_sigma_mm >= 0.0, "ragged sigma must be non-negative");
  const int cols = static_cast<int>(std::ceil((length_mm + 2.0 * margin_mm) / cell_mm));
  const int rows = static_cast<int>(std::ceil((height_mm + 2.0 * margin_mm) / cell_mm));
  InkMap map(Vector2d(-0.5 * cols * cell_mm, -0.5 * rows * cell_mm), cell_mm, cols, rows);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto edge_offset = [&] {
    const double v = ragged_sigma_mm * normal(rng);
    return std::clamp(v, -2.0 * ragged_sigma_mm, 2.0 * ragged_sigma_mm);
  };
  for (int c = 0; c < cols; ++c) {
    const double top = 0.5 * height_mm + edge_offset();
    const double bottom = -0.5 * height_mm + edge_offset();
    for (int r = 0; r < rows; ++r) {
      const Vector2d p = map.cell_center(c, r);
      if (std::abs(p.x()) <= 0.5 * length_mm && p.y() <= top && p.y() >= bottom) map.set(c, r, true);
    }
  }
  return map;
}

Vector2d InkMap::cell_center(int col, int row) const {
  return origin_ + cell_mm_ * Vector2d(col + 0.5, row + 0.5);
}

std::size_t InkMap::clear_square(const Vector2d& center_mm, double size_mm) {
  const double half = 0.5 * size_mm;
  const int c0 = std::max(0, static_cast<int>(std::floor((center_mm.x() - half - origin_.x()) / cell_mm_)));
  const int c1 = std::min(cols_ - 1, static_cast<int>(std::floor((center_mm.x() + half - origin_.x()) / cell_mm_)));
  const int r0 = std::max(0, static_cast<int>(std::floor((center_mm.y() - half - origin_.y()) / cell_mm_)));
  const int r1 = std::min(rows_ - 1, static_cast<int>(std::floor((center_mm.y() + half - origin_.y()) / cell_mm_)));
  std::size_t cleared = 0;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (!cells_.get(c, r)) continue;
      const Vector2d p = cell_center(c, r);
      if (std::abs(p.x() - center_mm.x()) <= half && std::abs(p.y() - center_mm.y()) <= half) {
        cells_.set(c, r, false);
        ++cleared;
      }
    }
  }
  return cleared;
}

void WipePlan::validate() const {
  require((end - start).norm() > 0.0, "stroke start and end must differ");
  require(reciprocations >= 1, "need at least one reciprocation");
  require(step_mm > 0.0, "step must be positive");
}

std::string_view to_string(WipeStatus s) { return s == WipeStatus::Ok ? "ok" : "LostContact"; }

double WipeSession::alpha_percent() const {
  return wiped_fraction(A_initial_mm2, unwiped_area(A_initial_mm2, N_initial, N_final));
}

double WipeSession::swept_alpha_percent() const {
  if (swept_initial == 0) return 0.0;
  return 100.0 * static_cast<double>(swept_initial - swept_final) / static_cast<double>(swept_initial);
}

namespace {

// Inked cells whose centers fall under the footprint swept along the
// planned stroke in true-plane coordinates.
std::size_t count_swept(const InkMap& ink, const Vector2d& a, const Vector2d& b, double tool_mm) {
  const Vector2d dir = (b - a).normalized();
  const Vector2d across(-dir.y(), dir.x());
  const double len = (b - a).norm();
  const double half = 0.5 * tool_mm;
  std::size_t n = 0;
  for (int r = 0; r < ink.rows(); ++r) {
    for (int c = 0; c < ink.cols(); ++c) {
      if (!ink.inked(c, r)) continue;
      const Vector2d p = ink.cell_center(c, r) - a;
      const double along = p.dot(dir);
      if (along >= -half && along <= len + half && std::abs(p.dot(across)) <= half) ++n;
    }
  }
  return n;
}

}  // namespace

WipeSession execute_wipe(const WipePlan& plan, const ContactModel& model, const ForceBand& band, bool regulated,
                         InkMap ink, const WipeOptions& options) {
  plan.validate();
  band.validate();
  model.plane.validate();
  require(options.tool_size_mm > 0.0, "tool size must be positive");
  require(model.plane.contains(plan.start) && model.plane.contains(plan.end),
          "stroke must lie within the plane extent");

  // The robot's idea of the plane: the anchor it sprayed plus the estimate.
  const Vector3d n_est = plan.stroke_normal.vec();
  Vector3d u_est = Vector3d::UnitZ().cross(n_est);
  if (u_est.norm() < 1e-9) u_est = Vector3d::UnitY();
  u_est.normalize();
  const Vector3d w_est = n_est.cross(u_est);
  const Vector3d& c = model.plane.center;
  auto stroke_point = [&](const Vector2d& p, double height) {
    return c + p.x() * u_est + p.y() * w_est + height * n_est;
  };

  WipeSession session{.steps = {}, .approach_steps = 0, .ink = std::move(ink)};
  session.N_initial = session.ink.count();
  session.A_initial_mm2 = static_cast<double>(session.N_initial) * session.ink.cell_area_mm2();
  session.swept_initial = count_swept(session.ink, plan.start, plan.end, options.tool_size_mm);

  auto finish = [&] {
    session.N_final = session.ink.count();
    session.swept_final = count_swept(session.ink, plan.start, plan.end, options.tool_size_mm);
    return session;
  };

  auto wipe_at = [&](const Vector3d& tip, double force) {
    if (band.contains(force)) session.ink.clear_square(model.plane.to_plane(tip), options.tool_size_mm);
  };

  const double step = plan.step_mm;
  double height = options.approach_gap_mm;
  Vector3d tip = stroke_point(plan.start, height);
  double force = contact_force(tip, model);
  while (force < band.f_min_n) {
    if (session.approach_steps * step > options.max_approach_mm) {
      if (regulated) throw Error(ErrorKind::LostContact, "no contact within the approach range");
      session.status = WipeStatus::LostContact;
      return finish();
    }
    height -= step;
    ++session.approach_steps;
    tip = stroke_point(plan.start, height);
    force = contact_force(tip, model);
  }
  wipe_at(tip, force);

  for (int stroke = 0; stroke < 2 * plan.reciprocations; ++stroke) {
    const Vector2d from = stroke % 2 == 0 ? plan.start : plan.end;
    const Vector2d to = stroke % 2 == 0 ? plan.end : plan.start;
    const int n = std::max(1, static_cast<int>(std::ceil((to - from).norm() / step - 1e-9)));
    bool touched = false;
    for (int j = 1; j <= n; ++j) {
      const Vector2d p = from + (to - from) * (static_cast<double>(j) / n);
      WipeStep rec;
      tip = stroke_point(p, height);
      force = contact_force(tip, model);
      if (regulated) {
        rec.command = regulate_step(force, band, step);
        if (rec.command == Command::Advance) height -= step;
        if (rec.command == Command::Retreat) height += step;
        if (rec.command != Command::Hold) {
          tip = stroke_point(p, height);
          force = contact_force(tip, model);
        }
      }
      rec.tool_tip = tip;
      rec.force_n = force;
      rec.in_band = band.contains(force);
      touched = touched || force > 0.0;
      wipe_at(tip, force);
      rec.ink_remaining = session.ink.count();
      session.steps.push_back(rec);
    }
    if (!touched) {
      if (regulated) throw Error(ErrorKind::LostContact, "no contact for a full stroke");
      session.status = WipeStatus::LostContact;
    }
  }
  return finish();
}

double unwiped_area(double A_initial_mm2, std::size_t N_initial, std::size_t N_final) {
  if (N_initial == 0) throw Error(ErrorKind::ZeroInitialPixels, "no inked pixels before wiping");
  require(N_final <= N_initial, "final ink count exceeds the initial count");
  require(A_initial_mm2 > 0.0, "initial area must be positive");
  return A_initial_mm2 * static_cast<double>(N_final) / static_cast<double>(N_initial);
}

double wiped_fraction(double A_initial_mm2, double A_unwiped_mm2) {
  require(A_initial_mm2 > 0.0, "initial area must be positive");
  require(A_unwiped_mm2 >= 0.0 && A_unwiped_mm2 <= A_initial_mm2, "unwiped area must lie in [0, A_initial]");
  return (A_initial_mm2 - A_unwiped_mm2) / A_initial_mm2 * 100.0;
}

}  // namespace mistnormal::wiping
