#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <vector>

#include "mistnormal/geometry.hpp"
#include "mistnormal/image.hpp"
#include "mistnormal/scene.hpp"

namespace mistnormal::wiping {

/// Effective contact window on the normal force.
struct ForceBand {
  double f_min_n = 3.0;
  double f_max_n = 8.0;

  void validate() const;
  bool contains(double f) const { return f >= f_min_n && f <= f_max_n; }
};

/// Linear spring against the true plane.
struct ContactModel {
  double stiffness_n_per_mm = 1.5;
  scene::PlaneTarget plane;
};

/// stiffness * penetration along the true normal; 0 out of contact.
double contact_force(const Eigen::Vector3d& tool_tip, const ContactModel& model);

enum class Command { Advance, Retreat, Hold };

std::string_view to_string(Command c);

/// Fixed-step adjustment keeping the force inside the band.
Command regulate_step(double force_n, const ForceBand& band, double step_size_mm);

/// Binary ink coverage on a millimetre grid in true-plane coordinates.
class InkMap {
 public:
  InkMap(Eigen::Vector2d origin_mm, double cell_mm, int cols, int rows);

  /// Painted stripe centered on the plane origin. Each column's top and
  /// bottom edge is displaced by a seeded Gaussian (clipped at 2 sigma).
  static InkMap painted_stripe(double length_mm, double height_mm, double cell_mm, double margin_mm,
                               double ragged_sigma_mm, std::uint64_t seed);

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  double cell_mm() const { return cell_mm_; }
  double cell_area_mm2() const { return cell_mm_ * cell_mm_; }
  Eigen::Vector2d cell_center(int col, int row) const;

  bool inked(int col, int row) const { return cells_.get(col, row); }
  void set(int col, int row, bool v) { cells_.set(col, row, v); }
  std::size_t count() const { return cells_.count(); }
  const Mask& cells() const { return cells_; }

  /// Clears every cell whose center lies in the axis-aligned square of side
  /// `size_mm` around `center_mm`; returns the number cleared.
  std::size_t clear_square(const Eigen::Vector2d& center_mm, double size_mm);

 private:
  Eigen::Vector2d origin_;
  double cell_mm_;
  int cols_;
  int rows_;
  Mask cells_;
};

/// Straight strokes between two plane points, expressed in the frame the
/// robot believes the plane has (the estimated normal).
struct WipePlan {
  Eigen::Vector2d start = Eigen::Vector2d(-75.0, 0.0);
  Eigen::Vector2d end = Eigen::Vector2d(75.0, 0.0);
  int reciprocations = 3;
  geometry::UnitVec3 stroke_normal = geometry::UnitVec3::normalized(Eigen::Vector3d::UnitX());
  double step_mm = 1.0;

  void validate() const;
};

struct WipeOptions {
  double tool_size_mm = 20.0;
  /// Start height above the estimated plane at the first stroke point.
  double approach_gap_mm = 0.0;
  double max_approach_mm = 60.0;
};

enum class WipeStatus { Ok, LostContact };

std::string_view to_string(WipeStatus s);

struct WipeStep {
  Eigen::Vector3d tool_tip = Eigen::Vector3d::Zero();
  double force_n = 0.0;
  Command command = Command::Hold;
  bool in_band = false;
  /// Inked cells remaining after this step.
  std::size_t ink_remaining = 0;
};

struct WipeSession {
  std::vector<WipeStep> steps;
  int approach_steps = 0;
  InkMap ink;
  double A_initial_mm2 = 0.0;
  std::size_t N_initial = 0;
  std::size_t N_final = 0;
  /// Inked cells under the footprint of the planned stroke, before and after.
  std::size_t swept_initial = 0;
  std::size_t swept_final = 0;
  WipeStatus status = WipeStatus::Ok;

  double alpha_percent() const;
  double swept_alpha_percent() const;
};

/// Runs the approach and 2 x reciprocations one-way strokes. Ink under the
/// tool clears only while the force is in band. Regulated sessions throw
/// LostContact when a whole stroke has no contact; unregulated sessions
/// report it in `status`.
WipeSession execute_wipe(const WipePlan& plan, const ContactModel& model, const ForceBand& band,
                         bool regulated, InkMap ink, const WipeOptions& options = {});

/// A_initial * N_final / N_initial. Throws ZeroInitialPixels.
double unwiped_area(double A_initial_mm2, std::size_t N_initial, std::size_t N_final);

/// (A_initial - A_unwiped) / A_initial * 100.
double wiped_fraction(double A_initial_mm2, double A_unwiped_mm2);

/// Reference wiping result of a person on the same task, in percent.
inline constexpr double kHumanReferenceAlphaPercent = 65.1;

}  // namespace mistnormal::wiping
