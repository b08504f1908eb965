#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mistnormal/geometry.hpp"
#include "mistnormal/imaging.hpp"
#include "mistnormal/scene.hpp"

namespace mistnormal::harness {

struct SprayConfig {
  geometry::SprayGeometry geometry;
  double per_arm_duration_s = 2.5;
  int reciprocations = 3;
  double arm_width_mm = 10.0;
  double onset_time_s = 6.0;
  /// Overrides the temperature table when set.
  std::optional<double> dry_time_s;
};

struct SweepConfig {
  double step_deg = 1.0;
  bool estimate_elevation = false;
  int seed_size_px = 15;
};

struct BackgroundConfig {
  /// "textureless" or "image" (uses the first entry of `images`).
  std::string kind = "textureless";
  int level = 60;
  std::vector<std::string> images;
  double distance_mm = 500.0;
  double width_mm = 1200.0;
};

struct WipingConfig {
  double plane_azimuth_deg = 0.0;
  double estimation_error_deg = 5.8;
  bool regulated = true;
  int sessions = 3;
  double stiffness_n_per_mm = 1.5;
  double f_min_n = 3.0;
  double f_max_n = 8.0;
  double step_mm = 1.0;
  double tool_size_mm = 20.0;
  double stroke_length_mm = 150.0;
  double paint_length_mm = 150.0;
  double paint_height_mm = 33.3;
  double ragged_sigma_mm = 0.8;
  int reciprocations = 3;
  /// The tool starts a uniform [0, max] gap above the estimated plane.
  double max_start_gap_mm = 2.0;
};

struct TimingConfig {
  std::vector<double> spray_durations_s{1.0, 1.5, 2.0, 2.5, 3.0};
  std::vector<double> capture_budgets_s{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  double fps = 30.0;
  /// Frames needed per viewpoint for the pose to settle before capture.
  double settling_margin = 1.45;
};

struct ExperimentConfig {
  scene::SurfaceKind surface_kind = scene::SurfaceKind::Glass;
  std::vector<double> azimuth_truths_deg{-20.0, 0.0, 20.0};
  double elevation_truth_deg = 0.0;
  int trials_per_angle = 3;
  /// Empty selects "<surface>-calibrated".
  std::string noise_preset;
  std::uint64_t seed = 1;
  double temperature_c = 25.0;
  double plane_thickness_mm = 3.0;
  SprayConfig spray;
  SweepConfig sweep;
  imaging::Intrinsics camera;
  BackgroundConfig background;
  scene::Appearance appearance;
  WipingConfig wiping;
  TimingConfig timing;
  /// 0 uses the hardware concurrency.
  int workers = 0;

  std::string resolved_preset() const;
  /// Throws ConfigError on values no experiment can run with.
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

using NoisePresets = std::map<std::string, imaging::NoiseModel>;

NoisePresets presets_from_json(const nlohmann::json& j);
NoisePresets load_presets(const std::filesystem::path& path);
/// Presets compiled in from configs/noise_presets.json.
const NoisePresets& builtin_presets();
imaging::NoiseModel find_preset(const NoisePresets& presets, const std::string& name);

/// Reads every configured background image. Throws ImageLoadError.
std::vector<scene::Background> load_backgrounds(const ExperimentConfig& config);

}  // namespace mistnormal::harness
