#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>

#include "mistnormal/estimator.hpp"
#include "mistnormal/harness/config.hpp"
#include "mistnormal/harness/report.hpp"
#include "mistnormal/wiping.hpp"

namespace mistnormal::harness {

/// Seed of trial `trial` at angle index `angle_index`, from the config seed.
std::uint64_t trial_seed(std::uint64_t base, int angle_index, int trial);

/// Runs fn(0) .. fn(n - 1) on `workers` threads (0: hardware concurrency).
/// The first exception thrown by any task is rethrown after all finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct RunOptions {
  /// Writes every rendered frame and extracted mask here when set.
  std::optional<std::filesystem::path> dump_frames_dir;
};

/// Plane, mist and background for one trial. Throws the spray errors.
scene::Scene build_scene(const ExperimentConfig& config, geometry::Angle azimuth,
                         const scene::Background& background);

/// n trials per configured angle. Failing trials become rows with their
/// error kind as status.
Report run_normal_estimation_experiment(const ExperimentConfig& config, const imaging::NoiseModel& noise,
                                        const RunOptions& options = {});

/// config.wiping.sessions sessions at the given estimation error.
Report run_wiping_experiment(const ExperimentConfig& config, geometry::Angle estimation_error, bool regulated);

/// Inputs of one wiping session, derived from the config and a seed.
struct WipeSetup {
  wiping::WipePlan plan;
  wiping::ContactModel model;
  wiping::ForceBand band;
  wiping::InkMap ink;
  wiping::WipeOptions options;
};

WipeSetup make_wipe_setup(const ExperimentConfig& config, geometry::Angle estimation_error, std::uint64_t seed);

/// Spray duration by capture budget grid of success and failure cells.
Report run_timing_sweep(const ExperimentConfig& config);

/// Frames needed for a sweep of `viewpoints` captures at the settling margin.
int required_frames(int viewpoints, double settling_margin);
/// Frames a camera delivers within the budget.
int available_frames(double budget_s, double fps);

/// Textureless plus every configured image background, with F-scores on
/// five evenly spaced frames per trial.
Report run_background_study(const ExperimentConfig& config, const imaging::NoiseModel& noise);

}  // namespace mistnormal::harness
