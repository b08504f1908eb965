#include "mistnormal/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace mistnormal::harness {

using geometry::Angle;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt_bool(bool v) { return v ? "1" : "0"; }

std::string error_status(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->kind()));
  return "InternalError";
}

scene::Background configured_background(const ExperimentConfig& config) {
  if (config.background.kind == "image") return load_backgrounds(config).front();
  auto bg = scene::Background::textureless(static_cast<std::uint8_t>(config.background.level));
  return bg;
}

estimator::EstimatorOptions estimator_options(const ExperimentConfig& config) {
  estimator::EstimatorOptions o;
  o.intrinsics = config.camera;
  o.seed_size_px = config.sweep.seed_size_px;
  return o;
}

estimator::SweepPlan azimuth_plan(const ExperimentConfig& config) {
  return estimator::plan_sweep(config.spray.geometry, Angle::from_degrees(config.sweep.step_deg),
                               geometry::ArcAxis::Azimuth);
}

std::optional<estimator::SweepPlan> elevation_plan(const ExperimentConfig& config) {
  if (!config.sweep.estimate_elevation) return std::nullopt;
  return estimator::plan_sweep(config.spray.geometry, Angle::from_degrees(config.sweep.step_deg),
                               geometry::ArcAxis::Elevation);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, int angle_index, int trial) {
  return mix(mix(mix(base) ^ static_cast<std::uint64_t>(angle_index)) ^ static_cast<std::uint64_t>(trial));
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers) : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!first) first = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first) std::rethrow_exception(first);
}

scene::Scene build_scene(const ExperimentConfig& config, Angle azimuth, const scene::Background& background) {
  scene::PlaneTarget plane;
  plane.azimuth = azimuth;
  plane.elevation = Angle::from_degrees(config.elevation_truth_deg);
  plane.surface_kind = config.surface_kind;
  plane.thickness_mm = config.plane_thickness_mm;
  scene::SprayOptions spray;
  spray.arm_width_mm = config.spray.arm_width_mm;
  spray.onset_time_s = config.spray.onset_time_s;
  spray.dry_time_s = config.spray.dry_time_s.value_or(
      scene::dry_time_for_temperature(scene::EvaporationTable::measured_default(), config.temperature_c));
  spray.dry_time_s = std::max(spray.dry_time_s, spray.onset_time_s);
  scene::CrossMist mist = scene::spray_cross(plane, config.spray.geometry, config.spray.per_arm_duration_s,
                                             config.spray.reciprocations, spray);
  return scene::Scene{plane, mist, background, config.appearance};
}

// ---------------------------------------------------------------------------
// Normal estimation

namespace {

const std::vector<std::string> kEstimateColumns{
    "trial_id",        "angle_index",      "trial",        "seed",
    "truth_deg",       "elevation_truth_deg", "status",    "theta_hat_deg",
    "phi_hat_deg",     "error_deg",        "closed_form_deg", "closed_form_error_deg",
    "elevation_error_deg", "span_saturated",  "argmax_index",     "argmax_L_mm",  "mean_f_score",
    "time_spent_s",    "message"};

const std::vector<std::string> kTraceColumns{"trial_id", "axis",       "index",     "offset_deg", "L_mm",
                                             "chord_px", "visibility", "timestamp_s", "f_score"};

struct TrialResult {
  std::vector<std::string> row;
  std::vector<std::vector<std::string>> trace;
};

TrialResult run_estimation_trial(const ExperimentConfig& config, const scene::Background& background,
                                 const imaging::NoiseModel& base_noise, int trial_id, int angle_index, int trial,
                                 const RunOptions& options) {
  const double truth = config.azimuth_truths_deg[angle_index];
  const std::uint64_t seed = trial_seed(config.seed, angle_index, trial);
  TrialResult out;
  std::vector<std::string> head{fmt(trial_id), fmt(angle_index), fmt(trial), std::to_string(seed), fmt(truth),
                                fmt(config.elevation_truth_deg)};
  try {
    const scene::Scene scene = build_scene(config, Angle::from_degrees(truth), background);
    imaging::NoiseModel noise = base_noise;
    noise.seed = seed;
    estimator::EstimatorOptions opt = estimator_options(config);
    if (options.dump_frames_dir) {
      const auto dir = *options.dump_frames_dir;
      opt.observer = [dir, trial_id](geometry::ArcAxis axis, int index, const imaging::RenderedFrame& frame,
                                     const Mask& mask) {
        const std::string stem = "trial" + std::to_string(trial_id) + "_" +
                                 std::string(estimator::to_string(axis)) + "_" + std::to_string(index);
        write_pnm(dir / (stem + (frame.image.channels() == 3 ? ".ppm" : ".pgm")), frame.image);
        write_mask_pgm(dir / (stem + "_mask.pgm"), mask);
        write_mask_pgm(dir / (stem + "_truth.pgm"), frame.truth_mask);
      };
    }
    const auto result =
        estimator::sweep_and_estimate(scene, azimuth_plan(config), elevation_plan(config), noise, opt);

    const auto& az = result.azimuth;
    double f_sum = 0.0;
    std::size_t f_n = 0;
    auto add_trace = [&](const estimator::AxisEstimate& est) {
      for (std::size_t i = 0; i < est.samples.size(); ++i) {
        const auto& s = est.samples[i];
        out.trace.push_back({fmt(trial_id), std::string(estimator::to_string(est.axis)), fmt(i),
                             fmt(s.offset.degrees()), fmt(s.L_mm), fmt(s.chord_px), fmt(s.visibility),
                             fmt(s.timestamp_s), fmt(s.f_score)});
        f_sum += s.f_score;
        ++f_n;
      }
    };
    add_trace(az);
    if (result.elevation) add_trace(*result.elevation);

    out.row = head;
    out.row.insert(out.row.end(),
                   {"ok", fmt(result.theta_hat.degrees()), fmt(result.phi_hat.degrees()),
                    fmt(result.theta_hat.degrees() - truth),
                    az.closed_form_angle ? fmt(az.closed_form_angle->degrees()) : "",
                    az.closed_form_angle ? fmt(az.closed_form_angle->degrees() - truth) : "",
                    result.elevation ? fmt(result.phi_hat.degrees() - config.elevation_truth_deg) : "",
                    fmt_bool(result.span_saturated()), fmt(az.argmax_index), fmt(az.samples[az.argmax_index].L_mm),
                    fmt(f_n ? f_sum / static_cast<double>(f_n) : 0.0), fmt(result.time_spent_s), ""});
  } catch (const std::exception& e) {
    out.trace.clear();
    out.row = head;
    out.row.insert(out.row.end(), {error_status(e), "", "", "", "", "", "", "", "", "", "", "", e.what()});
  }
  return out;
}

}  // namespace

Report run_normal_estimation_experiment(const ExperimentConfig& config, const imaging::NoiseModel& noise,
                                        const RunOptions& options) {
  config.validate();
  noise.validate();
  const scene::Background background = configured_background(config);
  if (options.dump_frames_dir) std::filesystem::create_directories(*options.dump_frames_dir);

  const int angles = static_cast<int>(config.azimuth_truths_deg.size());
  const int trials = config.trials_per_angle;
  std::vector<TrialResult> results(static_cast<std::size_t>(angles) * trials);
  parallel_for(results.size(), config.workers, [&](std::size_t i) {
    const int a = static_cast<int>(i) / trials, t = static_cast<int>(i) % trials;
    results[i] = run_estimation_trial(config, background, noise, static_cast<int>(i), a, t, options);
  });

  Report report;
  report.kind = "estimate";
  report.rows = Table(kEstimateColumns);
  Table trace(kTraceColumns);
  for (auto& r : results) {
    report.rows.add(std::move(r.row));
    for (auto& line : r.trace) trace.add(std::move(line));
  }
  report.traces.emplace_back("trace", std::move(trace));
  report.config = config.to_json();
  report.config["noise"] = {{"boundary_jitter_sigma_px", noise.boundary_jitter_sigma_px},
                            {"dropout_rate", noise.dropout_rate},
                            {"jitter_cell_px", noise.jitter_cell_px}};
  report.aggregates = compute_aggregates(report.kind, report.rows);
  return report;
}

// ---------------------------------------------------------------------------
// Wiping

WipeSetup make_wipe_setup(const ExperimentConfig& config, Angle estimation_error, std::uint64_t seed) {
  const auto& w = config.wiping;
  scene::PlaneTarget plane;
  plane.azimuth = Angle::from_degrees(w.plane_azimuth_deg);
  plane.elevation = Angle::from_degrees(config.elevation_truth_deg);
  plane.surface_kind = config.surface_kind;
  plane.thickness_mm = config.plane_thickness_mm;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> gap(0.0, w.max_start_gap_mm);
  const std::uint64_t ink_seed = rng();

  WipeSetup s{
      .plan = {},
      .model = {w.stiffness_n_per_mm, plane},
      .band = {w.f_min_n, w.f_max_n},
      .ink = wiping::InkMap::painted_stripe(w.paint_length_mm, w.paint_height_mm, 1.0, 20.0, w.ragged_sigma_mm,
                                            ink_seed),
      .options = {},
  };
  s.plan.start = Eigen::Vector2d(-0.5 * w.stroke_length_mm, 0.0);
  s.plan.end = Eigen::Vector2d(0.5 * w.stroke_length_mm, 0.0);
  s.plan.reciprocations = w.reciprocations;
  s.plan.step_mm = w.step_mm;
  s.plan.stroke_normal = geometry::normal_from_angles(plane.azimuth + estimation_error, plane.elevation);
  s.options.tool_size_mm = w.tool_size_mm;
  s.options.approach_gap_mm = gap(rng);
  return s;
}

Report run_wiping_experiment(const ExperimentConfig& config, Angle estimation_error, bool regulated) {
  config.validate();
  const int sessions = config.wiping.sessions;
  struct SessionResult {
    std::vector<std::string> row;
    std::vector<std::vector<std::string>> forces;
    std::optional<Mask> ink;
  };
  std::vector<SessionResult> results(sessions);
  parallel_for(results.size(), config.workers, [&](std::size_t i) {
    const std::uint64_t seed = trial_seed(config.seed, 0, static_cast<int>(i));
    SessionResult& out = results[i];
    std::vector<std::string> head{fmt(i), std::to_string(seed), fmt(estimation_error.degrees()),
                                  fmt_bool(regulated)};
    try {
      WipeSetup s = make_wipe_setup(config, estimation_error, seed);
      const double gap = s.options.approach_gap_mm;
      const auto session = wiping::execute_wipe(s.plan, s.model, s.band, regulated, std::move(s.ink), s.options);
      std::size_t in_band = 0;
      for (std::size_t k = 0; k < session.steps.size(); ++k) {
        const auto& st = session.steps[k];
        if (st.in_band) ++in_band;
        out.forces.push_back({fmt(i), fmt(k), fmt(st.force_n), std::string(wiping::to_string(st.command)),
                              fmt_bool(st.in_band), fmt(st.ink_remaining), fmt(st.tool_tip.x()),
                              fmt(st.tool_tip.y()), fmt(st.tool_tip.z())});
      }
      const double unwiped = wiping::unwiped_area(session.A_initial_mm2, session.N_initial, session.N_final);
      out.row = head;
      out.row.insert(out.row.end(),
                     {std::string(wiping::to_string(session.status)), fmt(gap), fmt(session.approach_steps),
                      fmt(session.steps.size()), fmt(in_band), fmt(session.A_initial_mm2), fmt(session.N_initial),
                      fmt(session.N_final), fmt(unwiped), fmt(session.alpha_percent()), fmt(session.swept_initial),
                      fmt(session.swept_final), fmt(session.swept_alpha_percent()), ""});
      out.ink = session.ink.cells();
    } catch (const std::exception& e) {
      out.forces.clear();
      out.row = head;
      out.row.insert(out.row.end(),
                     {error_status(e), "", "", "0", "0", "", "", "", "", "", "", "", "", e.what()});
    }
  });

  Report report;
  report.kind = "wipe";
  report.rows = Table({"session", "seed", "error_deg", "regulated", "status", "start_gap_mm", "approach_steps", "steps",
                       "in_band_steps", "A_initial_mm2", "N_initial", "N_final", "A_unwiped_mm2", "alpha_percent",
                       "swept_initial", "swept_final", "swept_alpha_percent", "message"});
  Table forces({"session", "step", "force_n", "command", "in_band", "ink_remaining", "tip_x_mm", "tip_y_mm",
                "tip_z_mm"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    report.rows.add(std::move(results[i].row));
    for (auto& f : results[i].forces) forces.add(std::move(f));
    if (results[i].ink) report.masks.emplace_back("wipe_ink_session" + std::to_string(i), *results[i].ink);
  }
  report.traces.emplace_back("forces", std::move(forces));
  report.config = config.to_json();
  report.config["wiping"]["estimation_error_deg"] = estimation_error.degrees();
  report.config["wiping"]["regulated"] = regulated;
  report.aggregates = compute_aggregates(report.kind, report.rows);
  return report;
}

// ---------------------------------------------------------------------------
// Timing

int required_frames(int viewpoints, double settling_margin) {
  require(viewpoints >= 1 && settling_margin >= 1.0, "need viewpoints >= 1 and margin >= 1");
  return static_cast<int>(std::ceil(settling_margin * viewpoints - 1e-9));
}

int available_frames(double budget_s, double fps) {
  require(budget_s >= 0.0 && fps > 0.0, "need a non-negative budget and positive fps");
  return static_cast<int>(std::floor(budget_s * fps + 1e-9));
}

Report run_timing_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto& tc = config.timing;
  const int viewpoints = static_cast<int>(azimuth_plan(config).offsets.size());
  const int required = required_frames(viewpoints, tc.settling_margin);
  const scene::Background background = configured_background(config);
  const Angle azimuth = Angle::from_degrees(config.azimuth_truths_deg.front());

  // Mist area seen from the initial viewpoint right after spraying.
  struct SprayOutcome {
    std::string failure;
    std::size_t area_px = 0;
  };
  std::vector<SprayOutcome> sprays(tc.spray_durations_s.size());
  parallel_for(sprays.size(), config.workers, [&](std::size_t i) {
    ExperimentConfig c = config;
    c.spray.per_arm_duration_s = tc.spray_durations_s[i];
    try {
      const scene::Scene scene = build_scene(c, azimuth, background);
      const auto pose = geometry::initial_camera_pose(scene.plane.center, c.spray.geometry.standoff_mm);
      const auto frame = imaging::render_view(scene, {pose, c.camera}, scene.mist.spray_end_time_s, {});
      sprays[i].area_px = frame.truth_mask.count();
      if (sprays[i].area_px == 0) sprays[i].failure = "NoMist";
    } catch (const Error& e) {
      sprays[i].failure = std::string(to_string(e.kind()));
    }
  });

  Report report;
  report.kind = "timing";
  report.rows = Table({"spray_s", "capture_s", "status", "reason", "mist_area_px", "frames", "required_frames",
                       "frames_per_viewpoint"});
  for (std::size_t i = 0; i < sprays.size(); ++i) {
    for (double budget : tc.capture_budgets_s) {
      const int frames = available_frames(budget, tc.fps);
      const double per_view = static_cast<double>(frames) / viewpoints;
      std::string reason = sprays[i].failure;
      if (reason.empty() && per_view < 1.0) reason = "InsufficientFrames";
      if (reason.empty() && frames < required) reason = "UnsettledFrames";
      report.rows.add({fmt(tc.spray_durations_s[i]), fmt(budget), reason.empty() ? "success" : "failure", reason,
                       fmt(sprays[i].area_px), fmt(frames), fmt(required), fmt(per_view)});
    }
  }
  report.config = config.to_json();
  report.config["timing"]["viewpoints"] = viewpoints;
  report.aggregates = compute_aggregates(report.kind, report.rows);
  return report;
}

// ---------------------------------------------------------------------------
// Background study

Report run_background_study(const ExperimentConfig& config, const imaging::NoiseModel& noise) {
  config.validate();
  noise.validate();
  std::vector<std::pair<std::string, scene::Background>> backgrounds;
  backgrounds.emplace_back("textureless",
                           scene::Background::textureless(static_cast<std::uint8_t>(config.background.level)));
  {
    auto loaded = load_backgrounds(config);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
      backgrounds.emplace_back(std::filesystem::path(config.background.images[i]).filename().string(),
                               std::move(loaded[i]));
    }
  }

  const int angles = static_cast<int>(config.azimuth_truths_deg.size());
  const int trials = config.trials_per_angle;
  const std::size_t per_bg = static_cast<std::size_t>(angles) * trials;
  const auto plan = azimuth_plan(config);
  const int n = static_cast<int>(plan.offsets.size());
  constexpr int kAnnotated = 5;

  std::vector<std::vector<std::string>> rows(backgrounds.size() * per_bg);
  parallel_for(rows.size(), config.workers, [&](std::size_t i) {
    const auto& [name, background] = backgrounds[i / per_bg];
    const int a = static_cast<int>(i % per_bg) / trials, t = static_cast<int>(i % per_bg) % trials;
    const double truth = config.azimuth_truths_deg[a];
    const std::uint64_t seed = trial_seed(config.seed, a, t);
    std::vector<std::string> head{name, fmt(a), fmt(truth), fmt(t), std::to_string(seed)};

    std::vector<double> scores;
    estimator::EstimatorOptions opt = estimator_options(config);
    opt.observer = [&](geometry::ArcAxis axis, int index, const imaging::RenderedFrame& frame, const Mask& mask) {
      if (axis != geometry::ArcAxis::Azimuth) return;
      for (int k = 0; k < kAnnotated; ++k) {
        if (index == static_cast<int>(std::lround(k * (n - 1) / double(kAnnotated - 1)))) {
          scores.push_back(frame.truth_mask.count() ? imaging::f_score(mask, frame.truth_mask) : 0.0);
        }
      }
    };
    std::string joined;
    auto f_columns = [&] {
      double sum = 0.0;
      joined.clear();
      for (std::size_t k = 0; k < scores.size(); ++k) {
        if (k) joined += ';';
        joined += fmt(scores[k]);
        sum += scores[k];
      }
      return scores.empty() ? std::string() : fmt(sum / static_cast<double>(scores.size()));
    };
    try {
      const scene::Scene scene = build_scene(config, Angle::from_degrees(truth), background);
      imaging::NoiseModel nm = noise;
      nm.seed = seed;
      const auto result = estimator::sweep_and_estimate(scene, plan, std::nullopt, nm, opt);
      const std::string mean = f_columns();
      rows[i] = head;
      rows[i].insert(rows[i].end(), {"ok", fmt(result.theta_hat.degrees()),
                                     fmt(result.theta_hat.degrees() - truth), mean, joined, ""});
    } catch (const std::exception& e) {
      const std::string mean = f_columns();
      rows[i] = head;
      rows[i].insert(rows[i].end(), {error_status(e), "", "", mean, joined, e.what()});
    }
  });

  Report report;
  report.kind = "background";
  report.rows = Table({"background", "angle_index", "truth_deg", "trial", "seed", "status", "theta_hat_deg",
                       "error_deg", "f_score_mean", "f_scores", "message"});
  for (auto& r : rows) report.rows.add(std::move(r));
  report.config = config.to_json();
  report.config["noise"] = {{"boundary_jitter_sigma_px", noise.boundary_jitter_sigma_px},
                            {"dropout_rate", noise.dropout_rate},
                            {"jitter_cell_px", noise.jitter_cell_px}};
  report.aggregates = compute_aggregates(report.kind, report.rows);
  return report;
}

}  // namespace mistnormal::harness
