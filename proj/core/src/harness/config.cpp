#include "mistnormal/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mistnormal/image.hpp"

namespace mistnormal::harness {

namespace detail {
extern const char* const kBuiltinPresets;
}

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorKind::ConfigError, msg); }

// Reads keys from one JSON object and rejects anything left unread.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_ + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) config_error("unknown key " + where(key));
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      config_error("bad value for " + where(key) + ": " + e.what());
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  void angle(const char* key, geometry::Angle& out) {
    double deg = out.degrees();
    get(key, deg);
    out = geometry::Angle::from_degrees(deg);
  }

  bool has(const char* key) const { return j_.contains(key); }
  Section child(const char* key) {
    seen_.insert(key);
    return Section(j_.contains(key) ? j_.at(key) : empty(), where(key));
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& msg) {
  if (!ok) config_error(msg);
}

}  // namespace

std::string ExperimentConfig::resolved_preset() const {
  if (!noise_preset.empty()) return noise_preset;
  return std::string(scene::to_string(surface_kind)) + "-calibrated";
}

void ExperimentConfig::validate() const {
  try {
    spray.geometry.validate();
    camera.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
  check(!azimuth_truths_deg.empty(), "azimuth_truths_deg must not be empty");
  const double half_sweep = 0.5 * spray.geometry.sweep_angle.degrees();
  for (double a : azimuth_truths_deg) {
    check(std::isfinite(a) && std::abs(a) < 90.0, "azimuth truths must lie in (-90, 90) degrees");
    check(std::abs(a) <= half_sweep, "azimuth truth " + std::to_string(a) + " lies outside the sweep span");
  }
  check(std::abs(elevation_truth_deg) < 90.0, "elevation truth must lie in (-90, 90) degrees");
  check(trials_per_angle >= 1, "trials_per_angle must be at least 1");
  check(plane_thickness_mm > 0.0, "plane thickness must be positive");
  check(spray.per_arm_duration_s > 0.0, "spray.per_arm_duration_s must be positive");
  check(spray.reciprocations >= 1, "spray.reciprocations must be at least 1");
  check(spray.arm_width_mm > 0.0, "spray.arm_width_mm must be positive");
  check(spray.onset_time_s > 0.0, "spray.onset_time_s must be positive");
  check(!spray.dry_time_s || *spray.dry_time_s >= spray.onset_time_s, "spray.dry_time_s must be >= onset");
  check(sweep.step_deg > 0.0, "sweep.step_deg must be positive");
  check(sweep.seed_size_px >= 1, "sweep.seed_size_px must be positive");
  check(background.kind == "textureless" || background.kind == "image",
        "background.kind must be textureless or image");
  check(background.kind != "image" || !background.images.empty(), "background.kind image needs images");
  check(background.level >= 0 && background.level <= 255, "background.level must be 0..255");
  check(background.distance_mm > 0.0 && background.width_mm > 0.0, "background geometry must be positive");
  check(wiping.sessions >= 1 && wiping.reciprocations >= 1, "wiping sessions and reciprocations must be >= 1");
  check(wiping.stiffness_n_per_mm > 0.0, "wiping.stiffness_n_per_mm must be positive");
  check(wiping.f_min_n > 0.0 && wiping.f_min_n < wiping.f_max_n, "wiping force band needs 0 < f_min < f_max");
  check(wiping.step_mm > 0.0 && wiping.tool_size_mm > 0.0, "wiping step and tool size must be positive");
  check(wiping.stroke_length_mm > 0.0 && wiping.paint_length_mm > 0.0 && wiping.paint_height_mm > 0.0,
        "wiping lengths must be positive");
  check(wiping.ragged_sigma_mm >= 0.0 && wiping.max_start_gap_mm >= 0.0, "wiping noise terms must be >= 0");
  check(!timing.spray_durations_s.empty() && !timing.capture_budgets_s.empty(), "timing grids must not be empty");
  for (double d : timing.spray_durations_s) check(d > 0.0, "timing spray durations must be positive");
  for (double c : timing.capture_budgets_s) check(c > 0.0, "timing capture budgets must be positive");
  check(timing.fps > 0.0 && timing.settling_margin >= 1.0, "timing needs fps > 0 and settling_margin >= 1");
  check(workers >= 0, "workers must be non-negative");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  {
    Section root(j, "");
    std::string kind(scene::to_string(c.surface_kind));
    root.get("surface_kind", kind);
    try {
      c.surface_kind = scene::surface_kind_from_string(kind);
    } catch (const Error& e) {
      config_error(e.what());
    }
    root.get("azimuth_truths_deg", c.azimuth_truths_deg);
    root.get("elevation_truth_deg", c.elevation_truth_deg);
    root.get("trials_per_angle", c.trials_per_angle);
    root.get("noise_preset", c.noise_preset);
    root.get("seed", c.seed);
    root.get("temperature_c", c.temperature_c);
    root.get("plane_thickness_mm", c.plane_thickness_mm);
    root.get("workers", c.workers);
    {
      Section s = root.child("spray");
      s.get("half_length_mm", c.spray.geometry.half_length_mm);
      s.get("standoff_mm", c.spray.geometry.standoff_mm);
      s.angle("sweep_angle_deg", c.spray.geometry.sweep_angle);
      s.get("wrist_speed_mm_s", c.spray.geometry.wrist_speed_mm_s);
      s.get("completion_budget_s", c.spray.geometry.completion_budget_s);
      s.get("per_arm_duration_s", c.spray.per_arm_duration_s);
      s.get("reciprocations", c.spray.reciprocations);
      s.get("arm_width_mm", c.spray.arm_width_mm);
      s.get("onset_time_s", c.spray.onset_time_s);
      s.get("dry_time_s", c.spray.dry_time_s);
    }
    {
      Section s = root.child("sweep");
      s.get("step_deg", c.sweep.step_deg);
      s.get("estimate_elevation", c.sweep.estimate_elevation);
      s.get("seed_size_px", c.sweep.seed_size_px);
    }
    {
      Section s = root.child("camera");
      s.get("width", c.camera.width);
      s.get("height", c.camera.height);
      s.get("focal_px", c.camera.focal_px);
      std::optional<double> cx, cy;
      s.get("cx", cx);
      s.get("cy", cy);
      c.camera.cx = cx.value_or(0.5 * c.camera.width);
      c.camera.cy = cy.value_or(0.5 * c.camera.height);
    }
    {
      Section s = root.child("background");
      s.get("kind", c.background.kind);
      s.get("level", c.background.level);
      s.get("images", c.background.images);
      s.get("distance_mm", c.background.distance_mm);
      s.get("width_mm", c.background.width_mm);
    }
    {
      Section s = root.child("appearance");
      int gray = c.appearance.mist_gray;
      s.get("mist_gray", gray);
      check(gray >= 0 && gray <= 255, "appearance.mist_gray must be 0..255");
      c.appearance.mist_gray = static_cast<std::uint8_t>(gray);
      s.get("mirror_reflectance", c.appearance.mirror_reflectance);
      s.get("glass_transmittance", c.appearance.glass_transmittance);
    }
    {
      Section s = root.child("wiping");
      auto& w = c.wiping;
      s.get("plane_azimuth_deg", w.plane_azimuth_deg);
      s.get("estimation_error_deg", w.estimation_error_deg);
      s.get("regulated", w.regulated);
      s.get("sessions", w.sessions);
      s.get("stiffness_n_per_mm", w.stiffness_n_per_mm);
      s.get("f_min_n", w.f_min_n);
      s.get("f_max_n", w.f_max_n);
      s.get("step_mm", w.step_mm);
      s.get("tool_size_mm", w.tool_size_mm);
      s.get("stroke_length_mm", w.stroke_length_mm);
      s.get("paint_length_mm", w.paint_length_mm);
      s.get("paint_height_mm", w.paint_height_mm);
      s.get("ragged_sigma_mm", w.ragged_sigma_mm);
      s.get("reciprocations", w.reciprocations);
      s.get("max_start_gap_mm", w.max_start_gap_mm);
    }
    {
      Section s = root.child("timing");
      s.get("spray_durations_s", c.timing.spray_durations_s);
      s.get("capture_budgets_s", c.timing.capture_budgets_s);
      s.get("fps", c.timing.fps);
      s.get("settling_margin", c.timing.settling_margin);
    }
  }
  c.validate();
  return c;
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["surface_kind"] = std::string(scene::to_string(surface_kind));
  j["azimuth_truths_deg"] = azimuth_truths_deg;
  j["elevation_truth_deg"] = elevation_truth_deg;
  j["trials_per_angle"] = trials_per_angle;
  j["noise_preset"] = resolved_preset();
  j["seed"] = seed;
  j["temperature_c"] = temperature_c;
  j["plane_thickness_mm"] = plane_thickness_mm;
  const auto& g = spray.geometry;
  j["spray"] = {{"half_length_mm", g.half_length_mm},
                {"standoff_mm", g.standoff_mm},
                {"sweep_angle_deg", g.sweep_angle.degrees()},
                {"wrist_speed_mm_s", g.wrist_speed_mm_s},
                {"completion_budget_s", g.completion_budget_s},
                {"per_arm_duration_s", spray.per_arm_duration_s},
                {"reciprocations", spray.reciprocations},
                {"arm_width_mm", spray.arm_width_mm},
                {"onset_time_s", spray.onset_time_s},
                {"dry_time_s", spray.dry_time_s ? ordered_json(*spray.dry_time_s) : ordered_json(nullptr)}};
  j["sweep"] = {{"step_deg", sweep.step_deg},
                {"estimate_elevation", sweep.estimate_elevation},
                {"seed_size_px", sweep.seed_size_px}};
  j["camera"] = {{"width", camera.width}, {"height", camera.height}, {"focal_px", camera.focal_px},
                 {"cx", camera.cx}, {"cy", camera.cy}};
  j["background"] = {{"kind", background.kind}, {"level", background.level}, {"images", background.images},
                     {"distance_mm", background.distance_mm}, {"width_mm", background.width_mm}};
  j["appearance"] = {{"mist_gray", appearance.mist_gray},
                     {"mirror_reflectance", appearance.mirror_reflectance},
                     {"glass_transmittance", appearance.glass_transmittance}};
  const auto& w = wiping;
  j["wiping"] = {{"plane_azimuth_deg", w.plane_azimuth_deg},
                 {"estimation_error_deg", w.estimation_error_deg},
                 {"regulated", w.regulated},
                 {"sessions", w.sessions},
                 {"stiffness_n_per_mm", w.stiffness_n_per_mm},
                 {"f_min_n", w.f_min_n},
                 {"f_max_n", w.f_max_n},
                 {"step_mm", w.step_mm},
                 {"tool_size_mm", w.tool_size_mm},
                 {"stroke_length_mm", w.stroke_length_mm},
                 {"paint_length_mm", w.paint_length_mm},
                 {"paint_height_mm", w.paint_height_mm},
                 {"ragged_sigma_mm", w.ragged_sigma_mm},
                 {"reciprocations", w.reciprocations},
                 {"max_start_gap_mm", w.max_start_gap_mm}};
  j["timing"] = {{"spray_durations_s", timing.spray_durations_s},
                 {"capture_budgets_s", timing.capture_budgets_s},
                 {"fps", timing.fps},
                 {"settling_margin", timing.settling_margin}};
  j["workers"] = workers;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    config_error("cannot parse " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

NoisePresets presets_from_json(const json& j) {
  if (!j.is_object()) config_error("noise presets must be an object of named presets");
  NoisePresets out;
  for (const auto& [name, value] : j.items()) {
    imaging::NoiseModel m;
    {
      Section s(value, name);
      s.get("boundary_jitter_sigma_px", m.boundary_jitter_sigma_px);
      s.get("dropout_rate", m.dropout_rate);
      s.get("jitter_cell_px", m.jitter_cell_px);
      std::string note;
      s.get("note", note);
    }
    try {
      m.validate();
    } catch (const Error& e) {
      config_error("preset " + name + ": " + e.what());
    }
    out.emplace(name, m);
  }
  return out;
}

NoisePresets load_presets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open presets " + path.string());
  try {
    return presets_from_json(json::parse(in));
  } catch (const json::exception& e) {
    config_error("cannot parse " + path.string() + ": " + e.what());
  }
}

const NoisePresets& builtin_presets() {
  static const NoisePresets presets = presets_from_json(json::parse(detail::kBuiltinPresets));
  return presets;
}

imaging::NoiseModel find_preset(const NoisePresets& presets, const std::string& name) {
  const auto it = presets.find(name);
  if (it == presets.end()) config_error("unknown noise preset " + name);
  return it->second;
}

std::vector<scene::Background> load_backgrounds(const ExperimentConfig& config) {
  std::vector<scene::Background> out;
  for (const auto& path : config.background.images) {
    scene::Background bg = scene::Background::for_surface(config.surface_kind, read_pnm(path));
    bg.level = static_cast<std::uint8_t>(config.background.level);
    bg.distance_mm = config.background.distance_mm;
    bg.width_mm = config.background.width_mm;
    bg.validate();
    out.push_back(std::move(bg));
  }
  return out;
}

}  // namespace mistnormal::harness
