#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "mistnormal/harness/config.hpp"
#include "mistnormal/harness/experiments.hpp"
#include "mistnormal/harness/report.hpp"

namespace fs = std::filesystem;
using namespace mistnormal;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string preset;
  std::string presets_file;
  bool dump_frames = false;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (JSON)");
  cmd->add_option("--seed", f.seed, "Base seed, overrides the config");
  cmd->add_option("--out", f.out, "Output directory for reports");
  cmd->add_option("--preset", f.preset, "Noise preset name, overrides the config");
  cmd->add_option("--presets", f.presets_file, "Preset file replacing the built-in presets");
  cmd->add_flag("--dump-frames", f.dump_frames, "Write every rendered frame and mask");
  cmd->add_option("--workers", f.workers, "Worker threads (0: all cores)");
}

harness::ExperimentConfig resolve_config(const CommonFlags& f) {
  harness::ExperimentConfig c =
      f.config.empty() ? harness::config_from_json(nlohmann::json::object()) : harness::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.preset.empty()) c.noise_preset = f.preset;
  if (f.workers) c.workers = *f.workers;
  c.validate();
  return c;
}

imaging::NoiseModel resolve_noise(const CommonFlags& f, const harness::ExperimentConfig& c) {
  const harness::NoisePresets presets =
      f.presets_file.empty() ? harness::builtin_presets() : harness::load_presets(f.presets_file);
  return harness::find_preset(presets, c.resolved_preset());
}

int finish(const harness::Report& report, const CommonFlags& f) {
  harness::write_report(report, f.out);
  nlohmann::ordered_json j;
  j["kind"] = report.kind;
  j["out"] = f.out;
  j["aggregates"] = report.aggregates;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int fail(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plane normal estimation and wiping simulator"};
  app.require_subcommand(1);

  CommonFlags ef, wf, tf, bf;
  std::string report_dir = "out";
  double error_deg = 0.0;
  bool error_given = false;
  bool unregulated = false;

  auto* estimate = app.add_subcommand("estimate", "Run the normal estimation experiment");
  add_common(estimate, ef);
  auto* wipe = app.add_subcommand("wipe", "Run wiping sessions at a given estimation error");
  add_common(wipe, wf);
  wipe->add_option("--error-deg", error_deg, "Azimuth estimation error in degrees")->each([&](const std::string&) {
    error_given = true;
  });
  wipe->add_flag("--unregulated", unregulated, "Disable force-band regulation");
  auto* timing = app.add_subcommand("timing", "Grid spray duration against capture budget");
  add_common(timing, tf);
  auto* background = app.add_subcommand("background", "Estimate against every configured background");
  add_common(background, bf);
  auto* report = app.add_subcommand("report", "Recompute and check stored report aggregates");
  report->add_option("--out", report_dir, "Directory holding report files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*estimate) {
      const auto c = resolve_config(ef);
      harness::RunOptions opt;
      if (ef.dump_frames) opt.dump_frames_dir = fs::path(ef.out) / "frames";
      return finish(harness::run_normal_estimation_experiment(c, resolve_noise(ef, c), opt), ef);
    }
    if (*wipe) {
      const auto c = resolve_config(wf);
      const double err = error_given ? error_deg : c.wiping.estimation_error_deg;
      const bool regulated = unregulated ? false : c.wiping.regulated;
      return finish(harness::run_wiping_experiment(c, geometry::Angle::from_degrees(err), regulated), wf);
    }
    if (*timing) {
      return finish(harness::run_timing_sweep(resolve_config(tf)), tf);
    }
    if (*background) {
      const auto c = resolve_config(bf);
      return finish(harness::run_background_study(c, resolve_noise(bf, c)), bf);
    }
    if (*report) {
      const auto checks = harness::check_reports(report_dir);
      nlohmann::ordered_json j = nlohmann::ordered_json::array();
      bool all = !checks.empty();
      for (const auto& c : checks) {
        j.push_back({{"kind", c.kind}, {"consistent", c.consistent}, {"aggregates", c.recomputed}});
        all = all && c.consistent;
      }
      std::cout << j.dump(2) << "\n";
      if (checks.empty()) return fail("EmptyInput", "no reports found in " + report_dir);
      return all ? 0 : 1;
    }
  } catch (const Error& e) {
    return fail(std::string(to_string(e.kind())), e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
  return 0;
}
