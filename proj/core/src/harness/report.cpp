#include "mistnormal/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mistnormal/error.hpp"
#include "mistnormal/estimator.hpp"
#include "mistnormal/wiping.hpp"

#ifndef MISTNORMAL_VERSION
#define MISTNORMAL_VERSION "0.0.0"
#endif

namespace mistnormal::harness {

using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

void Table::add(std::vector<std::string> row) {
  require(row.size() == columns_.size(), "row width does not match the table columns");
  rows_.push_back(std::move(row));
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i] == name) return i;
  }
  throw Error(ErrorKind::InvalidArgument, "no column " + std::string(name));
}

const std::string& Table::cell(std::size_t row, std::string_view column_name) const {
  return rows_.at(row).at(column(column_name));
}

double Table::number(std::size_t row, std::string_view column_name) const {
  const auto v = parse_double(cell(row, column_name));
  if (!v) throw Error(ErrorKind::InvalidArgument, "column " + std::string(column_name) + " is not numeric");
  return *v;
}

namespace {

void append_cell(std::string& out, const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) {
    out += cell;
    return;
  }
  out += '"';
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    append_cell(out, cells[i]);
  }
  out += '\n';
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  append_line(out, columns_);
  for (const auto& row : rows_) append_line(out, row);
  return out;
}

Table Table::from_csv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> current;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      current.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n') {
      current.push_back(std::move(cell));
      cell.clear();
      lines.push_back(std::move(current));
      current.clear();
      any = false;
    } else if (c != '\r') {
      cell += c;
      any = true;
    }
  }
  require(!quoted, "unterminated quote in CSV");
  if (any) {
    current.push_back(std::move(cell));
    lines.push_back(std::move(current));
  }
  require(!lines.empty(), "CSV has no header");
  Table t(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) t.add(std::move(lines[i]));
  return t;
}

std::string_view artifact_version() { return MISTNORMAL_VERSION; }

ordered_json Report::summary() const {
  ordered_json j;
  j["kind"] = kind;
  j["artifact_version"] = std::string(artifact_version());
  j["config"] = config;
  j["aggregates"] = aggregates;
  return j;
}

namespace {

struct Accumulator {
  std::size_t n = 0;
  double sum = 0.0;
  std::vector<geometry::Angle> errors;

  void add(double v) {
    ++n;
    sum += v;
  }
  void add_error_deg(double e) { errors.push_back(geometry::Angle::from_degrees(e)); }
  ordered_json mean() const { return n ? ordered_json(sum / static_cast<double>(n)) : ordered_json(nullptr); }
  ordered_json rmse() const {
    return errors.empty() ? ordered_json(nullptr) : ordered_json(estimator::rmse(errors));
  }
};

bool is_ok(const Table& t, std::size_t r) { return t.cell(r, "status") == "ok"; }

void add_error(const Table& t, std::size_t r, const char* column, Accumulator& acc) {
  if (const auto v = parse_double(t.cell(r, column))) acc.add_error_deg(*v);
}

void add_value(const Table& t, std::size_t r, const char* column, Accumulator& acc) {
  if (const auto v = parse_double(t.cell(r, column))) acc.add(*v);
}

// Groups keyed by the text of a column in order of first appearance.
template <typename Fn>
ordered_json grouped(const Table& t, const char* key, Fn fn) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const std::string& k = t.cell(r, key);
    if (!members.count(k)) order.push_back(k);
    members[k].push_back(r);
  }
  ordered_json out = ordered_json::array();
  for (const auto& k : order) out.push_back(fn(k, members[k]));
  return out;
}

ordered_json estimate_aggregates(const Table& t) {
  Accumulator errors, closed, elevation, fscore;
  std::size_t ok = 0, saturated = 0;
  for (std::size_t r = 0; r < t.size(); ++r) {
    if (!is_ok(t, r)) continue;
    ++ok;
    add_error(t, r, "error_deg", errors);
    add_error(t, r, "closed_form_error_deg", closed);
    add_error(t, r, "elevation_error_deg", elevation);
    add_value(t, r, "mean_f_score", fscore);
    if (t.cell(r, "span_saturated") == "1") ++saturated;
  }
  ordered_json j;
  j["trials"] = t.size();
  j["ok"] = ok;
  j["failed"] = t.size() - ok;
  j["span_saturated"] = saturated;
  j["rmse_deg"] = errors.rmse();
  j["closed_form_rmse_deg"] = closed.rmse();
  j["elevation_rmse_deg"] = elevation.rmse();
  j["mean_f_score"] = fscore.mean();
  j["per_angle"] = grouped(t, "truth_deg", [&](const std::string& truth, const std::vector<std::size_t>& rows) {
    Accumulator e;
    std::size_t k = 0;
    for (std::size_t r : rows) {
      if (!is_ok(t, r)) continue;
      ++k;
      add_error(t, r, "error_deg", e);
    }
    ordered_json a;
    a["truth_deg"] = *parse_double(truth);
    a["trials"] = rows.size();
    a["ok"] = k;
    a["rmse_deg"] = e.rmse();
    return a;
  });
  return j;
}

ordered_json wipe_aggregates(const Table& t) {
  Accumulator alpha, swept, in_band;
  std::size_t lost = 0, failed = 0;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const std::string& status = t.cell(r, "status");
    if (status == "LostContact") ++lost;
    if (status != "ok" && status != "LostContact") {
      ++failed;
      continue;
    }
    add_value(t, r, "alpha_percent", alpha);
    add_value(t, r, "swept_alpha_percent", swept);
    const double steps = t.number(r, "steps");
    if (steps > 0) in_band.add(t.number(r, "in_band_steps") / steps);
  }
  ordered_json j;
  j["sessions"] = t.size();
  j["failed"] = failed;
  j["lost_contact"] = lost;
  j["mean_alpha_percent"] = alpha.mean();
  j["mean_swept_alpha_percent"] = swept.mean();
  j["mean_in_band_fraction"] = in_band.mean();
  j["human_reference_alpha_percent"] = wiping::kHumanReferenceAlphaPercent;
  return j;
}

ordered_json timing_aggregates(const Table& t) {
  std::size_t successes = 0;
  std::optional<double> min_spray, min_capture;
  for (std::size_t r = 0; r < t.size(); ++r) {
    if (t.cell(r, "status") != "success") continue;
    ++successes;
    const double s = t.number(r, "spray_s"), c = t.number(r, "capture_s");
    if (!min_spray || s < *min_spray) min_spray = s;
    if (!min_capture || c < *min_capture) min_capture = c;
  }
  ordered_json j;
  j["cells"] = t.size();
  j["successes"] = successes;
  j["failures"] = t.size() - successes;
  j["min_successful_spray_s"] = min_spray ? ordered_json(*min_spray) : ordered_json(nullptr);
  j["min_successful_capture_s"] = min_capture ? ordered_json(*min_capture) : ordered_json(nullptr);
  return j;
}

ordered_json background_aggregates(const Table& t) {
  Accumulator textured;
  for (std::size_t r = 0; r < t.size(); ++r) {
    if (is_ok(t, r) && t.cell(r, "background") != "textureless") add_error(t, r, "error_deg", textured);
  }
  ordered_json j;
  j["trials"] = t.size();
  j["textured_rmse_deg"] = textured.rmse();
  j["backgrounds"] = grouped(t, "background", [&](const std::string& name, const std::vector<std::size_t>& rows) {
    Table sub(t.columns());
    for (std::size_t r : rows) sub.add(t.rows()[r]);
    Accumulator e, f;
    std::size_t ok = 0;
    for (std::size_t r = 0; r < sub.size(); ++r) {
      add_value(sub, r, "f_score_mean", f);
      if (!is_ok(sub, r)) continue;
      ++ok;
      add_error(sub, r, "error_deg", e);
    }
    ordered_json b;
    b["background"] = name;
    b["trials"] = sub.size();
    b["ok"] = ok;
    b["rmse_deg"] = e.rmse();
    b["mean_f_score"] = f.mean();
    b["per_angle"] = grouped(sub, "truth_deg", [&](const std::string& truth, const std::vector<std::size_t>& rs) {
      Accumulator ea, fa;
      for (std::size_t r : rs) {
        add_value(sub, r, "f_score_mean", fa);
        if (is_ok(sub, r)) add_error(sub, r, "error_deg", ea);
      }
      ordered_json a;
      a["truth_deg"] = *parse_double(truth);
      a["mean_f_score"] = fa.mean();
      a["rmse_deg"] = ea.rmse();
      return a;
    });
    return b;
  });
  return j;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + p.string());
  out << text;
}

}  // namespace

ordered_json compute_aggregates(std::string_view kind, const Table& rows) {
  if (kind == "estimate") return estimate_aggregates(rows);
  if (kind == "wipe") return wipe_aggregates(rows);
  if (kind == "timing") return timing_aggregates(rows);
  if (kind == "background") return background_aggregates(rows);
  throw Error(ErrorKind::InvalidArgument, "unknown report kind " + std::string(kind));
}

void write_report(const Report& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / (report.kind + "_rows.csv"), report.rows.to_csv());
  write_file(dir / (report.kind + "_summary.json"), report.summary().dump(2) + "\n");
  for (const auto& [name, table] : report.traces) {
    write_file(dir / (report.kind + "_" + name + ".csv"), table.to_csv());
  }
  for (const auto& [name, mask] : report.masks) write_mask_pgm(dir / (name + ".pgm"), mask);
}

std::vector<ReportCheck> check_reports(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> summaries;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 13 && name.ends_with("_summary.json")) summaries.push_back(entry.path());
  }
  std::sort(summaries.begin(), summaries.end());
  std::vector<ReportCheck> out;
  for (const auto& path : summaries) {
    ReportCheck c;
    const auto summary = ordered_json::parse(read_file(path));
    c.kind = summary.at("kind").get<std::string>();
    c.stored = summary.at("aggregates");
    const Table rows = Table::from_csv(read_file(dir / (c.kind + "_rows.csv")));
    c.recomputed = compute_aggregates(c.kind, rows);
    c.consistent = c.stored.dump() == c.recomputed.dump();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace mistnormal::harness
