#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mistnormal/image.hpp"

namespace mistnormal::harness {

/// Shortest text that parses back to the same double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);

/// A CSV table of already-formatted cells.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  void add(std::vector<std::string> row);
  std::size_t column(std::string_view name) const;
  const std::string& cell(std::size_t row, std::string_view column) const;
  double number(std::size_t row, std::string_view column) const;

  std::string to_csv() const;
  static Table from_csv(std::string_view text);

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Version of the artifact that wrote the report.
std::string_view artifact_version();

struct Report {
  /// estimate, wipe, timing or background.
  std::string kind;
  Table rows;
  nlohmann::ordered_json config;
  nlohmann::ordered_json aggregates;
  /// Additional per-step tables, written as <kind>_<name>.csv.
  std::vector<std::pair<std::string, Table>> traces;
  /// Binary maps written as <name>.pgm.
  std::vector<std::pair<std::string, Mask>> masks;

  nlohmann::ordered_json summary() const;
};

/// Aggregates derived from the rows alone; experiments store exactly this.
nlohmann::ordered_json compute_aggregates(std::string_view kind, const Table& rows);

/// Writes <kind>_rows.csv, <kind>_summary.json and every trace and mask.
void write_report(const Report& report, const std::filesystem::path& dir);

struct ReportCheck {
  std::string kind;
  bool consistent = false;
  nlohmann::ordered_json stored;
  nlohmann::ordered_json recomputed;
};

/// Recomputes the aggregates of every report found in `dir`.
std::vector<ReportCheck> check_reports(const std::filesystem::path& dir);

}  // namespace mistnormal::harness
