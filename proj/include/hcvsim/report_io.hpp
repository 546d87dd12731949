#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hcvsim/engine.hpp"

namespace hcvsim {

/// One row per (cell, replication): model, uptake, mode, replication, then numeric_fields().
void write_replications_csv(const ScenarioReport& report, const std::filesystem::path& path);

/// One row per cell: model, uptake, mode, replications, the two NMB columns, then
/// `<field>_mean` and `<field>_sd` for every numeric field.
void write_summary_csv(const ScenarioReport& report, const std::filesystem::path& path);

struct SummaryRow {
  std::string model;
  double uptake = 0.0;
  bool transmission = true;
  std::vector<std::string> names;
  std::vector<double> values;

  /// NaN when the column is empty; throws when it is missing.
  double get(const std::string& column) const;
};

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path);

std::string mode_name(bool transmission);
bool parse_mode(const std::string& name);

/// Living agents at one day: id, age_years, alive, employed, idu, ever_infected, treated, state.
void write_agent_table(const Population& pop, Day today, const std::filesystem::path& path);

}  // namespace hcvsim
