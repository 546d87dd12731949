#include "hcvsim/report_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace hcvsim {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

void put(std::ostream& out, double v) {
  if (std::isnan(v)) return;
  out << v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double nan_or(const std::optional<double>& v) { return v.value_or(std::numeric_limits<double>::quiet_NaN()); }

}  // namespace

std::string mode_name(bool transmission) { return transmission ? "WT" : "WoT"; }

bool parse_mode(const std::string& name) {
  if (name == "WT" || name == "wt") return true;
  if (name == "WoT" || name == "wot") return false;
  throw ValidationError("unknown mode '" + name + "' (expected WT or WoT)");
}

void write_replications_csv(const ScenarioReport& report, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  bool header = false;
  for (const auto& c : report.cells) {
    for (const auto& r : c.replications) {
      const auto fields = numeric_fields(r);
      if (!header) {
        out << "model,uptake,mode,replication";
        for (const auto& [name, v] : fields) out << ',' << name;
        out << '\n';
        header = true;
      }
      out << to_string(c.cell.model) << ',' << c.cell.uptake << ',' << mode_name(c.cell.transmission) << ','
          << r.replication;
      for (const auto& [name, v] : fields) {
        out << ',';
        put(out, v);
      }
      out << '\n';
    }
  }
}

void write_summary_csv(const ScenarioReport& report, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  bool header = false;
  for (const auto& c : report.cells) {
    if (!header) {
      out << "model,uptake,mode,replications,nmb_vs_comparator,nmb_vs_annual_patient";
      for (const auto& name : c.field_names) out << ',' << name << "_mean," << name << "_sd";
      out << '\n';
      header = true;
    }
    out << to_string(c.cell.model) << ',' << c.cell.uptake << ',' << mode_name(c.cell.transmission) << ','
        << c.replications.size() << ',';
    put(out, nan_or(c.nmb_vs_comparator));
    out << ',';
    put(out, nan_or(c.nmb_vs_annual_patient));
    for (std::size_t i = 0; i < c.field_names.size(); ++i) {
      out << ',';
      put(out, c.mean[i]);
      out << ',';
      put(out, c.sd[i]);
    }
    out << '\n';
  }
}

double SummaryRow::get(const std::string& column) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == column) return values[i];
  }
  throw AnalysisError("summary has no column '" + column + "'");
}

std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty summary " + path.string());
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "model" || header[1] != "uptake" || header[2] != "mode") {
    throw ValidationError("not a summary file: " + path.string());
  }
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw ValidationError("ragged summary row in " + path.string());
    SummaryRow row;
    row.model = cells[0];
    row.uptake = std::stod(cells[1]);
    row.transmission = parse_mode(cells[2]);
    for (std::size_t i = 3; i < cells.size(); ++i) {
      row.names.push_back(header[i]);
      row.values.push_back(cells[i].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cells[i]));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_agent_table(const Population& pop, Day today, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "id,age_years,alive,employed,idu,ever_infected,treated,state\n";
  for (AgentId id : pop.living()) {
    const Agent& a = pop[id];
    out << a.id << ',' << age_years(a.age_days(today)) << ',' << a.alive << ',' << a.employed << ',' << a.idu << ','
        << a.ever_infected << ',' << a.treated << ',' << to_string(a.state()) << '\n';
  }
}

}  // namespace hcvsim
