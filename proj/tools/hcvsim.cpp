// hcvsim command line: repository build, calibration search, scenario grid runs and NMB analysis.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "hcvsim/calibration.hpp"
#include "hcvsim/config.hpp"
#include "hcvsim/engine.hpp"
#include "hcvsim/report_io.hpp"

namespace fs = std::filesystem;
using namespace hcvsim;

namespace {

struct Globals {
  std::string config_file;
  std::vector<std::string> overrides;
};

SimConfig resolve_config(const Globals& g) {
  SimConfig c = g.config_file.empty() ? SimConfig{} : load_config(g.config_file);
  apply_overrides(c, g.overrides);
  c.validate();
  return c;
}

std::string repository_path(const SimConfig& c) { return c.repository_file.empty() ? "repository.bin" : c.repository_file; }

int cmd_repository(const Globals& g, const std::string& out_arg) {
  SimConfig c = resolve_config(g);
  const std::string out = out_arg.empty() ? repository_path(c) : out_arg;
  c.repository_file.clear();
  const SharedInputs in = prepare_inputs(c);
  const auto repo = build_repository(c, in, default_thread_count());
  repo->save(out);
  fmt::print("repository {} : {} samples, hash {:016x}, built in {:.1f}s\n", out, repo->total_samples(), repo->hash(),
             repo->build_seconds());
  return 0;
}

SearchSpace load_bounds(const fs::path& path, int& replications) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read bounds file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("bounds file " + path.string() + ": " + e.what());
  }
  SearchSpace s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "q_t_med") s.q_t_med = value.get<std::vector<double>>();
      else if (key == "q_c") s.q_c = value.get<std::vector<double>>();
      else if (key == "q_shar") s.q_shar = value.get<std::vector<double>>();
      else if (key == "refinement_rounds") s.refinement_rounds = value.get<int>();
      else if (key == "replications") replications = value.get<int>();
      else throw ValidationError("unknown bounds key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("bounds file " + path.string() + ": " + e.what());
  }
  s.validate();
  require(replications >= 1, "replications must be positive");
  return s;
}

int cmd_calibrate(const Globals& g, const std::string& bounds, const std::string& log_file, const std::string& out,
                  int replications) {
  SimConfig c = resolve_config(g);
  c.estimator = Estimator::None;
  int reps = 30;
  const SearchSpace space = load_bounds(bounds, reps);
  if (replications > 0) reps = replications;
  const SharedInputs in = prepare_inputs(c);
  const CalibrationResult r = calibrate(c, in, space, reps, {}, fs::path(log_file), default_thread_count());
  const Evaluation& b = r.best;
  fmt::print("evaluated {} candidates; best q_t_med={} q_c={} q_shar={}\n", r.log.size(), b.candidate.q_t_med,
             b.candidate.q_c, b.candidate.q_shar);
  fmt::print("  antibody {:.4f} rna {:.4f} idu {:.5f} medical share {:.3f} score {:.4f}\n", b.antibody, b.rna, b.idu,
             b.medical_share, b.score.total);
  SimConfig winner = c;
  apply_candidate(winner, b.candidate);
  winner.estimator = SimConfig{}.estimator;
  save_config(winner, out);
  fmt::print("wrote {} and {}\n", out, log_file);
  if (!r.pass) {
    fmt::print(stderr, "no candidate met the deviation threshold; {} holds the closest one\n", out);
    return 4;
  }
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int cmd_run(const Globals& g, const std::string& uptakes_arg, const std::string& models_arg,
            const std::string& modes_arg, const std::string& out_dir, long dump_day) {
  SimConfig c = resolve_config(g);
  std::vector<double> uptakes;
  for (const auto& s : split_list(uptakes_arg)) uptakes.push_back(std::stod(s));
  std::vector<TreatmentModelKind> models;
  for (const auto& s : split_list(models_arg)) models.push_back(parse_treatment_model(s));
  std::vector<bool> modes;
  for (const auto& s : split_list(modes_arg)) modes.push_back(parse_mode(s));
  for (double u : uptakes) require(is_probability(u), "uptake out of [0,1]");

  if (c.estimator == Estimator::OA) {
    const std::string repo = repository_path(c);
    if (!fs::exists(repo)) {
      throw ValidationError("OA needs an outcomes repository; build " + repo + " with `hcvsim repository`");
    }
    c.repository_file = repo;
  }
  const SharedInputs in = prepare_inputs(c);

  if (dump_day >= 0) {
    Simulation sim(c, in, replication_seed(c.rng_seed, 0));
    sim.run_until(std::min<Day>(dump_day, c.total_days()));
    const fs::path p = fs::path(out_dir) / fmt::format("agents_day{}.csv", sim.today());
    write_agent_table(sim.population(), sim.today(), p);
    fmt::print("wrote {}\n", p.string());
  }

  const ScenarioReport report = run_scenario(c, in, uptakes, models, modes, default_thread_count());
  const fs::path dir(out_dir);
  write_replications_csv(report, dir / "replications.csv");
  write_summary_csv(report, dir / "summary.csv");
  save_config(c, dir / "config.json");
  fmt::print("{} cells x {} replications in {:.1f}s\n", report.cells.size(), c.replication_count, report.wall_seconds);
  fmt::print("{:<12} {:>6} {:>4} {:>8} {:>8} {:>12} {:>14}\n", "model", "uptake", "mode", "rna", "eff_u",
             "nmb_vs_base", "nmb_vs_annual");
  for (const auto& cell : report.cells) {
    const auto show = [](const std::optional<double>& v) { return v ? fmt::format("{:.0f}", *v) : std::string("-"); };
    fmt::print("{:<12} {:>6.2f} {:>4} {:>8.4f} {:>8.3f} {:>12} {:>14}\n", to_string(cell.cell.model), cell.cell.uptake,
               mode_name(cell.cell.transmission), cell.field_mean("rna"), cell.field_mean("effective_uptake"),
               show(cell.nmb_vs_comparator), show(cell.nmb_vs_annual_patient));
  }
  fmt::print("wrote {} and {}\n", (dir / "replications.csv").string(), (dir / "summary.csv").string());
  return 0;
}

int cmd_analyze(const Globals& g, const std::string& summary, const std::string& model, const std::string& mode,
                double threshold, const std::string& out) {
  const SimConfig c = resolve_config(g);
  const bool transmission = parse_mode(mode);
  parse_treatment_model(model);
  std::map<double, const SummaryRow*> by_uptake;
  const auto rows = read_summary_csv(summary);
  for (const auto& r : rows) {
    if (r.model == model && r.transmission == transmission) by_uptake[r.uptake] = &r;
  }
  if (by_uptake.size() < 2) throw AnalysisError("need at least two uptake points for " + model + " " + mode);
  std::vector<double> uptakes, qalys, costs;
  for (const auto& [u, r] : by_uptake) {
    uptakes.push_back(u);
    qalys.push_back(r->get("pop_qalys_disc_mean"));
    costs.push_back(r->get("pop_cost_disc_mean"));
  }
  const auto series = incremental_nmb_curve(uptakes, qalys, costs, c.wtp_per_qaly);
  const std::span<const double> grid(uptakes.data() + 1, uptakes.size() - 1);
  const auto critical = critical_uptake(grid, series, threshold);

  fmt::print("{} {} (k = {:.0f})\n", model, mode, c.wtp_per_qaly);
  fmt::print("{:>6} {:>12} {:>12} {:>14}\n", "uptake", "qalys_disc", "cost_disc", "incremental");
  for (std::size_t i = 0; i < uptakes.size(); ++i) {
    const std::string inc = i == 0 ? std::string("-") : fmt::format("{:.1f}", series[i - 1]);
    fmt::print("{:>6.2f} {:>12.5f} {:>12.1f} {:>14}\n", uptakes[i], qalys[i], costs[i], inc);
  }
  if (critical) fmt::print("critical uptake at threshold {}: {:.2f}\n", threshold, *critical);
  else fmt::print("no incremental NMB reaches threshold {}\n", threshold);

  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw ValidationError("cannot write " + out);
    f << "uptake,incremental_nmb\n";
    for (std::size_t i = 1; i < uptakes.size(); ++i) f << uptakes[i] << ',' << series[i - 1] << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent-based HCV transmission and cost-effectiveness simulator"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", g.overrides, "Override a configuration key (key=value), repeatable");

  auto* repo = app.add_subcommand("repository", "Build the outcomes repository");
  std::string repo_out;
  repo->add_option("-o,--out", repo_out, "Output file (default: repository_file or repository.bin)");

  auto* cal = app.add_subcommand("calibrate", "Search transmission parameters against prevalence targets");
  std::string bounds, cal_log = "calibration_log.csv", cal_out = "calibrated.json";
  int cal_reps = 0;
  cal->add_option("-b,--bounds", bounds, "JSON file with q_t_med, q_c, q_shar grids")->required()->check(CLI::ExistingFile);
  cal->add_option("-l,--log", cal_log, "Resumable evaluation log (CSV)");
  cal->add_option("-o,--out", cal_out, "Winning configuration (JSON)");
  cal->add_option("-r,--replications", cal_reps, "Replications per candidate (default 30 or bounds file)");

  auto* run = app.add_subcommand("run", "Run a scenario grid");
  std::string uptakes = "0.1,0.3,0.5,0.7,0.9,0.95", models = "Annual", modes = "WT,WoT", out_dir = "results";
  long dump_day = -1;
  run->add_option("-u,--uptakes", uptakes, "Comma-separated target uptakes");
  run->add_option("-m,--models", models, "Comma-separated treatment models (Annual, T0, End, Twice, Thrice, ...)");
  run->add_option("--modes", modes, "Comma-separated modes: WT (with transmission), WoT");
  run->add_option("-o,--out-dir", out_dir, "Output directory");
  run->add_option("--dump-agents", dump_day, "Write the agent table of replication 0 at this day");

  auto* an = app.add_subcommand("analyze", "Incremental NMB and critical uptake from a summary CSV");
  std::string summary, an_model = "Annual", an_mode = "WT", an_out;
  double threshold = 0.0;
  an->add_option("summary", summary, "summary.csv from `run`")->required()->check(CLI::ExistingFile);
  an->add_option("-m,--model", an_model, "Treatment model");
  an->add_option("--mode", an_mode, "WT or WoT");
  an->add_option("-t,--threshold", threshold, "NMB threshold for the critical uptake");
  an->add_option("-o,--out", an_out, "Write the incremental series to this CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*repo) return cmd_repository(g, repo_out);
    if (*cal) return cmd_calibrate(g, bounds, cal_log, cal_out, cal_reps);
    if (*run) return cmd_run(g, uptakes, models, modes, out_dir, dump_day);
    if (*an) return cmd_analyze(g, summary, an_model, an_mode, threshold, an_out);
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const AnalysisError& e) {
    fmt::print(stderr, "analysis error: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
