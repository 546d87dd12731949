#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hcvsim/core.hpp"
#include "hcvsim/natural_history.hpp"
#include "hcvsim/outcomes.hpp"
#include "hcvsim/population.hpp"
#include "hcvsim/random.hpp"
#include "hcvsim/transmission.hpp"
#include "hcvsim/treatment.hpp"

namespace hcvsim {

struct SimConfig {
  int initial_cohort_size = 40000;
  int initial_idu_count = 15;
  int initial_infected_count = 5;
  double initial_age_min = 23.0;
  double initial_age_max = 102.0;
  int calibration_years = 50;
  int intervention_years = 10;
  int time_step = 1;
  /// Per 1000 per year.
  double birth_rate = 15.0;
  double death_rate = 6.0;
  double mortality_split_age = 60.0;
  double mortality_ratio = 8.0;
  /// Explicit annual levels; negative means solve from death_rate and the ratio.
  double mortality_young = -1.0;
  double mortality_old = -1.0;

  MedicalEnvParams medical;
  SocialEnvParams social;
  SvrTable svr;

  std::string transition_model_file;
  std::string cost_table_file;
  std::string utility_table_file;
  double daa_course_cost = 0.0;
  double discount_rate = 0.03;
  double wtp_per_qaly = 341901.0;

  bool transmission_enabled_in_intervention = true;
  TreatmentModelKind treatment_model = TreatmentModelKind::Annual;
  double target_uptake = 0.10;
  double base_coverage_alpha = 0.3;
  Estimator estimator = Estimator::OA;
  bool oa_age_plus_one = false;

  std::uint64_t rng_seed = 12345;
  int replication_count = 3;

  std::string repository_file;
  std::int64_t repository_cohort_size = 1'000'000;
  int repository_floor = 1000;
  std::uint64_t repository_seed = 20240101;

  /// Comparator cell of run_scenario; "none" disables it.
  std::string comparator_model = "Annual";
  double comparator_uptake = 0.10;

  void validate() const;
  Day calibration_days() const { return static_cast<Day>(calibration_years) * kDaysPerYear; }
  Day total_days() const { return static_cast<Day>(calibration_years + intervention_years) * kDaysPerYear; }
  MortalityModel mortality() const;
  DemographyParams demography() const;
  TreatmentModel treatment() const;
  RepositoryParams repository_params() const;
  double growth_rate() const;
};

/// Immutable inputs shared by every replication.
struct SharedInputs {
  std::shared_ptr<const ChainSampler> chain;
  std::shared_ptr<const OutcomeModel> outcome_model;
  std::shared_ptr<const OutcomesRepository> repository;
};

/// Loads transition/cost/utility tables named in the config. The repository is loaded from
/// repository_file when set (refusing a stale hash), else left empty.
SharedInputs prepare_inputs(const SimConfig& config);

/// Builds the repository the config describes.
std::shared_ptr<const OutcomesRepository> build_repository(const SimConfig& config, const SharedInputs& inputs,
                                                           int threads = 0);

struct PrevalenceSnapshot {
  double antibody = 0.0;
  double rna = 0.0;
  double idu = 0.0;
  std::size_t population = 0;
};

struct ReplicationReport {
  std::string model;
  double uptake = 0.0;
  bool transmission = true;
  int replication = 0;
  std::uint64_t seed = 0;

  PrevalenceSnapshot calibration_end;
  double calibration_medical_share = 0.0;
  std::int64_t calibration_infections = 0;

  PrevalenceSnapshot intervention_end;
  std::optional<double> effective_uptake;
  std::int64_t treated = 0;
  std::int64_t cured = 0;
  std::int64_t treatment_shortfall = 0;
  std::int64_t chronic_in_window = 0;
  std::int64_t scope_count = 0;
  std::int64_t intervention_infections = 0;

  std::int64_t infections_medical = 0;
  std::int64_t infections_social = 0;
  double medical_share = 0.0;
  double social_share = 0.0;

  Outcome population_level = Outcome::Zero();
  std::optional<Outcome> patient_level;
  /// Largest per-agent QALY minus LY (<= 0 when QALY <= LY for every agent).
  double max_qaly_excess = 0.0;
  /// Smallest antibody minus RNA prevalence over yearly reporting points.
  double min_antibody_rna_gap = 0.0;

  double runtime_seconds = 0.0;
};

/// Flat (name, value) view used for CSV and summaries; absent values are NaN.
std::vector<std::pair<std::string, double>> numeric_fields(const ReplicationReport& r);

enum class EventKind : std::uint8_t { AcuteResolution, Progression, IduEnd, IduEligible, IduConversion };

struct Event {
  AgentId agent = 0;
  EventKind kind = EventKind::Progression;
  std::int32_t stamp = 0;
};

/// One replication's state machine. Copyable so a calibrated state can be branched.
class Simulation {
 public:
  Simulation(const SimConfig& config, SharedInputs inputs, std::uint64_t seed);

  /// Runs days until `day` (exclusive). Intervention starts automatically at the calibration boundary.
  void run_until(Day day);
  void run_to_end() { run_until(config_.total_days()); }

  /// Replaces the intervention settings; only allowed before the intervention starts.
  void configure_intervention(TreatmentModelKind model, double uptake, bool transmission);

  Day today() const { return today_; }
  const Population& population() const { return pop_; }
  PrevalenceSnapshot prevalence() const;
  const SimConfig& config() const { return config_; }

  /// Final report; requires the run to have reached the end.
  ReplicationReport report();

  std::int64_t infections(Environment env, bool intervention) const;

 private:
  void step(Day d);
  void start_intervention(Day d);
  void schedule(Day day, AgentId id, EventKind kind, std::int32_t stamp);
  void handle(const Event& e, Day d);
  void on_birth(AgentId id, Day d);
  void on_death(AgentId id, Day d);
  void schedule_conversion(AgentId id, Day from);
  void infect(AgentId id, Day d, Environment env);
  void treatment_point(int year, Day d);
  void record_year_end(Day d);
  bool transmission_active() const;

  SimConfig config_;
  SharedInputs inputs_;
  DemographyParams demo_;
  TreatmentModel treatment_;
  std::uint64_t seed_;

  Population pop_;
  std::vector<std::vector<Event>> calendar_;
  std::vector<MedicalProfessional> professionals_;
  Day today_ = 0;

  Rng rng_demography_;
  Rng rng_medical_;
  Rng rng_social_;
  Rng rng_history_;
  Rng rng_idu_;
  Rng rng_treatment_;
  Rng rng_outcomes_;
  Rng rng_continuation_;

  bool intervention_started_ = false;
  PrevalenceSnapshot calibration_end_;
  std::array<std::array<std::int64_t, 2>, 2> infection_counts_{};  // [env][intervention]
  std::int64_t calibration_infection_total_ = 0;

  OutcomeTracker tracker_;
  std::vector<AgentId> batch_;
  std::vector<AgentId> backlog_;
  std::int64_t treated_ = 0;
  std::int64_t cured_ = 0;
  std::int64_t shortfall_ = 0;
  double min_gap_ = 1.0;
  std::vector<AgentId> scratch_;
};

/// Full run (calibration + intervention) for one seed.
ReplicationReport run_replication(const SimConfig& config, const SharedInputs& inputs, std::uint64_t seed);

/// Calibration-period-only run.
struct CalibrationRun {
  PrevalenceSnapshot prevalence;
  double medical_share = 0.0;
  double social_share = 0.0;
  std::int64_t infections = 0;
};
CalibrationRun run_calibration_period(const SimConfig& config, const SharedInputs& inputs, std::uint64_t seed);

struct GridCell {
  TreatmentModelKind model = TreatmentModelKind::Annual;
  double uptake = 0.1;
  bool transmission = true;
};

struct CellSummary {
  GridCell cell;
  std::vector<ReplicationReport> replications;
  std::vector<std::string> field_names;
  std::vector<double> mean;
  std::vector<double> sd;
  /// Population-level discounted NMB against the configured comparator of the same mode.
  std::optional<double> nmb_vs_comparator;
  /// Patient-level discounted NMB against the annual model at the same uptake and mode.
  std::optional<double> nmb_vs_annual_patient;

  double field_mean(const std::string& name) const;
  double field_sd(const std::string& name) const;
};

struct ScenarioReport {
  std::vector<CellSummary> cells;
  double wall_seconds = 0.0;

  const CellSummary* find(TreatmentModelKind model, double uptake, bool transmission) const;
};

/// Worker threads: HCVSIM_THREADS if set, else hardware concurrency.
int default_thread_count();

/// Runs config.replication_count replications of every (model, uptake, mode) cell. Each
/// replication's calibration phase runs once and is branched into every cell.
ScenarioReport run_scenario(const SimConfig& config, const SharedInputs& inputs, const std::vector<double>& uptakes,
                            const std::vector<TreatmentModelKind>& models, const std::vector<bool>& modes,
                            int threads = 0);

/// Mean patient-level discounted NMB of `model` against Annual at the same uptake and mode.
std::optional<double> camp_nmb(const ScenarioReport& report, TreatmentModelKind model, double uptake,
                               bool transmission, double k);

}  // namespace hcvsim
