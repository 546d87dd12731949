#include "hcvsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <thread>

namespace hcvsim {

namespace {

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Fn>
void parallel_tasks(int count, int threads, Fn&& fn) {
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (int i = next++; i < count && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min(threads, count));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

SharedInputs prepare_inputs(const SimConfig& config) {
  config.validate();
  SharedInputs in;
  TransitionModeld tm = config.transition_model_file.empty() ? default_transition_model()
                                                             : load_transition_model(config.transition_model_file);
  in.chain = std::make_shared<const ChainSampler>(tm);

  auto model = std::make_shared<OutcomeModel>();
  model->costs = config.cost_table_file.empty() ? CostTable::defaults() : load_cost_table(config.cost_table_file);
  if (config.daa_course_cost > 0.0) model->costs.daa_course = config.daa_course_cost;
  model->utilities =
      config.utility_table_file.empty() ? UtilityTable::defaults() : load_utility_table(config.utility_table_file);
  model->costs.validate();
  model->utilities.validate();
  model->discounter = Discounter(config.discount_rate);
  model->mortality = config.mortality();
  model->chain = in.chain;
  in.outcome_model = model;

  if (!config.repository_file.empty() && std::filesystem::exists(config.repository_file)) {
    auto repo = std::make_shared<OutcomesRepository>(OutcomesRepository::load(config.repository_file));
    const std::uint64_t expected = repository_hash(*model, config.repository_params());
    if (repo->hash() != expected) {
      throw ValidationError("repository " + config.repository_file +
                            " is stale: its hash does not match the current model inputs");
    }
    in.repository = std::move(repo);
  }
  return in;
}

std::shared_ptr<const OutcomesRepository> build_repository(const SimConfig& config, const SharedInputs& inputs,
                                                           int threads) {
  RepositoryParams p = config.repository_params();
  p.threads = threads > 0 ? threads : default_thread_count();
  return std::make_shared<const OutcomesRepository>(OutcomesRepository::build(*inputs.outcome_model, p));
}

std::vector<std::pair<std::string, double>> numeric_fields(const ReplicationReport& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::pair<std::string, double>> f = {
      {"calibration_antibody", r.calibration_end.antibody},
      {"calibration_rna", r.calibration_end.rna},
      {"calibration_idu", r.calibration_end.idu},
      {"calibration_population", static_cast<double>(r.calibration_end.population)},
      {"calibration_medical_share", r.calibration_medical_share},
      {"calibration_infections", static_cast<double>(r.calibration_infections)},
      {"antibody", r.intervention_end.antibody},
      {"rna", r.intervention_end.rna},
      {"idu", r.intervention_end.idu},
      {"population", static_cast<double>(r.intervention_end.population)},
      {"effective_uptake", r.effective_uptake.value_or(nan)},
      {"treated", static_cast<double>(r.treated)},
      {"cured", static_cast<double>(r.cured)},
      {"treatment_shortfall", static_cast<double>(r.treatment_shortfall)},
      {"chronic_in_window", static_cast<double>(r.chronic_in_window)},
      {"scope_count", static_cast<double>(r.scope_count)},
      {"intervention_infections", static_cast<double>(r.intervention_infections)},
      {"infections_medical", static_cast<double>(r.infections_medical)},
      {"infections_social", static_cast<double>(r.infections_social)},
      {"medical_share", r.medical_share},
      {"social_share", r.social_share},
  };
  for (int i = 0; i < kOutcomeFields; ++i) {
    f.emplace_back(std::string("pop_") + kOutcomeFieldNames[static_cast<std::size_t>(i)], r.population_level(i));
  }
  for (int i = 0; i < kOutcomeFields; ++i) {
    f.emplace_back(std::string("patient_") + kOutcomeFieldNames[static_cast<std::size_t>(i)],
                   r.patient_level ? (*r.patient_level)(i) : nan);
  }
  f.emplace_back("max_qaly_excess", r.max_qaly_excess);
  f.emplace_back("min_antibody_rna_gap", r.min_antibody_rna_gap);
  f.emplace_back("runtime_seconds", r.runtime_seconds);
  return f;
}

Simulation::Simulation(const SimConfig& config, SharedInputs inputs, std::uint64_t seed)
    : config_(config),
      inputs_(std::move(inputs)),
      demo_(config.demography()),
      treatment_(config.treatment()),
      seed_(seed),
      rng_demography_(stream_seed(seed, "demography")),
      rng_medical_(stream_seed(seed, "medical")),
      rng_social_(stream_seed(seed, "social")),
      rng_history_(stream_seed(seed, "natural-history")),
      rng_idu_(stream_seed(seed, "idu")),
      rng_treatment_(stream_seed(seed, "treatment")),
      rng_outcomes_(stream_seed(seed, "outcomes")),
      rng_continuation_(stream_seed(seed, "ia-continuation")) {
  config_.validate();
  require(inputs_.chain != nullptr, "simulation needs a transition model");
  const Day horizon = config_.total_days();
  calendar_.resize(static_cast<std::size_t>(horizon) + 1);

  CohortSpec spec;
  spec.size = config_.initial_cohort_size;
  spec.idu_count = config_.initial_idu_count;
  spec.infected_count = config_.initial_infected_count;
  spec.age_lo = config_.initial_age_min;
  spec.age_hi = config_.initial_age_max;
  spec.idu_duration_days = config_.social.idu_duration_days;
  spec.idu_max_age = config_.social.idu_age_max;
  Rng init_rng(stream_seed(seed, "init"));
  pop_ = init_cohort(spec, demo_, horizon, init_rng);

  const Day idu_min = static_cast<Day>(std::llround(config_.social.idu_age_min * kDaysPerYear));
  const Day idu_max = static_cast<Day>(std::llround(config_.social.idu_age_max * kDaysPerYear));
  for (std::size_t i = 0; i < pop_.size(); ++i) {
    const Agent& a = pop_[static_cast<AgentId>(i)];
    if (a.infection) schedule(kDaysPerYear, a.id, EventKind::Progression, a.episode);
    if (a.idu) {
      schedule(a.idu_until_day, a.id, EventKind::IduEnd, a.idu_spell);
      continue;
    }
    const Day age = a.age_days(0);
    if (age < idu_min) {
      schedule(idu_min - age, a.id, EventKind::IduEligible, 0);
    } else if (age < idu_max) {
      schedule_conversion(a.id, 0);
    }
  }
}

void Simulation::schedule(Day day, AgentId id, EventKind kind, std::int32_t stamp) {
  if (day < 0 || day >= static_cast<Day>(calendar_.size())) return;
  calendar_[static_cast<std::size_t>(day)].push_back(Event{id, kind, stamp});
}

void Simulation::schedule_conversion(AgentId id, Day from) {
  const Agent& a = pop_[id];
  if (a.treated) return;
  const Day limit = a.birth_day + static_cast<Day>(std::llround(config_.social.idu_age_max * kDaysPerYear));
  const std::int64_t delay = sample_conversion_delay(a.employed, config_.social, rng_idu_);
  if (delay >= limit - from) return;
  schedule(from + delay, id, EventKind::IduConversion, a.idu_spell);
}

void Simulation::configure_intervention(TreatmentModelKind model, double uptake, bool transmission) {
  require(!intervention_started_, "intervention settings are fixed once it has started");
  treatment_.kind = model;
  treatment_.uptake = uptake;
  treatment_.validate();
  config_.treatment_model = model;
  config_.target_uptake = uptake;
  config_.transmission_enabled_in_intervention = transmission;
}

bool Simulation::transmission_active() const {
  return !intervention_started_ || config_.transmission_enabled_in_intervention;
}

PrevalenceSnapshot Simulation::prevalence() const {
  PrevalenceSnapshot s;
  std::size_t antibody = 0;
  std::size_t rna = 0;
  for (AgentId id : pop_.living()) {
    const Agent& a = pop_[id];
    antibody += a.ever_infected ? 1 : 0;
    rna += a.viremic() ? 1 : 0;
  }
  s.population = pop_.alive_count();
  if (s.population == 0) return s;
  const auto n = static_cast<double>(s.population);
  s.antibody = static_cast<double>(antibody) / n;
  s.rna = static_cast<double>(rna) / n;
  s.idu = static_cast<double>(pop_.idus().size()) / n;
  return s;
}

std::int64_t Simulation::infections(Environment env, bool intervention) const {
  return infection_counts_[static_cast<std::size_t>(env)][intervention ? 1 : 0];
}

void Simulation::run_until(Day day) {
  day = std::min(day, config_.total_days());
  while (today_ < day) {
    step(today_);
    ++today_;
  }
}

void Simulation::start_intervention(Day d) {
  calibration_end_ = prevalence();
  calibration_infection_total_ = infections(Environment::Medical, false) + infections(Environment::Social, false);
  const Estimator est = config_.estimator;
  tracker_ = OutcomeTracker(inputs_.outcome_model, inputs_.repository, est, d, config_.oa_age_plus_one);
  for (AgentId id : pop_.living()) tracker_.enter(pop_[id], d, rng_outcomes_);
  intervention_started_ = true;
}

void Simulation::on_birth(AgentId id, Day d) {
  const Day idu_min = static_cast<Day>(std::llround(config_.social.idu_age_min * kDaysPerYear));
  schedule(d + idu_min, id, EventKind::IduEligible, 0);
  if (intervention_started_) tracker_.enter(pop_[id], d, rng_outcomes_);
}

void Simulation::on_death(AgentId id, Day d) { tracker_.accrue_to(pop_[id], d); }

void Simulation::infect(AgentId id, Day d, Environment env) {
  Agent& a = pop_[id];
  if (!a.susceptible()) return;
  tracker_.accrue_to(a, d);
  InfectionRecord r;
  r.state = HcvState::Acute;
  r.state_entry_day = d;
  r.infection_day = d;
  r.chain_origin_day = d;
  r.genotype = assign_genotype(rng_history_);
  a.infection = r;
  a.ever_infected = true;
  ++infection_counts_[static_cast<std::size_t>(env)][intervention_started_ ? 1 : 0];
  if (intervention_started_) {
    batch_.push_back(id);
    tracker_.status_flip(a, d, rng_outcomes_);
  }
  schedule(d + kAcuteDays, id, EventKind::AcuteResolution, a.episode);
}

void Simulation::handle(const Event& e, Day d) {
  Agent& a = pop_[e.agent];
  if (!a.alive) return;
  switch (e.kind) {
    case EventKind::AcuteResolution: {
      if (e.stamp != a.episode || !a.infection || a.infection->state != HcvState::Acute) return;
      tracker_.accrue_to(a, d);
      if (acute_resolution(*a.infection, d, *inputs_.chain, rng_history_) == AcuteOutcome::Cleared) {
        a.infection.reset();
        a.clean_state = HcvState::Susceptible;
        ++a.episode;
        tracker_.status_flip(a, d, rng_outcomes_);
        return;
      }
      InfectionRecord& r = *a.infection;
      r.state = HcvState::F0;
      r.state_entry_day = d;
      r.chain_origin_day = d;
      r.sojourn_years_in_state = 0;
      a.ever_chronic = true;
      tracker_.charge(a, entry_cost(inputs_.outcome_model->costs, HcvState::Acute, HcvState::F0), d);
      tracker_.mark_chronic(a);
      tracker_.status_flip(a, d, rng_outcomes_);
      schedule(d + kDaysPerYear, a.id, EventKind::Progression, a.episode);
      return;
    }
    case EventKind::Progression: {
      if (e.stamp != a.episode || !a.infection || !is_chain_state(a.infection->state)) return;
      tracker_.accrue_to(a, d);
      const HcvState prev = a.infection->state;
      progress_one_year(*a.infection, d, *inputs_.chain, rng_history_);
      if (a.infection->state == HcvState::LRD) {
        pop_.kill(a.id, d);
        return;
      }
      tracker_.charge(a, entry_cost(inputs_.outcome_model->costs, prev, a.infection->state), d);
      schedule(d + kDaysPerYear, a.id, EventKind::Progression, a.episode);
      return;
    }
    case EventKind::IduEligible: {
      if (!a.employment_drawn) {
        a.employed = rng_idu_.bernoulli(demo_.employment_probability);
        a.employment_drawn = true;
      }
      if (!a.idu) schedule_conversion(a.id, d);
      return;
    }
    case EventKind::IduConversion: {
      if (e.stamp != a.idu_spell || a.idu || a.treated) return;
      if (intervention_started_ && !config_.transmission_enabled_in_intervention) return;
      a.idu = true;
      a.ever_idu = true;
      a.idu_until_day = d + config_.social.idu_duration_days;
      pop_.add_idu(a.id);
      schedule(a.idu_until_day, a.id, EventKind::IduEnd, a.idu_spell);
      return;
    }
    case EventKind::IduEnd: {
      if (e.stamp != a.idu_spell || !a.idu) return;
      a.idu = false;
      ++a.idu_spell;
      pop_.remove_idu(a.id);
      schedule_conversion(a.id, d);
      return;
    }
  }
}

void Simulation::treatment_point(int year, Day d) {
  if (year == 0) {
    batch_.clear();
    for (AgentId id : pop_.living()) {
      if (pop_[id].viremic()) batch_.push_back(id);
    }
  }
  const std::int64_t want = rng_treatment_.stochastic_round(treatment_.uptake * static_cast<double>(batch_.size()));
  const auto take = static_cast<std::size_t>(std::min<std::int64_t>(want, static_cast<std::int64_t>(batch_.size())));
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = static_cast<std::size_t>(
        rng_treatment_.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(batch_.size()) - 1));
    std::swap(batch_[i], batch_[j]);
    Agent& a = pop_[batch_[i]];
    if (a.assigned && !a.treated) continue;
    a.assigned = true;
    backlog_.push_back(a.id);
  }
  batch_.clear();

  std::erase_if(backlog_, [&](AgentId id) {
    const Agent& a = pop_[id];
    return !a.alive || !a.viremic() || a.treated;
  });

  std::vector<AgentId> chosen;
  if (treatment_.kind == TreatmentModelKind::Annual) {
    const double cov = coverage_fraction(treatment_.alpha, year, treatment_.intervention_years);
    Selection s = select_for_treatment(pop_, backlog_, cov * static_cast<double>(backlog_.size()), rng_treatment_);
    shortfall_ += s.shortfall;
    chosen = std::move(s.chosen);
  } else {
    const auto years = treatment_.camp_years();
    if (std::find(years.begin(), years.end(), year) == years.end()) return;
    for (AgentId id : backlog_) {
      if (eligible_for_treatment(pop_[id])) chosen.push_back(id);
    }
  }

  const double course = inputs_.outcome_model ? inputs_.outcome_model->costs.daa_course : 0.0;
  for (AgentId id : chosen) {
    tracker_.accrue_to(pop_[id], d);
    const TreatmentResult r = apply_treatment(pop_, id, config_.svr, d, rng_treatment_);
    ++treated_;
    tracker_.charge(pop_[id], course, d, true);
    if (r == TreatmentResult::Cured) {
      ++cured_;
      tracker_.status_flip(pop_[id], d, rng_outcomes_);
    }
  }
}

void Simulation::record_year_end(Day) {
  const PrevalenceSnapshot s = prevalence();
  min_gap_ = std::min(min_gap_, s.antibody - s.rna);
}

void Simulation::step(Day d) {
  const Day d0 = config_.calibration_days();
  if (d == d0 && !intervention_started_) start_intervention(d);

  const DemographicEvents ev = step_demographics(pop_, d, demo_, rng_demography_);
  for (AgentId id : ev.deaths) on_death(id, d);
  for (AgentId id : ev.births) on_birth(id, d);

  auto& today = calendar_[static_cast<std::size_t>(d)];
  for (std::size_t i = 0; i < today.size(); ++i) {
    const Event e = today[i];
    handle(e, d);
  }
  std::vector<Event>().swap(today);

  if (transmission_active()) {
    scratch_.clear();
    medical_step(pop_, professionals_, config_.medical, rng_medical_, scratch_);
    for (AgentId id : scratch_) infect(id, d, Environment::Medical);
    scratch_.clear();
    social_step(pop_, config_.social, rng_social_, scratch_);
    for (AgentId id : scratch_) infect(id, d, Environment::Social);
  }

  if (intervention_started_) {
    const Day offset = d - d0;
    const int n = config_.intervention_years;
    for (int j = 0; j <= n; ++j) {
      if (treatment_day_offset(j) == offset) treatment_point(j, d);
    }
  }

  if ((d + 1) % kDaysPerYear == 0) record_year_end(d);
}

ReplicationReport Simulation::report() {
  require(today_ >= config_.total_days(), "report requires a completed run");
  ReplicationReport r;
  r.model = std::string(to_string(treatment_.kind));
  r.uptake = treatment_.uptake;
  r.transmission = config_.transmission_enabled_in_intervention;
  r.seed = seed_;
  r.calibration_end = calibration_end_;
  const std::int64_t cal_med = infections(Environment::Medical, false);
  const std::int64_t cal_soc = infections(Environment::Social, false);
  r.calibration_infections = cal_med + cal_soc;
  r.calibration_medical_share =
      r.calibration_infections > 0 ? static_cast<double>(cal_med) / static_cast<double>(r.calibration_infections) : 0.0;
  r.intervention_end = prevalence();
  r.treated = treated_;
  r.cured = cured_;
  r.treatment_shortfall = shortfall_;
  r.chronic_in_window = static_cast<std::int64_t>(tracker_.chronic_count());
  r.scope_count = static_cast<std::int64_t>(tracker_.scope_count());
  r.effective_uptake = effective_uptake(treated_, r.chronic_in_window);
  r.intervention_infections = infections(Environment::Medical, true) + infections(Environment::Social, true);
  r.infections_medical = cal_med + infections(Environment::Medical, true);
  r.infections_social = cal_soc + infections(Environment::Social, true);
  const std::int64_t all = r.infections_medical + r.infections_social;
  if (all > 0) {
    r.medical_share = static_cast<double>(r.infections_medical) / static_cast<double>(all);
    r.social_share = static_cast<double>(r.infections_social) / static_cast<double>(all);
  }
  r.min_antibody_rna_gap = min_gap_;

  if (config_.estimator != Estimator::None && r.scope_count > 0) {
    Outcome scope_total = Outcome::Zero();
    Outcome patient_total = Outcome::Zero();
    double max_excess = -std::numeric_limits<double>::infinity();
    const Day end = config_.total_days();
    for (std::size_t i = 0; i < pop_.size(); ++i) {
      const auto id = static_cast<AgentId>(i);
      if (!tracker_.in_scope(id)) continue;
      const Outcome o = tracker_.finalize(pop_[id], end, rng_continuation_);
      scope_total += o;
      if (tracker_.chronic(id)) patient_total += o;
      max_excess = std::max(max_excess, o(kQalys) - o(kLifeYears));
    }
    const LevelSummary levels = summarize_levels(scope_total, tracker_.scope_count(), patient_total,
                                                 tracker_.chronic_count());
    r.population_level = levels.population;
    r.patient_level = levels.patient;
    r.max_qaly_excess = max_excess;
  }
  return r;
}

ReplicationReport run_replication(const SimConfig& config, const SharedInputs& inputs, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  Simulation sim(config, inputs, seed);
  sim.run_to_end();
  ReplicationReport r = sim.report();
  r.runtime_seconds = elapsed_since(t0);
  return r;
}

CalibrationRun run_calibration_period(const SimConfig& config, const SharedInputs& inputs, std::uint64_t seed) {
  Simulation sim(config, inputs, seed);
  sim.run_until(config.calibration_days());
  CalibrationRun out;
  out.prevalence = sim.prevalence();
  const std::int64_t med = sim.infections(Environment::Medical, false);
  const std::int64_t soc = sim.infections(Environment::Social, false);
  out.infections = med + soc;
  if (out.infections > 0) {
    out.medical_share = static_cast<double>(med) / static_cast<double>(out.infections);
    out.social_share = static_cast<double>(soc) / static_cast<double>(out.infections);
  }
  return out;
}

double CellSummary::field_mean(const std::string& name) const {
  for (std::size_t i = 0; i < field_names.size(); ++i) {
    if (field_names[i] == name) return mean[i];
  }
  throw AnalysisError("unknown summary field '" + name + "'");
}

double CellSummary::field_sd(const std::string& name) const {
  for (std::size_t i = 0; i < field_names.size(); ++i) {
    if (field_names[i] == name) return sd[i];
  }
  throw AnalysisError("unknown summary field '" + name + "'");
}

const CellSummary* ScenarioReport::find(TreatmentModelKind model, double uptake, bool transmission) const {
  for (const auto& c : cells) {
    if (c.cell.model == model && std::abs(c.cell.uptake - uptake) < 1e-9 && c.cell.transmission == transmission) {
      return &c;
    }
  }
  return nullptr;
}

int default_thread_count() {
  if (const char* env = std::getenv("HCVSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

void summarize_cell(CellSummary& c) {
  if (c.replications.empty()) return;
  const auto first = numeric_fields(c.replications.front());
  c.field_names.clear();
  for (const auto& [name, v] : first) c.field_names.push_back(name);
  const std::size_t m = first.size();
  c.mean.assign(m, 0.0);
  c.sd.assign(m, 0.0);
  std::vector<std::vector<double>> values(m);
  for (const auto& r : c.replications) {
    const auto f = numeric_fields(r);
    for (std::size_t i = 0; i < m; ++i) {
      if (std::isnan(f[i].second)) continue;
      values[i].push_back(f[i].second);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto& v = values[i];
    if (v.empty()) {
      c.mean[i] = std::numeric_limits<double>::quiet_NaN();
      c.sd[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double s = 0.0;
    for (double x : v) s += x;
    const double mu = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    c.mean[i] = mu;
    c.sd[i] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }
}

}  // namespace

ScenarioReport run_scenario(const SimConfig& config, const SharedInputs& inputs, const std::vector<double>& uptakes,
                            const std::vector<TreatmentModelKind>& models, const std::vector<bool>& modes,
                            int threads) {
  config.validate();
  require(!uptakes.empty() && !models.empty() && !modes.empty(), "empty scenario grid");
  const auto t0 = std::chrono::steady_clock::now();
  const int workers = threads > 0 ? threads : default_thread_count();
  const int reps = config.replication_count;

  std::vector<GridCell> grid;
  for (bool mode : modes) {
    for (TreatmentModelKind m : models) {
      for (double u : uptakes) grid.push_back({m, u, mode});
    }
  }

  std::optional<GridCell> comparator;
  if (config.comparator_model != "none") {
    comparator = GridCell{parse_treatment_model(config.comparator_model), config.comparator_uptake, true};
    bool found = false;
    for (const auto& g : grid) {
      if (g.model == comparator->model && std::abs(g.uptake - comparator->uptake) < 1e-9) found = true;
    }
    if (!found) {
      throw AnalysisError("comparator cell " + config.comparator_model + " at uptake " +
                          std::to_string(config.comparator_uptake) + " is not in the scenario grid");
    }
  }

  std::vector<std::optional<Simulation>> bases(static_cast<std::size_t>(reps));
  parallel_tasks(reps, workers, [&](int r) {
    Simulation sim(config, inputs, replication_seed(config.rng_seed, static_cast<std::uint64_t>(r)));
    sim.run_until(config.calibration_days());
    bases[static_cast<std::size_t>(r)].emplace(std::move(sim));
  });

  ScenarioReport report;
  report.cells.resize(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    report.cells[c].cell = grid[c];
    report.cells[c].replications.resize(static_cast<std::size_t>(reps));
  }
  const int tasks = static_cast<int>(grid.size()) * reps;
  parallel_tasks(tasks, workers, [&](int t) {
    const auto c = static_cast<std::size_t>(t / reps);
    const auto r = static_cast<std::size_t>(t % reps);
    const auto start = std::chrono::steady_clock::now();
    Simulation sim = *bases[r];
    sim.configure_intervention(grid[c].model, grid[c].uptake, grid[c].transmission);
    sim.run_to_end();
    ReplicationReport rep = sim.report();
    rep.replication = static_cast<int>(r);
    rep.runtime_seconds = elapsed_since(start);
    report.cells[c].replications[r] = std::move(rep);
  });

  for (auto& c : report.cells) summarize_cell(c);

  const double k = config.wtp_per_qaly;
  for (auto& c : report.cells) {
    if (comparator) {
      if (const CellSummary* base = report.find(comparator->model, comparator->uptake, c.cell.transmission)) {
        c.nmb_vs_comparator = nmb(c.field_mean("pop_qalys_disc"), base->field_mean("pop_qalys_disc"),
                                  c.field_mean("pop_cost_disc"), base->field_mean("pop_cost_disc"), k);
      }
    }
    c.nmb_vs_annual_patient = camp_nmb(report, c.cell.model, c.cell.uptake, c.cell.transmission, k);
  }
  report.wall_seconds = elapsed_since(t0);
  return report;
}

std::optional<double> camp_nmb(const ScenarioReport& report, TreatmentModelKind model, double uptake,
                               bool transmission, double k) {
  const CellSummary* cell = report.find(model, uptake, transmission);
  const CellSummary* annual = report.find(TreatmentModelKind::Annual, uptake, transmission);
  if (!cell || !annual) return std::nullopt;
  const double qn = cell->field_mean("patient_qalys_disc");
  const double qs = annual->field_mean("patient_qalys_disc");
  const double cn = cell->field_mean("patient_cost_disc");
  const double cs = annual->field_mean("patient_cost_disc");
  if (std::isnan(qn) || std::isnan(qs) || std::isnan(cn) || std::isnan(cs)) return std::nullopt;
  return nmb(qn, qs, cn, cs, k);
}

}  // namespace hcvsim
