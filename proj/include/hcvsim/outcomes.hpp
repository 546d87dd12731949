#pragma once

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcvsim/core.hpp"
#include "hcvsim/natural_history.hpp"
#include "hcvsim/population.hpp"
#include "hcvsim/random.hpp"
#include "hcvsim/treatment.hpp"

namespace hcvsim {

/// Net one-time (charged on entering a cost group) and annual recurring costs, INR.
struct CostTable {
  std::array<double, kHcvStateCount> one_time{};
  std::array<double, kHcvStateCount> recurring{};
  double daa_course = 0.0;

  static CostTable defaults();
  void validate() const;
  std::string fingerprint() const;
};

struct UtilityTable {
  std::array<double, kHcvStateCount> disease{};
  std::array<double, kAgeGroupCount> age{};

  static UtilityTable defaults();
  void validate() const;
  std::string fingerprint() const;
};

/// CSV `state,one_time,recurring`; an optional `DAA` row carries the course cost in one_time.
CostTable load_cost_table(const std::filesystem::path& path);
void save_cost_table(const CostTable& t, const std::filesystem::path& path);
/// CSV `kind,key,weight` with kind `state` or `age` (key = band index 0..6).
UtilityTable load_utility_table(const std::filesystem::path& path);
void save_utility_table(const UtilityTable& t, const std::filesystem::path& path);

/// F0-F3 share one group; F4, DC, HCC, LT are groups of their own; -1 otherwise.
int cost_group(HcvState s);
/// One-time cost of moving from `from` to `to`.
double entry_cost(const CostTable& t, HcvState from, HcvState to);

/// u_age * u_state.
double qaly_weight(const UtilityTable& t, AgeGroup g, HcvState s);

/// amount / (1 + rate)^t.
double discount(double amount, double t_years, double rate);

/// Daily discount factor q = (1 + r)^(-1/360) and closed-form segment sums.
class Discounter {
 public:
  explicit Discounter(double annual_rate = 0.03);
  double rate() const { return rate_; }
  double factor(Day d) const;
  /// sum_{d=a}^{b-1} q^d.
  double segment(Day a, Day b) const;

 private:
  double rate_;
  double log_q_;
};

/// Everything needed to turn health-state time into outcomes.
struct OutcomeModel {
  CostTable costs = CostTable::defaults();
  UtilityTable utilities = UtilityTable::defaults();
  Discounter discounter{0.03};
  MortalityModel mortality;
  std::shared_ptr<const ChainSampler> chain;

  std::string fingerprint() const;
};

/// Accrual of days [from, to) in state `s` for someone born on `birth_day`; discounting relative
/// to `reference`. Age-group changes inside the segment are honoured.
Outcome accrue_state_time(const OutcomeModel& m, Day birth_day, HcvState s, Day from, Day to, Day reference);

/// One-time cost at `day`, discounted relative to `reference`.
Outcome one_time_cost(const OutcomeModel& m, double amount, Day day, Day reference);

/// Where a lifetime sample starts.
struct LifeStart {
  Day age_days = 0;
  HcvState state = HcvState::Susceptible;
  int sojourn_years = 0;
  /// Days already spent in the acute phase.
  Day acute_elapsed = 0;
  /// Days until the next annual chain step.
  Day days_to_step = kDaysPerYear;
  bool charge_entry_cost = false;
};

/// Exact segment-based lifetime simulator: death age sampled once, chain stepped on
/// anniversaries, accrual in closed form. Outcomes are discounted to the start.
Outcome simulate_lifetime(const OutcomeModel& m, const LifeStart& start, Rng& rng);

/// Daily continuation of an agent from `from_day` until death or the maximum age:
/// daily Bernoulli non-DRD death, acute resolution, anniversary progression, daily accrual.
Outcome ia_continue(const OutcomeModel& m, const Agent& agent, Day from_day, Day reference, Rng& rng);

/// Start states of repository cells; CuredNonCirrhotic shares the clean cell.
inline constexpr std::array<HcvState, 11> kRepositoryStates = {
    HcvState::Susceptible, HcvState::Acute, HcvState::F0,  HcvState::F1, HcvState::F2,  HcvState::F3,
    HcvState::F4,          HcvState::DC,    HcvState::HCC, HcvState::LT, HcvState::SVR2};
inline constexpr int kRepositoryStateCount = static_cast<int>(kRepositoryStates.size());
int repository_state_index(HcvState s);

struct RepositoryParams {
  std::int64_t cohort_size = 1'000'000;
  int per_cell_floor = 1000;
  double growth_rate = 0.009;
  std::uint64_t seed = 20240101;
  int threads = 0;
};

/// Per (single year of age, start state) samples of lifetime outcomes, discounted to the
/// sample start. Entry cost of the start state is not included.
class OutcomesRepository {
 public:
  using Samples = Eigen::Array<float, kOutcomeFields, Eigen::Dynamic>;

  static OutcomesRepository build(const OutcomeModel& m, const RepositoryParams& p);
  static OutcomesRepository load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const Samples& cell(int age_year, int state_index) const;
  Outcome draw(int age_year, HcvState s, Rng& rng) const;
  Outcome cell_mean(int age_year, int state_index) const;
  std::size_t total_samples() const;

  std::uint64_t hash() const { return hash_; }
  double build_seconds() const { return build_seconds_; }

 private:
  std::vector<Samples> cells_;
  std::uint64_t hash_ = 0;
  double build_seconds_ = 0.0;
};

/// Hash of every input that shapes repository samples.
std::uint64_t repository_hash(const OutcomeModel& m, const RepositoryParams& p);

enum class Estimator : std::uint8_t { None, IA, OA };
std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

/// Per-agent outcome bookkeeping for one estimator. Accrual is lazy: callers call
/// accrue_to before every state change.
class OutcomeTracker {
 public:
  OutcomeTracker() = default;
  OutcomeTracker(std::shared_ptr<const OutcomeModel> model, std::shared_ptr<const OutcomesRepository> repo,
                 Estimator estimator, Day reference, bool oa_age_plus_one = false);

  Estimator estimator() const { return estimator_; }
  bool in_scope(AgentId id) const;
  void enter(const Agent& a, Day day, Rng& rng);
  void accrue_to(const Agent& a, Day day);
  /// One-time cost. `outside_repository` marks costs the repository cannot know about (drug
  /// courses); under OA they are also added to the pending lifetime total.
  void charge(const Agent& a, double amount, Day day, bool outside_repository = false);
  /// After an infection-status change (infection, acute resolution, cure).
  void status_flip(const Agent& a, Day day, Rng& rng);
  void mark_chronic(const Agent& a);
  /// Lifetime outcome of one agent once the ABM horizon `end_day` is reached or it died.
  Outcome finalize(const Agent& a, Day end_day, Rng& rng);

  std::size_t scope_count() const { return scope_count_; }
  std::size_t chronic_count() const { return chronic_count_; }
  bool chronic(AgentId id) const;
  const Outcome& accumulated(AgentId id) const;

 private:
  struct Entry {
    bool in_scope = false;
    bool chronic = false;
    Day last_day = 0;
    Outcome accumulated = Outcome::Zero();
    Outcome pending = Outcome::Zero();
  };
  Entry& entry(AgentId id);
  Outcome allocate(const Agent& a, Day day, Rng& rng) const;

  std::shared_ptr<const OutcomeModel> model_;
  std::shared_ptr<const OutcomesRepository> repo_;
  Estimator estimator_ = Estimator::None;
  Day reference_ = 0;
  bool plus_one_ = false;
  std::vector<Entry> entries_;
  std::size_t scope_count_ = 0;
  std::size_t chronic_count_ = 0;
};

/// Net monetary benefit k (q_n - q_s) - (c_n - c_s).
double nmb(double q_n, double q_s, double c_n, double c_s, double k);

/// NMB of each grid point against the previous one; needs a strictly increasing grid of >= 2 points.
std::vector<double> incremental_nmb_curve(std::span<const double> uptakes, std::span<const double> qalys,
                                          std::span<const double> costs, double k);

/// Uptake (grid[1..]) whose incremental NMB is the smallest value >= threshold.
std::optional<double> critical_uptake(std::span<const double> uptakes, std::span<const double> series,
                                      double threshold);

struct LevelSummary {
  Outcome population = Outcome::Zero();
  std::optional<Outcome> patient;
};

LevelSummary summarize_levels(const Outcome& scope_total, std::size_t scope_count, const Outcome& patient_total,
                              std::size_t patient_count);

/// Synthetic cohort used to compare the two estimators on identical horizon paths.
struct SyntheticCohortSpec {
  int size = 50000;
  double infected_share = 0.10;
  int horizon_years = 10;
  double annual_treat_probability = 0.0;
  double growth_rate = 0.009;
  std::uint64_t seed = 7;
};

struct EstimatorRun {
  Outcome mean = Outcome::Zero();
  double seconds = 0.0;
};

EstimatorRun run_synthetic_cohort(std::shared_ptr<const OutcomeModel> model,
                                  std::shared_ptr<const OutcomesRepository> repo, Estimator estimator,
                                  const SyntheticCohortSpec& spec, const SvrTable& svr);

}  // namespace hcvsim
