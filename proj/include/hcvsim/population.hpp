#pragma once

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcvsim/core.hpp"
#include "hcvsim/natural_history.hpp"
#include "hcvsim/random.hpp"

namespace hcvsim {

/// Non-disease-related mortality: two annual hazard levels split at one age.
class MortalityModel {
 public:
  MortalityModel() = default;
  MortalityModel(double young_annual, double old_annual, double split_age_years);

  /// Levels with old = ratio * young such that the mean annual hazard over
  /// ages uniform on [age_lo, age_hi) equals `mean_annual`.
  static MortalityModel solve(double mean_annual, double ratio, double split_age_years, double age_lo,
                              double age_hi);

  double annual(double age_years) const { return age_years < split_age_ ? young_ : old_; }
  double daily(double age_years) const { return age_years < split_age_ ? young_daily_ : old_daily_; }
  double young_annual() const { return young_; }
  double old_annual() const { return old_; }
  double split_age() const { return split_age_; }

  /// Mean annual hazard over ages uniform on [lo, hi).
  double mean_annual_uniform(double lo, double hi) const;

  /// Age in days at non-DRD death for someone alive at `age_days`; never beyond kMaxAgeDays.
  Day sample_death_age(Day age_days, Rng& rng) const;

  /// Probability of surviving from exact age `from_days` to `to_days`.
  double survival(Day from_days, Day to_days) const;

  /// Expected remaining years from `age_days` (cap at the maximum age included).
  double life_expectancy(Day age_days) const;

  /// Stable-population density over single years of age 0..101 for growth rate r: e^{-ra} S(a).
  Eigen::VectorXd stable_age_weights(double growth_rate) const;

  std::string fingerprint() const;

 private:
  double young_ = 0.0;
  double old_ = 0.0;
  double split_age_ = 60.0;
  double young_daily_ = 0.0;
  double old_daily_ = 0.0;
};

/// 1 - (1 - annual)^(1/360).
double annual_to_daily(double annual_probability);

struct Agent {
  AgentId id = 0;
  Day birth_day = 0;
  /// Scheduled non-DRD death day.
  Day death_day = 0;
  bool alive = true;
  bool employed = false;
  bool employment_drawn = false;
  bool idu = false;
  Day idu_until_day = -1;
  bool ever_idu = false;
  /// Present while infected; kept after a cirrhotic cure (SVR2 keeps progressing).
  std::optional<InfectionRecord> infection;
  /// State of an agent without an infection record: Susceptible or CuredNonCirrhotic.
  HcvState clean_state = HcvState::Susceptible;
  bool ever_infected = false;
  bool ever_chronic = false;
  bool treat_failed = false;
  bool treated = false;
  bool assigned = false;
  /// Bumped whenever pending natural-history events must be discarded.
  int episode = 0;
  int idu_spell = 0;

  Day age_days(Day today) const { return today - birth_day; }
  HcvState state() const { return infection ? infection->state : clean_state; }
  bool viremic() const { return infection && infection->viremic; }
  /// Can contaminate or transmit: viremic in Acute through HCC.
  bool infectious() const {
    if (!viremic()) return false;
    const HcvState s = infection->state;
    return s >= HcvState::Acute && s <= HcvState::HCC;
  }
  bool susceptible() const { return alive && !infection; }
  bool chronic() const {
    if (!viremic()) return false;
    const HcvState s = infection->state;
    return s >= HcvState::F0 && s <= HcvState::LT;
  }
};

struct DemographyParams {
  double birth_rate = 15.0 / 1000.0;
  double death_rate = 6.0 / 1000.0;
  double employment_probability = 1.0 - 0.166;
  MortalityModel mortality;
};

struct DemographicEvents {
  std::vector<AgentId> births;
  std::vector<AgentId> deaths;
};

/// Agent store with an O(1) living list and a per-day death calendar.
class Population {
 public:
  Population() = default;
  explicit Population(Day horizon_days) : death_calendar_(static_cast<std::size_t>(horizon_days) + 1) {}

  /// Adds a living agent and schedules its non-DRD death.
  Agent& add(Day birth_day, Day death_day);
  void kill(AgentId id, Day today);

  Agent& operator[](AgentId id) { return agents_[static_cast<std::size_t>(id)]; }
  const Agent& operator[](AgentId id) const { return agents_[static_cast<std::size_t>(id)]; }

  std::size_t size() const { return agents_.size(); }
  std::size_t alive_count() const { return living_.size(); }
  std::span<const AgentId> living() const { return living_; }
  const std::vector<Agent>& agents() const { return agents_; }
  Day horizon() const { return static_cast<Day>(death_calendar_.size()) - 1; }

  /// `k` distinct living agents, uniformly, via a partial Fisher-Yates over the living list.
  void sample_living(std::size_t k, Rng& rng, std::vector<AgentId>& out);

  /// Agents whose scheduled death is `day` (some may already be dead).
  std::span<const AgentId> deaths_on(Day day) const;

  void add_idu(AgentId id);
  void remove_idu(AgentId id);
  std::span<const AgentId> idus() const { return idus_; }

 private:
  std::vector<Agent> agents_;
  std::vector<AgentId> living_;
  std::vector<std::int32_t> living_pos_;
  std::vector<AgentId> idus_;
  std::vector<std::int32_t> idu_pos_;
  std::vector<std::vector<AgentId>> death_calendar_;
};

struct CohortSpec {
  int size = 40000;
  int idu_count = 15;
  int infected_count = 5;
  double age_lo = 23.0;
  double age_hi = 102.0;
  /// IDU spells of the initial IDUs.
  int idu_duration_days = 3 * kDaysPerYear;
  /// Initial IDUs are drawn from agents no older than this.
  double idu_max_age = 32.0;
};

/// Initial cohort at day 0: uniform ages, initial IDUs and F0 seed infections.
/// Infections get genotypes and a chain origin of day 0; progression events are the caller's job.
Population init_cohort(const CohortSpec& spec, const DemographyParams& demo, Day horizon_days, Rng& rng);

/// Deaths scheduled for `day`, then Binomial births at the daily birth probability.
DemographicEvents step_demographics(Population& pop, Day day, const DemographyParams& demo, Rng& rng);

}  // namespace hcvsim
