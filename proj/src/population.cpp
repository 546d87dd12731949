#include "hcvsim/population.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace hcvsim {

double annual_to_daily(double annual_probability) {
  require(is_probability(annual_probability), "annual probability out of [0,1]");
  if (annual_probability >= 1.0) return 1.0;
  return -std::expm1(std::log1p(-annual_probability) / kDaysPerYear);
}

MortalityModel::MortalityModel(double young_annual, double old_annual, double split_age_years)
    : young_(young_annual), old_(old_annual), split_age_(split_age_years) {
  require(is_probability(young_annual) && is_probability(old_annual), "mortality levels out of [0,1]");
  require(split_age_years > 0.0 && split_age_years < kMaxAgeYears, "mortality split age out of range");
  young_daily_ = annual_to_daily(young_);
  old_daily_ = annual_to_daily(old_);
}

MortalityModel MortalityModel::solve(double mean_annual, double ratio, double split_age_years, double age_lo,
                                     double age_hi) {
  require(age_hi > age_lo, "empty age range");
  require(ratio > 0.0, "mortality ratio must be positive");
  const double below = std::clamp(split_age_years, age_lo, age_hi) - age_lo;
  const double above = age_hi - std::clamp(split_age_years, age_lo, age_hi);
  const double young = mean_annual * (age_hi - age_lo) / (below + ratio * above);
  return MortalityModel(young, ratio * young, split_age_years);
}

double MortalityModel::mean_annual_uniform(double lo, double hi) const {
  const double s = std::clamp(split_age_, lo, hi);
  return (young_ * (s - lo) + old_ * (hi - s)) / (hi - lo);
}

Day MortalityModel::sample_death_age(Day age_days, Rng& rng) const {
  const Day split = static_cast<Day>(std::llround(split_age_ * kDaysPerYear));
  Day age = age_days;
  if (age < split) {
    const std::int64_t k = rng.geometric(young_daily_);
    if (k < split - age) return std::min<Day>(age + k, kMaxAgeDays);
    age = split;
  }
  const std::int64_t k = rng.geometric(old_daily_);
  if (k >= kMaxAgeDays - age) return kMaxAgeDays;
  return age + k;
}

double MortalityModel::survival(Day from_days, Day to_days) const {
  if (to_days <= from_days) return 1.0;
  if (to_days > kMaxAgeDays) return 0.0;
  const Day split = static_cast<Day>(std::llround(split_age_ * kDaysPerYear));
  const Day young_days = std::max<Day>(0, std::min(to_days, split) - from_days);
  const Day old_days = (to_days - from_days) - young_days;
  return std::pow(1.0 - young_daily_, static_cast<double>(young_days)) *
         std::pow(1.0 - old_daily_, static_cast<double>(old_days));
}

double MortalityModel::life_expectancy(Day age_days) const {
  double total = 0.0;
  for (Day d = age_days + 1; d <= kMaxAgeDays; ++d) total += survival(age_days, d);
  return total / kDaysPerYear;
}

Eigen::VectorXd MortalityModel::stable_age_weights(double growth_rate) const {
  Eigen::VectorXd w(kMaxAgeYears);
  for (int a = 0; a < kMaxAgeYears; ++a) {
    const Day mid = static_cast<Day>(a) * kDaysPerYear + kDaysPerYear / 2;
    w(a) = std::exp(-growth_rate * (a + 0.5)) * survival(0, mid);
  }
  return w / w.sum();
}

std::string MortalityModel::fingerprint() const {
  std::ostringstream out;
  out << std::setprecision(17) << "mortality:" << young_ << ',' << old_ << ',' << split_age_;
  return out.str();
}

Agent& Population::add(Day birth_day, Day death_day) {
  const auto id = static_cast<AgentId>(agents_.size());
  Agent a;
  a.id = id;
  a.birth_day = birth_day;
  a.death_day = death_day;
  agents_.push_back(a);
  living_pos_.push_back(static_cast<std::int32_t>(living_.size()));
  living_.push_back(id);
  idu_pos_.push_back(-1);
  if (death_day >= 0 && death_day < static_cast<Day>(death_calendar_.size())) {
    death_calendar_[static_cast<std::size_t>(death_day)].push_back(id);
  }
  return agents_.back();
}

void Population::kill(AgentId id, Day /*today*/) {
  Agent& a = (*this)[id];
  if (!a.alive) return;
  a.alive = false;
  if (a.idu) {
    remove_idu(id);
    a.idu = false;
  }
  const auto pos = static_cast<std::size_t>(living_pos_[static_cast<std::size_t>(id)]);
  const AgentId last = living_.back();
  living_[pos] = last;
  living_pos_[static_cast<std::size_t>(last)] = static_cast<std::int32_t>(pos);
  living_.pop_back();
  living_pos_[static_cast<std::size_t>(id)] = -1;
}

void Population::sample_living(std::size_t k, Rng& rng, std::vector<AgentId>& out) {
  out.clear();
  const std::size_t n = living_.size();
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(n) - 1));
    std::swap(living_[i], living_[j]);
    living_pos_[static_cast<std::size_t>(living_[i])] = static_cast<std::int32_t>(i);
    living_pos_[static_cast<std::size_t>(living_[j])] = static_cast<std::int32_t>(j);
    out.push_back(living_[i]);
  }
}

std::span<const AgentId> Population::deaths_on(Day day) const {
  if (day < 0 || day >= static_cast<Day>(death_calendar_.size())) return {};
  return death_calendar_[static_cast<std::size_t>(day)];
}

void Population::add_idu(AgentId id) {
  auto& pos = idu_pos_[static_cast<std::size_t>(id)];
  if (pos >= 0) return;
  pos = static_cast<std::int32_t>(idus_.size());
  idus_.push_back(id);
}

void Population::remove_idu(AgentId id) {
  auto& pos = idu_pos_[static_cast<std::size_t>(id)];
  if (pos < 0) return;
  const AgentId last = idus_.back();
  idus_[static_cast<std::size_t>(pos)] = last;
  idu_pos_[static_cast<std::size_t>(last)] = pos;
  idus_.pop_back();
  pos = -1;
}

Population init_cohort(const CohortSpec& spec, const DemographyParams& demo, Day horizon_days, Rng& rng) {
  require(spec.size > 0, "cohort size must be positive");
  require(spec.idu_count >= 0 && spec.infected_count >= 0, "negative initial counts");
  require(spec.idu_count + spec.infected_count <= spec.size, "initial IDU and infected counts exceed cohort size");
  require(spec.age_lo >= 0.0 && spec.age_hi <= kMaxAgeYears && spec.age_lo < spec.age_hi, "bad initial age range");

  Population pop(horizon_days);
  const Day lo = static_cast<Day>(std::llround(spec.age_lo * kDaysPerYear));
  const Day hi = static_cast<Day>(std::llround(spec.age_hi * kDaysPerYear)) - 1;
  for (int i = 0; i < spec.size; ++i) {
    const Day age = rng.uniform_int(lo, hi);
    const Day death_age = demo.mortality.sample_death_age(age, rng);
    Agent& a = pop.add(-age, death_age - age);
    a.employed = rng.bernoulli(demo.employment_probability);
    a.employment_drawn = true;
  }

  std::vector<AgentId> young;
  for (const Agent& a : pop.agents()) {
    if (age_years(a.age_days(0)) < spec.idu_max_age) young.push_back(a.id);
  }
  require(static_cast<int>(young.size()) >= spec.idu_count, "too few agents young enough to be initial IDUs");
  rng.shuffle(std::span<AgentId>(young));
  for (int i = 0; i < spec.idu_count; ++i) {
    Agent& a = pop[young[static_cast<std::size_t>(i)]];
    a.idu = true;
    a.ever_idu = true;
    a.idu_until_day = spec.idu_duration_days;
    pop.add_idu(a.id);
  }

  std::vector<AgentId> all(pop.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<AgentId>(i);
  for (int i = 0; i < spec.infected_count; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(i, static_cast<std::int64_t>(all.size()) - 1));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
    Agent& a = pop[all[static_cast<std::size_t>(i)]];
    InfectionRecord r;
    r.state = HcvState::F0;
    r.state_entry_day = 0;
    r.infection_day = 0;
    r.chain_origin_day = 0;
    r.genotype = assign_genotype(rng);
    a.infection = r;
    a.ever_infected = true;
    a.ever_chronic = true;
  }
  return pop;
}

DemographicEvents step_demographics(Population& pop, Day day, const DemographyParams& demo, Rng& rng) {
  DemographicEvents ev;
  for (AgentId id : pop.deaths_on(day)) {
    if (!pop[id].alive) continue;
    pop.kill(id, day);
    ev.deaths.push_back(id);
  }
  const double p_birth = annual_to_daily(demo.birth_rate);
  const auto births = rng.binomial(static_cast<std::int64_t>(pop.alive_count()), p_birth);
  for (std::int64_t b = 0; b < births; ++b) {
    const Day death_age = demo.mortality.sample_death_age(0, rng);
    Agent& a = pop.add(day, day + std::max<Day>(death_age, 1));
    ev.births.push_back(a.id);
  }
  return ev;
}

}  // namespace hcvsim
