#include <cmath>

#include "doctest.h"

#include "hcvsim/engine.hpp"
#include "hcvsim/population.hpp"

using namespace hcvsim;

TEST_CASE("age bands include their lower bound") {
  CHECK(age_group(0.0).index == 0);
  CHECK(age_group(29.9).index == 0);
  CHECK(age_group(30.0).index == 1);
  CHECK(age_group(59.99).index == 3);
  CHECK(age_group(83.0).index == 6);
  CHECK(age_group(101.9).index == 6);
  CHECK_THROWS_AS(age_group(-1.0), ValidationError);
}

TEST_CASE("solved mortality levels keep the aggregate rate and the 8:1 shape") {
  const auto m = MortalityModel::solve(0.006, 8.0, 60.0, 23.0, 102.0);
  CHECK(m.old_annual() / m.young_annual() == doctest::Approx(8.0));
  // (37 young years * y + 42 old years * 8y) / 79 = 0.006
  const double young = 0.006 * 79.0 / (37.0 + 8.0 * 42.0);
  CHECK(m.young_annual() == doctest::Approx(young).epsilon(1e-12));
  CHECK(std::abs(m.mean_annual_uniform(23.0, 102.0) - 0.006) < 1e-6);
  CHECK(m.annual(59.9) == m.young_annual());
  CHECK(m.annual(60.0) == m.old_annual());
}

TEST_CASE("annual to daily hazard compounds back to the annual probability") {
  for (double p : {0.0, 0.001, 0.006, 0.2}) {
    CHECK(1.0 - std::pow(1.0 - annual_to_daily(p), 360.0) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(annual_to_daily(1.0) == 1.0);
}

TEST_CASE("default cohort has 40000 agents, 15 IDUs and 5 infected") {
  SimConfig c;
  const DemographyParams demo = c.demography();
  Rng rng(3);
  CohortSpec spec;
  Population pop = init_cohort(spec, demo, 3600, rng);
  CHECK(pop.size() == 40000);
  CHECK(pop.idus().size() == 15);
  int infected = 0;
  int employed = 0;
  for (const Agent& a : pop.agents()) {
    infected += a.infection.has_value();
    employed += a.employed;
    CHECK(a.age_days(0) >= 23 * kDaysPerYear);
    CHECK(a.age_days(0) < 102 * kDaysPerYear);
    if (a.infection) CHECK(a.infection->state == HcvState::F0);
    if (a.idu) CHECK(age_years(a.age_days(0)) < 32.0);
  }
  CHECK(infected == 5);
  // binomial 3 sigma around 1 - 0.166
  const double sigma = std::sqrt(40000 * 0.834 * 0.166);
  CHECK(std::abs(employed - 40000 * 0.834) < 3.0 * sigma);
}

TEST_CASE("cohort counts beyond the cohort size are rejected") {
  SimConfig c;
  Rng rng(1);
  CohortSpec spec;
  spec.size = 10;
  spec.idu_count = 6;
  spec.infected_count = 5;
  CHECK_THROWS_AS(init_cohort(spec, c.demography(), 10, rng), ValidationError);
}

TEST_CASE("one year of deaths on a closed cohort matches a Bernoulli oracle") {
  SimConfig c;
  DemographyParams demo = c.demography();
  demo.birth_rate = 0.0;
  CohortSpec spec;
  spec.age_hi = 100.0;  // nobody reaches the age cap within the year
  spec.idu_count = 0;
  spec.infected_count = 0;
  Rng rng(17);
  Population pop = init_cohort(spec, demo, 400, rng);
  const double y = demo.mortality.annual(30.0);
  const double o = demo.mortality.annual(70.0);
  double expected = 0.0;
  double variance = 0.0;
  for (const Agent& a : pop.agents()) {
    const double age = age_years(a.age_days(0));
    double p;
    if (age >= 60.0) {
      p = o;
    } else if (age + 1.0 <= 60.0) {
      p = y;
    } else {
      const double f = 60.0 - age;
      p = 1.0 - std::pow(1.0 - y, f) * std::pow(1.0 - o, 1.0 - f);
    }
    expected += p;
    variance += p * (1.0 - p);
  }
  std::size_t deaths = 0;
  for (Day d = 0; d < kDaysPerYear; ++d) deaths += step_demographics(pop, d, demo, rng).deaths.size();
  CHECK(std::abs(static_cast<double>(deaths) - expected) < 3.0 * std::sqrt(variance));
  CHECK(expected == doctest::Approx(40000 * 0.006).epsilon(0.05));
}

TEST_CASE("no births and no deaths keeps the population constant") {
  DemographyParams demo;
  demo.birth_rate = 0.0;
  demo.mortality = MortalityModel(0.0, 0.0, 60.0);
  CohortSpec spec;
  spec.size = 2000;
  spec.age_hi = 80.0;
  spec.idu_count = 0;
  spec.infected_count = 0;
  Rng rng(5);
  Population pop = init_cohort(spec, demo, 3600, rng);
  for (Day d = 0; d < 3600; ++d) {
    const auto ev = step_demographics(pop, d, demo, rng);
    REQUIRE(ev.births.empty());
    REQUIRE(ev.deaths.empty());
  }
  CHECK(pop.alive_count() == 2000);
}

TEST_CASE("births minus deaths equals the population change every day") {
  SimConfig c;
  CohortSpec spec;
  spec.size = 5000;
  Rng rng(9);
  const DemographyParams demo = c.demography();
  Population pop = init_cohort(spec, demo, 720, rng);
  for (Day d = 0; d < 720; ++d) {
    const auto before = static_cast<long>(pop.alive_count());
    const auto ev = step_demographics(pop, d, demo, rng);
    REQUIRE(static_cast<long>(pop.alive_count()) - before ==
            static_cast<long>(ev.births.size()) - static_cast<long>(ev.deaths.size()));
  }
}

TEST_CASE("death ages respect the age cap and the hazard") {
  const MortalityModel m(0.01, 0.08, 60.0);
  Rng rng(2);
  const int n = 200000;
  int within_year = 0;
  for (int i = 0; i < n; ++i) {
    const Day death = m.sample_death_age(30 * kDaysPerYear, rng);
    REQUIRE(death >= 30 * kDaysPerYear);
    REQUIRE(death <= kMaxAgeDays);
    within_year += death < 31 * kDaysPerYear;
  }
  CHECK(std::abs(within_year - n * 0.01) < 3.0 * std::sqrt(n * 0.01 * 0.99));
  CHECK(m.sample_death_age(kMaxAgeDays - 1, rng) <= kMaxAgeDays);
  CHECK(m.survival(0, kMaxAgeDays + 1) == 0.0);
}
