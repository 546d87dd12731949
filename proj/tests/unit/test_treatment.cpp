#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "hcvsim/population.hpp"
#include "hcvsim/treatment.hpp"

using namespace hcvsim;

namespace {

AgentId chronic_agent(Population& pop, HcvState s, Genotype g = Genotype::G3) {
  Agent& a = pop.add(-40 * kDaysPerYear, 100000);
  InfectionRecord r;
  r.state = s;
  r.genotype = g;
  a.infection = r;
  a.ever_infected = true;
  a.ever_chronic = true;
  return a.id;
}

}  // namespace

TEST_CASE("annual plan on the worked example") {
  const std::vector<double> infections = {100, 20, 16, 12, 8, 4};
  const auto l = annual_plan(0.7, 0.4, 5, infections);
  const std::vector<double> assigned = {70, 14, 11.2, 8.4, 5.6, 2.8};
  const std::vector<double> coverage = {0.4, 0.52, 0.64, 0.76, 0.88, 1.0};
  // printed[j][i]: treated at period j among infections created at i, rounded to two or three decimals
  const double printed[6][6] = {{28.00, 0, 0, 0, 0, 0},
                                {21.84, 7.28, 0, 0, 0, 0},
                                {12.90, 4.30, 7.17, 0, 0, 0},
                                {5.52, 1.84, 3.06, 6.384, 0, 0},
                                {1.53, 0.51, 0.85, 1.774, 4.93, 0},
                                {0.21, 0.07, 0.12, 0.242, 0.67, 2.80}};
  for (int j = 0; j < 6; ++j) {
    CHECK(l.coverage(j) == doctest::Approx(coverage[j]).epsilon(1e-12));
    CHECK(l.assigned(j) == doctest::Approx(assigned[j]).epsilon(1e-12));
    double row = 0.0;
    for (int i = 0; i < 6; ++i) {
      CHECK(std::abs(l.per_cohort(i, j) - printed[j][i]) <= 0.0051);
      row += printed[j][i];
    }
    CHECK(std::abs(l.treated(j) - row) < 0.02);
  }
  CHECK(std::abs(l.per_cohort(0, 2) - 0.64 * 0.48 * 42.0) < 1e-12);
  CHECK(l.backlog(5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l.treated.sum() == doctest::Approx(112.0).epsilon(1e-12));
  CHECK(verify_uptake_identity(l));
}

TEST_CASE("degenerate plans") {
  const std::vector<double> infections = {10, 5, 5, 3};
  const auto zero = annual_plan(0.0, 0.3, 3, infections);
  CHECK(zero.treated.isZero());
  CHECK(zero.per_cohort.isZero());
  const auto full = annual_plan(0.6, 1.0, 3, infections);
  for (int j = 0; j < 4; ++j) CHECK(full.treated(j) == doctest::Approx(0.6 * infections[j]));
  CHECK_THROWS_AS(annual_plan(0.5, 0.3, 3, std::vector<double>{1, 2}), ValidationError);
  CHECK_THROWS_AS(annual_plan(1.5, 0.3, 1, std::vector<double>{1, 2}), ValidationError);
}

TEST_CASE("broken conservation is detected") {
  auto l = annual_plan(0.7, 0.4, 5, std::vector<double>{100, 20, 16, 12, 8, 4});
  l.per_cohort(5, 5) *= 0.5;
  l.treated(5) *= 0.5;
  CHECK_FALSE(verify_uptake_identity(l));
}

TEST_CASE("camp schedules") {
  TreatmentModel m;
  m.intervention_years = 10;
  m.kind = TreatmentModelKind::Annual;
  CHECK(m.camp_years().empty());
  m.kind = TreatmentModelKind::T0;
  CHECK(m.camp_years() == std::vector<int>{0});
  m.kind = TreatmentModelKind::End;
  CHECK(m.camp_years() == std::vector<int>{10});
  m.kind = TreatmentModelKind::Twice;
  CHECK(m.camp_years() == std::vector<int>{5, 10});
  m.kind = TreatmentModelKind::Thrice;
  CHECK(m.camp_years() == std::vector<int>{3, 6, 10});
  m.kind = TreatmentModelKind::TwiceEarly;
  CHECK(m.camp_years() == std::vector<int>{0, 5});
  m.kind = TreatmentModelKind::ThriceEarly;
  CHECK(m.camp_years() == std::vector<int>{0, 3, 6});
  for (const char* name : {"Annual", "T0", "End", "Twice", "Thrice", "TwiceEarly", "ThriceEarly"}) {
    CHECK(to_string(parse_treatment_model(name)) == name);
  }
  CHECK_THROWS_AS(parse_treatment_model("Weekly"), ValidationError);
  CHECK(treatment_day_offset(0) == 0);
  CHECK(treatment_day_offset(1) == 359);
  CHECK(treatment_day_offset(10) == 3599);
}

TEST_CASE("SVR rates by state and genotype") {
  SvrTable t;
  CHECK(t.probability(HcvState::F2, Genotype::G3) == 0.86);
  CHECK(t.probability(HcvState::F4, Genotype::G3) == 0.84);
  CHECK(t.probability(HcvState::F4, Genotype::G1) == 0.86);
  CHECK(t.probability(HcvState::DC, Genotype::G4) == 0.84);
  CHECK_THROWS_AS(t.probability(HcvState::HCC, Genotype::G1), ValidationError);

  Population pop(10);
  Rng rng(77);
  const int n = 1'000'000;
  int cured = 0;
  for (int i = 0; i < n; ++i) {
    const AgentId id = chronic_agent(pop, HcvState::DC, Genotype::G4);
    cured += apply_treatment(pop, id, t, 0, rng) == TreatmentResult::Cured;
  }
  CHECK(std::abs(cured / double(n) - 0.84) < 3 * std::sqrt(0.84 * 0.16 / n));
}

TEST_CASE("eligibility") {
  Population pop(10);
  const AgentId f2 = chronic_agent(pop, HcvState::F2);
  const AgentId acute = chronic_agent(pop, HcvState::Acute);
  const AgentId hcc = chronic_agent(pop, HcvState::HCC);
  const AgentId failed = chronic_agent(pop, HcvState::F1);
  pop[failed].treat_failed = true;
  CHECK(eligible_for_treatment(pop[f2]));
  CHECK_FALSE(eligible_for_treatment(pop[acute]));
  CHECK_FALSE(eligible_for_treatment(pop[hcc]));
  CHECK_FALSE(eligible_for_treatment(pop[failed]));
  std::vector<AgentId> candidates = {acute, failed, hcc};
  Rng rng(3);
  const Selection s = select_for_treatment(pop, candidates, 3.0, rng);
  CHECK(s.chosen.empty());
  CHECK(s.shortfall == 3);
}

TEST_CASE("cure outcomes") {
  SvrTable always{1.0, 1.0, 1.0, 1.0};
  Population pop(10);
  Rng rng(5);
  const AgentId f3 = chronic_agent(pop, HcvState::F3);
  pop[f3].idu = true;
  pop.add_idu(f3);
  CHECK(apply_treatment(pop, f3, always, 10, rng) == TreatmentResult::Cured);
  CHECK_FALSE(pop[f3].infection.has_value());
  CHECK(pop[f3].susceptible());
  CHECK(pop[f3].ever_infected);
  CHECK_FALSE(pop[f3].idu);
  CHECK(pop.idus().empty());

  const AgentId f4 = chronic_agent(pop, HcvState::F4);
  CHECK(apply_treatment(pop, f4, always, 10, rng) == TreatmentResult::Cured);
  REQUIRE(pop[f4].infection.has_value());
  CHECK(pop[f4].infection->state == HcvState::SVR2);
  CHECK_FALSE(pop[f4].viremic());
  CHECK_FALSE(pop[f4].susceptible());

  SvrTable never{0.0, 0.0, 0.0, 0.0};
  const AgentId f1 = chronic_agent(pop, HcvState::F1);
  CHECK(apply_treatment(pop, f1, never, 10, rng) == TreatmentResult::Failed);
  CHECK(pop[f1].treat_failed);
  CHECK_THROWS_AS(apply_treatment(pop, f1, never, 11, rng), ValidationError);
}

TEST_CASE("camp at half uptake over 200 eligible treats 100") {
  Population pop(10);
  std::vector<AgentId> candidates;
  for (int i = 0; i < 200; ++i) candidates.push_back(chronic_agent(pop, HcvState::F1));
  Rng rng(10);
  const Selection s = select_for_treatment(pop, candidates, 0.5 * 200, rng);
  CHECK(s.chosen.size() == 100);
  CHECK(s.shortfall == 0);
  std::vector<AgentId> sorted = s.chosen;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
}

TEST_CASE("fractional demand is rounded stochastically") {
  Population pop(10);
  std::vector<AgentId> candidates;
  for (int i = 0; i < 10; ++i) candidates.push_back(chronic_agent(pop, HcvState::F0));
  Rng rng(11);
  const int n = 100000;
  double total = 0;
  for (int i = 0; i < n; ++i) total += static_cast<double>(select_for_treatment(pop, candidates, 2.3, rng).chosen.size());
  CHECK(total / n == doctest::Approx(2.3).epsilon(0.01));
}

TEST_CASE("effective uptake") {
  CHECK_FALSE(effective_uptake(0, 0).has_value());
  CHECK(*effective_uptake(0, 10) == 0.0);
  CHECK(*effective_uptake(477, 1000) == doctest::Approx(0.477));
}
