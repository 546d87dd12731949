#include <cmath>
#include <filesystem>
#include <memory>
#include <vector>

#include "doctest.h"

#include "hcvsim/outcomes.hpp"

using namespace hcvsim;

namespace {

std::shared_ptr<OutcomeModel> small_model() {
  auto m = std::make_shared<OutcomeModel>();
  m->mortality = MortalityModel::solve(0.006, 8.0, 60.0, 23.0, 102.0);
  m->chain = std::make_shared<ChainSampler>(default_transition_model());
  return m;
}

const std::vector<double> kGrid = {0.10, 0.30, 0.50, 0.70, 0.90, 0.95};
const std::vector<double> kPublishedQalys = {23.67, 23.73, 23.78, 23.82, 23.84, 23.84};
const std::vector<double> kPublishedCosts = {12935, 10302, 7899, 5812, 4160, 3780};
constexpr double kWtp = 341901.0;

}  // namespace

TEST_CASE("qaly weight multiplies age and disease utilities") {
  const auto u = UtilityTable::defaults();
  CHECK(qaly_weight(u, age_group(35), HcvState::F4) == doctest::Approx(0.906 * 0.56));
  CHECK(qaly_weight(u, age_group(20), HcvState::Susceptible) == doctest::Approx(0.921));
  CHECK(qaly_weight(u, age_group(85), HcvState::DC) == doctest::Approx(0.753 * 0.44));
  CHECK_THROWS_AS(qaly_weight(u, AgeGroup{7}, HcvState::F0), ValidationError);
}

TEST_CASE("one year in F2 accrues one LY, weighted QALY and the annual cost") {
  OutcomeModel m;
  m.discounter = Discounter(0.0);
  const Day birth = -40 * kDaysPerYear;
  const Outcome o = accrue_state_time(m, birth, HcvState::F2, 0, kDaysPerYear, 0);
  CHECK(o(kLifeYears) == doctest::Approx(1.0));
  CHECK(o(kQalys) == doctest::Approx(0.63 * 0.875));
  CHECK(o(kCost) == doctest::Approx(11000.0));
  CHECK(o(kLifeYearsDisc) == doctest::Approx(1.0));

  // a birthday at 40 splits the segment across two age bands
  const Outcome split = accrue_state_time(m, -(40 * kDaysPerYear - 90), HcvState::F2, 0, kDaysPerYear, 0);
  CHECK(split(kQalys) == doctest::Approx(0.63 * (0.25 * 0.906 + 0.75 * 0.875)));
}

TEST_CASE("entry costs are charged on group changes only") {
  const auto c = CostTable::defaults();
  CHECK(entry_cost(c, HcvState::Acute, HcvState::F0) == 3900);
  CHECK(entry_cost(c, HcvState::F0, HcvState::F1) == 0);
  CHECK(entry_cost(c, HcvState::F3, HcvState::F4) == 2900);
  CHECK(entry_cost(c, HcvState::HCC, HcvState::LT) == 2500000);
  CHECK(entry_cost(c, HcvState::F2, HcvState::CuredNonCirrhotic) == 0);
}

TEST_CASE("discounting") {
  CHECK(discount(1.0, 0.0, 0.03) == 1.0);
  CHECK(discount(123.4, 17.0, 0.0) == 123.4);
  CHECK(discount(1.0, 0.0, 0.03) + discount(1.0, 1.0, 0.03) == doctest::Approx(1.970873786).epsilon(1e-9));
  CHECK(discount(100, 2, 0.03) < discount(100, 1, 0.03));
  CHECK_THROWS_AS(discount(1.0, -1.0, 0.03), ValidationError);

  const Discounter d(0.03);
  CHECK(d.factor(kDaysPerYear) == doctest::Approx(1 / 1.03).epsilon(1e-14));
  double brute = 0.0;
  for (Day t = 100; t < 900; ++t) brute += d.factor(t);
  CHECK(d.segment(100, 900) == doctest::Approx(brute).epsilon(1e-11));
  CHECK(d.segment(0, 400) == doctest::Approx(d.segment(0, 123) + d.segment(123, 400)).epsilon(1e-13));
  CHECK(Discounter(0.0).segment(5, 50) == 45.0);
}

TEST_CASE("net monetary benefit") {
  CHECK(std::abs(nmb(23.78, 23.67, 7899, 12935, kWtp) - 42645) <= 1.0);
  CHECK(std::abs(nmb(23.73, 23.67, 10302, 12935, kWtp) - 23147) <= 1.0);
  CHECK(nmb(20, 20, 5, 5, kWtp) == 0.0);
  CHECK(nmb(1.5, 2.0, 30, 10, 1000) == doctest::Approx(-nmb(2.0, 1.5, 10, 30, 1000)));
}

TEST_CASE("incremental NMB and critical uptake on the reference grid") {
  const auto s = incremental_nmb_curve(kGrid, kPublishedQalys, kPublishedCosts, kWtp);
  const std::vector<double> expected = {23147, 19498, 15763, 8490, 380};
  REQUIRE(s.size() == expected.size());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i] - expected[i]) <= 1.0);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] < s[i - 1]);

  const std::vector<double> upper(kGrid.begin() + 1, kGrid.end());
  CHECK(critical_uptake(upper, s, 0.0).value() == 0.95);
  CHECK(critical_uptake(upper, s, 10000.0).value() == 0.70);
  const std::vector<double> negative = {-1, -2, -3, -4, -5};
  CHECK_FALSE(critical_uptake(upper, negative, 0.0).has_value());

  const std::vector<double> flat_q(6, 23.0), flat_c(6, 100.0);
  for (double v : incremental_nmb_curve(kGrid, flat_q, flat_c, kWtp)) CHECK(v == 0.0);

  const std::vector<double> dup = {0.1, 0.1, 0.3};
  const std::vector<double> three(3, 1.0);
  CHECK_THROWS_AS(incremental_nmb_curve(dup, three, three, kWtp), ValidationError);
  CHECK_THROWS_AS(incremental_nmb_curve(std::vector<double>{0.1}, std::vector<double>{1.0},
                                        std::vector<double>{1.0}, kWtp),
                  ValidationError);
}

TEST_CASE("summaries by level") {
  Outcome total = Outcome::Constant(10.0);
  const auto s = summarize_levels(total, 4, Outcome::Zero(), 0);
  CHECK(s.population(kCost) == 2.5);
  CHECK_FALSE(s.patient.has_value());
  CHECK_THROWS_AS(summarize_levels(total, 0, total, 1), AnalysisError);
}

TEST_CASE("repository draws come from the addressed cell") {
  auto model = small_model();
  RepositoryParams p;
  p.cohort_size = 4000;
  p.per_cell_floor = 8;
  p.seed = 11;
  p.threads = 1;
  const auto repo = OutcomesRepository::build(*model, p);
  for (int age : {0, 35, 101}) {
    for (int s = 0; s < kRepositoryStateCount; ++s) CHECK(repo.cell(age, s).cols() >= 8);
  }

  const int cell = repository_state_index(HcvState::F3);
  const auto& samples = repo.cell(45, cell);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Outcome o = repo.draw(45, HcvState::F3, rng);
    bool found = false;
    for (Eigen::Index c = 0; c < samples.cols() && !found; ++c) {
      found = (samples.col(c).cast<double>() - o).abs().maxCoeff() == 0.0;
    }
    CHECK(found);
  }
  CHECK(repository_state_index(HcvState::CuredNonCirrhotic) == repository_state_index(HcvState::Susceptible));

  const auto path = std::filesystem::temp_directory_path() / "hcvsim_repo_roundtrip.bin";
  repo.save(path);
  const auto back = OutcomesRepository::load(path);
  CHECK(back.hash() == repo.hash());
  CHECK(back.total_samples() == repo.total_samples());
  CHECK((back.cell(45, cell) == samples).all());
  std::filesystem::remove(path);
}

TEST_CASE("lifetime samples respect QALY <= LY and age cap") {
  auto model = small_model();
  Rng rng(19);
  for (int i = 0; i < 2000; ++i) {
    LifeStart start;
    start.age_days = rng.uniform_int(0, kMaxAgeDays - 1);
    start.state = kRepositoryStates[static_cast<std::size_t>(rng.uniform_int(0, kRepositoryStateCount - 1))];
    const Outcome o = simulate_lifetime(*model, start, rng);
    CHECK(o(kQalys) <= o(kLifeYears) + 1e-12);
    CHECK(o(kLifeYearsDisc) <= o(kLifeYears) + 1e-12);
    CHECK(o(kLifeYears) <= age_years(kMaxAgeDays - start.age_days) + 1e-9);
  }
}

TEST_CASE("OA without status changes returns the entry allocation") {
  auto model = small_model();
  RepositoryParams p;
  p.cohort_size = 2000;
  p.per_cell_floor = 4;
  p.threads = 1;
  auto repo = std::make_shared<OutcomesRepository>(OutcomesRepository::build(*model, p));
  Population pop;
  Agent& a = pop.add(-30 * kDaysPerYear, 100000);
  OutcomeTracker oa(model, repo, Estimator::OA, 0);
  Rng r1(5), r2(5);
  oa.enter(a, 0, r1);
  oa.accrue_to(a, 700);
  const Outcome expected = repo->draw(30, HcvState::Susceptible, r2);
  const Outcome got = oa.finalize(a, 3600, r1);
  CHECK((got - expected).abs().maxCoeff() == doctest::Approx(0.0));

  OutcomeTracker ia(model, repo, Estimator::IA, 0);
  ia.enter(a, 0, r1);
  ia.accrue_to(a, kDaysPerYear);
  CHECK(ia.accumulated(a.id)(kLifeYears) == doctest::Approx(1.0));
}
