#include <cmath>

#include "doctest.h"

#include "hcvsim/population.hpp"
#include "hcvsim/transmission.hpp"

using namespace hcvsim;

namespace {

ProcedureRates table_rates() { return {2.9, 0.023, 0.009, 0.982}; }

AgentId add_agent(Population& pop, bool infectious) {
  Agent& a = pop.add(-30 * kDaysPerYear, 100000);
  if (infectious) {
    InfectionRecord r;
    r.state = HcvState::F1;
    a.infection = r;
    a.ever_infected = true;
  }
  return a.id;
}

}  // namespace

TEST_CASE("daily medical visit probability from annual procedure rates") {
  CHECK(derive_q_v_med(2.9, 0.023, 0.009, 0.982) == doctest::Approx(3.914 / 360.0).epsilon(1e-12));
  CHECK(std::abs(derive_q_v_med(2.9, 0.023, 0.009, 0.982) - 0.0108) < 1e-4);
  CHECK(derive_q_v_med(0, 0, 0, 0) == 0.0);
  CHECK(derive_q_v_med(360, 0, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("blood transfusion risk and per-visit probability are inverse") {
  CHECK(derive_r_b(0.0064, table_rates(), 0.74) == doctest::Approx(0.806).epsilon(5e-4));
  CHECK(derive_r_b(0.0, table_rates(), 0.74) == 0.0);
  for (double r_b : {0.1, 0.806, 0.95}) {
    const double q = derive_q_t_med(r_b, table_rates(), 0.74);
    CHECK(std::abs(derive_r_b(q, table_rates(), 0.74) - r_b) < 1e-12);
  }
}

TEST_CASE("IDU conversion split by employment") {
  const auto [q_e, q_ue] = derive_idu_conversion(1.575e-5, 0.26, 0.166);
  CHECK(q_e == doctest::Approx(1.44e-5).epsilon(0.005));
  CHECK(q_ue == doctest::Approx(2.25e-5).epsilon(0.005));
  // closed form: q_e = q_c / ((1 - q_ue_g) + q_ue_I), q_ue = q_e * q_ue_I / q_ue_g
  CHECK(q_e == doctest::Approx(1.575e-5 / (0.834 + 0.26)).epsilon(1e-12));
  CHECK(q_ue == doctest::Approx(q_e * 0.26 / 0.166).epsilon(1e-12));
  CHECK(0.834 * q_e + 0.166 * q_ue == doctest::Approx(1.575e-5).epsilon(1e-12));

  const auto [e2, u2] = derive_idu_conversion(3e-5, 0.2, 0.2);
  CHECK(e2 == doctest::Approx(3e-5));
  CHECK(u2 == doctest::Approx(3e-5));
  const auto [e0, u0] = derive_idu_conversion(0.0, 0.26, 0.166);
  CHECK(e0 == 0.0);
  CHECK(u0 == 0.0);
}

TEST_CASE("safe professional never transmits") {
  Population pop(10);
  std::vector<AgentId> visitors = {add_agent(pop, true), add_agent(pop, false), add_agent(pop, false)};
  MedicalProfessional prof;
  prof.unsafe = false;
  Rng rng(1);
  std::vector<AgentId> infected;
  for (int i = 0; i < 1000; ++i) medical_visits(pop, prof, visitors, 1.0, rng, infected);
  CHECK(infected.empty());
  CHECK_FALSE(prof.contaminated_today);
}

TEST_CASE("contaminated professional infects each susceptible visitor with q_t_med") {
  Population pop(10);
  std::vector<AgentId> visitors;
  for (int i = 0; i < 18; ++i) visitors.push_back(add_agent(pop, false));
  visitors.push_back(add_agent(pop, true));  // order does not matter
  Rng rng(42);
  std::vector<AgentId> infected;
  const int days = 1'000'000;
  for (int d = 0; d < days; ++d) {
    MedicalProfessional prof;
    prof.unsafe = true;
    medical_visits(pop, prof, visitors, 0.0064, rng, infected);
  }
  const double mean = static_cast<double>(infected.size()) / days;
  const double sd = std::sqrt(18 * 0.0064 * (1 - 0.0064) / days);
  CHECK(std::abs(mean - 18 * 0.0064) < 4 * sd);
}

TEST_CASE("needle sharing group") {
  Population pop(10);
  std::vector<AgentId> clean = {add_agent(pop, false), add_agent(pop, false), add_agent(pop, false)};
  Rng rng(8);
  std::vector<AgentId> infected;
  for (int i = 0; i < 10000; ++i) share_needles(pop, clean, 1.0, rng, infected);
  CHECK(infected.empty());

  std::vector<AgentId> mixed = {add_agent(pop, true), add_agent(pop, false), add_agent(pop, false)};
  const int days = 1'000'000;
  for (int i = 0; i < days; ++i) share_needles(pop, mixed, 0.02, rng, infected);
  const double mean = static_cast<double>(infected.size()) / days;
  CHECK(std::abs(mean - 0.04) < 4 * std::sqrt(2 * 0.02 * 0.98 / days));
}

TEST_CASE("conversion delay is geometric in the daily conversion probability") {
  SocialEnvParams p;
  p.q_c_e = 1e-3;
  Rng rng(4);
  const int n = 200000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += static_cast<double>(sample_conversion_delay(true, p, rng));
  const double q = p.daily_conversion(true);
  const double mean = (1 - q) / q;
  CHECK(total / n == doctest::Approx(mean).epsilon(0.02));
}

TEST_CASE("parameter validation") {
  SocialEnvParams s;
  s.q_shar = 0.6;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  MedicalEnvParams m;
  m.q_t_med = 1.5;
  CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("professional count covers the population and the visit load") {
  MedicalEnvParams p;
  CHECK(professional_count(40000, 400, p) == 23);
  CHECK(professional_count(40000, 19 * 30, p) == 30);
  CHECK(professional_count(0, 0, p) == 1);
}
