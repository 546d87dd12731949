#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "hcvsim/natural_history.hpp"

using namespace hcvsim;

namespace {

double three_sigma(double p, int n) { return 3.0 * std::sqrt(p * (1 - p) / n); }

double step_share(const ChainSampler& chain, HcvState from, HcvState to, int sojourn, int n, Rng& rng) {
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    InfectionRecord r;
    r.state = from;
    r.sojourn_years_in_state = sojourn;
    progress_one_year(r, 0, chain, rng);
    hits += r.state == to;
  }
  return static_cast<double>(hits) / n;
}

}  // namespace

TEST_CASE("transition rows sum to one and LRD is absorbing") {
  const auto m = default_transition_model();
  for (const auto& regime : m.regime) {
    for (int i = 0; i < kChainSize; ++i) CHECK(regime.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    const int lrd = chain_index(HcvState::LRD);
    CHECK(regime(lrd, lrd) == 1.0);
  }
  const ChainSampler chain(m);
  const StepCdf& lrd = chain.cdf(HcvState::LRD, SojournRegime::FirstYear);
  CHECK(lrd.size == 1);
  CHECK(lrd.sample(0.999) == HcvState::LRD);
}

TEST_CASE("F4 step CDF") {
  const ChainSampler chain(default_transition_model());
  const StepCdf& f4 = chain.cdf(HcvState::F4, SojournRegime::FirstYear);
  REQUIRE(f4.size == 3);
  CHECK(f4.successor[0] == HcvState::DC);
  CHECK(f4.cumulative[0] == doctest::Approx(0.039));
  CHECK(f4.successor[1] == HcvState::HCC);
  CHECK(f4.cumulative[1] == doctest::Approx(0.053));
  CHECK(f4.cumulative[2] == 1.0);
  CHECK(f4.sample(0.0389) == HcvState::DC);
  CHECK(f4.sample(0.05) == HcvState::HCC);
  CHECK(f4.sample(0.5) == HcvState::F4);
}

TEST_CASE("one-step frequencies match the annual probabilities") {
  const ChainSampler chain(default_transition_model());
  Rng rng(2024);
  const int n = 1'000'000;
  CHECK(std::abs(step_share(chain, HcvState::F0, HcvState::F1, 0, n, rng) - 0.117) < three_sigma(0.117, n));
  CHECK(std::abs(step_share(chain, HcvState::SVR2, HcvState::DC, 0, n, rng) - 0.008) < three_sigma(0.008, n));
  CHECK(std::abs(step_share(chain, HcvState::SVR2, HcvState::HCC, 0, n, rng) - 0.005) < three_sigma(0.005, n));
  CHECK(std::abs(step_share(chain, HcvState::DC, HcvState::LRD, 0, n, rng) - 0.182) < three_sigma(0.182, n));
  CHECK(std::abs(step_share(chain, HcvState::DC, HcvState::LRD, 3, n, rng) - 0.112) < three_sigma(0.112, n));
}

TEST_CASE("sojourn counter and entry day follow the step") {
  const ChainSampler chain(default_transition_model());
  Rng rng(1);
  InfectionRecord r;
  r.state = HcvState::LT;
  int stays = 0;
  for (int year = 1; year <= 50 && r.state == HcvState::LT; ++year) {
    progress_one_year(r, year * kDaysPerYear, chain, rng);
    if (r.state == HcvState::LT) CHECK(r.sojourn_years_in_state == ++stays);
  }
  if (r.state != HcvState::LT) CHECK(r.sojourn_years_in_state == 0);
  InfectionRecord acute;
  CHECK_THROWS_AS(progress_one_year(acute, 0, chain, rng), ValidationError);
}

TEST_CASE("acute resolution") {
  const ChainSampler chain(default_transition_model());
  InfectionRecord r;
  r.infection_day = 100;
  Rng rng(6);
  CHECK_THROWS_AS(acute_resolution(r, 279, chain, rng), ValidationError);
  const int n = 1'000'000;
  int cleared = 0;
  for (int i = 0; i < n; ++i) cleared += acute_resolution(r, 280, chain, rng) == AcuteOutcome::Cleared;
  CHECK(std::abs(static_cast<double>(cleared) / n - 0.26) < three_sigma(0.26, n));
}

TEST_CASE("genotype shares") {
  CHECK(genotype_from_uniform(0.0) == Genotype::G3);
  CHECK(genotype_from_uniform(0.7199) == Genotype::G3);
  CHECK(genotype_from_uniform(0.72) == Genotype::G1);
  CHECK(genotype_from_uniform(0.95) == Genotype::G4);
  Rng rng(12);
  const int n = 1'000'000;
  int g1 = 0, g3 = 0, g4 = 0;
  for (int i = 0; i < n; ++i) {
    switch (assign_genotype(rng)) {
      case Genotype::G1: ++g1; break;
      case Genotype::G3: ++g3; break;
      case Genotype::G4: ++g4; break;
    }
  }
  CHECK(std::abs(g3 / double(n) - 0.72) < three_sigma(0.72, n));
  CHECK(std::abs(g1 / double(n) - 0.22) < three_sigma(0.22, n));
  CHECK(std::abs(g4 / double(n) - 0.06) < three_sigma(0.06, n));
}

TEST_CASE("transition model CSV round trip") {
  const auto m = default_transition_model();
  const auto path = std::filesystem::temp_directory_path() / "hcvsim_tm_roundtrip.csv";
  save_transition_model(m, path);
  const auto back = load_transition_model(path);
  CHECK(fingerprint(back) == fingerprint(m));
  std::filesystem::remove(path);
}

TEST_CASE("rows summing past one are rejected") {
  auto m = default_transition_model();
  m.set(HcvState::F0, HcvState::F1, 0.7);
  m.set(HcvState::F0, HcvState::F4, 0.7);
  CHECK_THROWS_AS(m.complete_rows(), ValidationError);
}

TEST_CASE("expected years to cirrhosis from F0 is the sum of geometric sojourns") {
  const auto m = default_transition_model();
  const double expected = 1 / 0.117 + 1 / 0.085 + 1 / 0.120 + 1 / 0.116;
  CHECK(expected_years_to_reach(m, HcvState::F0, HcvState::F4) == doctest::Approx(expected).epsilon(1e-9));
}
