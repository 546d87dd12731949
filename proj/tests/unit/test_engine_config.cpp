#include <cmath>
#include <filesystem>
#include <memory>

#include "doctest.h"

#include "hcvsim/config.hpp"
#include "hcvsim/engine.hpp"

using namespace hcvsim;

namespace {

SimConfig tiny_config() {
  SimConfig c;
  c.initial_cohort_size = 3000;
  c.initial_infected_count = 60;
  c.initial_idu_count = 10;
  c.calibration_years = 3;
  c.intervention_years = 3;
  c.replication_count = 2;
  c.repository_cohort_size = 3000;
  c.repository_floor = 4;
  return c;
}

SharedInputs tiny_inputs(const SimConfig& c) {
  SharedInputs in = prepare_inputs(c);
  in.repository = build_repository(c, in, 1);
  return in;
}

void check_same(const ReplicationReport& a, const ReplicationReport& b) {
  const auto fa = numeric_fields(a);
  const auto fb = numeric_fields(b);
  REQUIRE(fa.size() == fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (fa[i].first == "runtime_seconds") continue;
    INFO(fa[i].first);
    if (std::isnan(fa[i].second)) {
      CHECK(std::isnan(fb[i].second));
    } else {
      CHECK(fa[i].second == fb[i].second);
    }
  }
}

}  // namespace

TEST_CASE("a seed fixes the whole run") {
  const SimConfig c = tiny_config();
  const SharedInputs in = tiny_inputs(c);
  check_same(run_replication(c, in, 99), run_replication(c, in, 99));
}

TEST_CASE("without transmission no infections occur during the intervention") {
  SimConfig c = tiny_config();
  const SharedInputs in = tiny_inputs(c);
  c.transmission_enabled_in_intervention = false;
  const auto wot = run_replication(c, in, 5);
  CHECK(wot.intervention_infections == 0);

  c.transmission_enabled_in_intervention = true;
  const auto wt = run_replication(c, in, 5);
  CHECK(wt.calibration_infections == wot.calibration_infections);
  CHECK(wt.calibration_end.antibody == wot.calibration_end.antibody);
}

TEST_CASE("no seed infections means no incidence") {
  SimConfig c = tiny_config();
  c.initial_infected_count = 0;
  const SharedInputs in = tiny_inputs(c);
  const auto r = run_replication(c, in, 3);
  CHECK(r.calibration_infections == 0);
  CHECK(r.intervention_infections == 0);
  CHECK(r.intervention_end.antibody == 0.0);
  CHECK_FALSE(r.patient_level.has_value());
}

TEST_CASE("WT and WoT branches agree through calibration") {
  const SimConfig c = tiny_config();
  const SharedInputs in = tiny_inputs(c);
  Simulation a(c, in, 17);
  Simulation b(c, in, 17);
  a.configure_intervention(TreatmentModelKind::Annual, 0.5, true);
  b.configure_intervention(TreatmentModelKind::Thrice, 0.5, false);
  a.run_until(c.calibration_days());
  b.run_until(c.calibration_days());
  CHECK(a.prevalence().antibody == b.prevalence().antibody);
  CHECK(a.prevalence().rna == b.prevalence().rna);
  CHECK(a.prevalence().population == b.prevalence().population);
  CHECK(a.infections(Environment::Medical, false) == b.infections(Environment::Medical, false));
  CHECK(a.infections(Environment::Social, false) == b.infections(Environment::Social, false));
}

TEST_CASE("scenario results do not depend on the thread count") {
  SimConfig c = tiny_config();
  c.comparator_uptake = 0.3;
  const SharedInputs in = tiny_inputs(c);
  const std::vector<double> uptakes = {0.3, 0.9};
  const std::vector<TreatmentModelKind> models = {TreatmentModelKind::Annual, TreatmentModelKind::Twice};
  const std::vector<bool> modes = {true, false};
  const auto one = run_scenario(c, in, uptakes, models, modes, 1);
  const auto two = run_scenario(c, in, uptakes, models, modes, 3);
  REQUIRE(one.cells.size() == 8);
  REQUIRE(two.cells.size() == 8);
  for (std::size_t i = 0; i < one.cells.size(); ++i) {
    REQUIRE(one.cells[i].replications.size() == 2);
    for (std::size_t r = 0; r < 2; ++r) check_same(one.cells[i].replications[r], two.cells[i].replications[r]);
    CHECK(one.cells[i].nmb_vs_comparator == two.cells[i].nmb_vs_comparator);
  }
  const auto* self = one.find(TreatmentModelKind::Annual, 0.3, true);
  REQUIRE(self != nullptr);
  CHECK(self->nmb_vs_comparator.value() == 0.0);
}

TEST_CASE("missing comparator cell is an analysis error") {
  SimConfig c = tiny_config();
  c.replication_count = 1;
  const SharedInputs in = tiny_inputs(c);
  CHECK_THROWS_AS(run_scenario(c, in, {0.5}, {TreatmentModelKind::Annual}, {true}, 1), AnalysisError);
}

TEST_CASE("config JSON round trip") {
  SimConfig c = tiny_config();
  c.treatment_model = TreatmentModelKind::ThriceEarly;
  c.estimator = Estimator::IA;
  c.target_uptake = 0.7;
  const auto path = std::filesystem::temp_directory_path() / "hcvsim_cfg_roundtrip.json";
  save_config(c, path);
  const SimConfig back = load_config(path);
  std::filesystem::remove(path);
  CHECK(config_to_json(back) == config_to_json(c));

  SimConfig d;
  CHECK_THROWS_AS(apply_json(d, nlohmann::json{{"no_such_key", 1}}), ValidationError);
  apply_overrides(d, {"target_uptake=0.9", "treatment_model=End"});
  CHECK(d.target_uptake == 0.9);
  CHECK(d.treatment_model == TreatmentModelKind::End);
  SimConfig e;
  e.medical.r_b = 0.5;
  CHECK_THROWS_AS(e.validate(), ValidationError);
  SimConfig f;
  f.time_step = 2;
  CHECK_THROWS_AS(f.validate(), ValidationError);
}
