#include <cmath>
#include <vector>

#include "doctest.h"

#include "hcvsim/calibration.hpp"

using namespace hcvsim;

TEST_CASE("deviation score") {
  const auto near = deviation_score(0.0357, 0.0277, 0.0010);
  CHECK(near.total == doctest::Approx(0.03 / 3.6 + 0.17 / 2.6).epsilon(1e-9));
  CHECK(near.total == doctest::Approx(0.0737).epsilon(1e-3));
  CHECK(near.pass);

  const auto far = deviation_score(0.036, 0.026, 0.0015);
  CHECK(far.total == doctest::Approx(0.5));
  CHECK_FALSE(far.pass);

  const auto exact = deviation_score(0.036, 0.026, 0.001);
  CHECK(exact.total == doctest::Approx(0.0).epsilon(1e-15));

  CalibrationTargets bad;
  bad.rna = 0.0;
  CHECK_THROWS_AS(deviation_score(0.03, 0.02, 0.001, bad), ValidationError);
}

TEST_CASE("candidates update derived parameters") {
  SimConfig cfg;
  Candidate c;
  c.q_t_med = 0.0032;
  c.q_c = 2.0e-5;
  c.q_shar = 0.3;
  apply_candidate(cfg, c);
  const double total = 2.9 + 0.023 + 0.009 + 0.982;
  CHECK(cfg.medical.q_t_med == 0.0032);
  CHECK(cfg.medical.r_b == doctest::Approx(0.74 * 0.0032 * total / 0.023));
  CHECK(cfg.social.q_c_ue / cfg.social.q_c_e == doctest::Approx(0.26 / 0.166));
  CHECK(cfg.social.q_c_ue * 0.166 + cfg.social.q_c_e * (1 - 0.166) == doctest::Approx(2.0e-5));
  CHECK(cfg.social.q_shar == 0.3);
  CHECK_NOTHROW(cfg.validate());

  c.q_shar = 0.6;
  CHECK_THROWS_AS(apply_candidate(cfg, c), ValidationError);

  SearchSpace space;
  space.q_t_med = {0.0064};
  space.q_c = {1.5e-5};
  space.q_shar = {0.41, 0.55};
  CHECK_THROWS_AS(space.validate(), ValidationError);
}

TEST_CASE("one-sample t test") {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  const auto r = one_sample_t_test(v, 2.0);
  CHECK(r.mean == 3.0);
  CHECK(r.t == doctest::Approx(std::sqrt(2.0)));
  CHECK(r.p_value == doctest::Approx(0.2301996411).epsilon(1e-8));
  CHECK_FALSE(r.reject);

  const std::vector<double> same = {0.741, 0.741, 0.741};
  CHECK(one_sample_t_test(same, 0.741).p_value == 1.0);
  CHECK_THROWS_AS(one_sample_t_test(std::vector<double>{1.0}, 0.0), ValidationError);
}

TEST_CASE("attribution check flags an all-medical epidemic") {
  std::vector<CalibrationRun> runs(5);
  const double med[] = {0.93, 0.95, 0.97, 0.96, 0.94};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    runs[i].medical_share = med[i];
    runs[i].social_share = 1.0 - med[i];
  }
  const auto a = validate_attribution(runs);
  CHECK(a.medical.t == doctest::Approx(29.5570634536).epsilon(1e-9));
  CHECK(a.medical.p_value == doctest::Approx(7.80188e-6).epsilon(1e-4));
  CHECK(a.medical.reject);
  CHECK(a.social.reject);
}

TEST_CASE("calibration search stops at the first passing candidate") {
  SimConfig cfg;
  cfg.initial_cohort_size = 1500;
  cfg.initial_infected_count = 40;
  cfg.calibration_years = 2;
  cfg.estimator = Estimator::None;
  const SharedInputs inputs = prepare_inputs(cfg);

  SearchSpace space;
  space.q_t_med = {0.0064};
  space.q_c = {1.575e-5};
  space.q_shar = {0.41, 0.2};
  space.refinement_rounds = 0;

  const Evaluation first = evaluate_candidate(cfg, inputs, {0.0064, 1.575e-5, 0.41}, 2, 1);
  CalibrationTargets loose;
  loose.antibody = first.antibody;
  loose.rna = first.rna;
  loose.idu = first.idu > 0 ? first.idu : 0.001;
  loose.threshold = 10.0;
  const auto result = calibrate(cfg, inputs, space, 2, loose, std::nullopt, 1);
  CHECK(result.pass);
  CHECK(result.log.size() == 1);
  CHECK(result.best.candidate.q_shar == 0.41);
  CHECK(result.best.antibody == first.antibody);

  CalibrationTargets strict = loose;
  strict.threshold = 0.0;
  const auto none = calibrate(cfg, inputs, space, 2, strict, std::nullopt, 1);
  CHECK_FALSE(none.pass);
  CHECK(none.log.size() == 2);
}
