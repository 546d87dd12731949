#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcvsim/engine.hpp"

namespace hcvsim {

struct CalibrationTargets {
  double antibody = 0.036;
  double rna = 0.026;
  double idu = 0.001;
  double medical_share = 0.741;
  double social_share = 0.257;
  double threshold = 0.2;

  void validate() const;
};

struct DeviationScore {
  std::array<double, 3> d{};
  double total = 0.0;
  bool pass = false;
};

/// Absolute relative deviation of (antibody, RNA, IDU) means from the targets.
DeviationScore deviation_score(double antibody, double rna, double idu, const CalibrationTargets& t = {});

struct Candidate {
  double q_t_med = 0.0064;
  double q_c = 1.575e-5;
  double q_shar = 0.41;
};

/// Sets q_t_med, q_shar and the parameters derived from them (r_b, q_c_e, q_c_ue).
void apply_candidate(SimConfig& config, const Candidate& c);

struct SearchSpace {
  std::vector<double> q_t_med;
  std::vector<double> q_c;
  std::vector<double> q_shar;
  /// Refinement rounds after the grid when no grid point passes.
  int refinement_rounds = 2;

  void validate() const;
};

struct Evaluation {
  Candidate candidate;
  double antibody = 0.0;
  double rna = 0.0;
  double idu = 0.0;
  double antibody_sd = 0.0;
  double rna_sd = 0.0;
  double idu_sd = 0.0;
  double medical_share = 0.0;
  double social_share = 0.0;
  DeviationScore score;
  double r_b = 0.0;
  double q_c_e = 0.0;
  double q_c_ue = 0.0;
};

/// Runs `replications` calibration periods (seeds derived from config.rng_seed) at `c`.
Evaluation evaluate_candidate(const SimConfig& config, const SharedInputs& inputs, const Candidate& c,
                              int replications, int threads = 0, std::vector<CalibrationRun>* runs = nullptr);

struct CalibrationResult {
  bool pass = false;
  Evaluation best;
  std::vector<Evaluation> log;
};

/// Grid search in order, returning the first passing candidate; otherwise coordinate refinement
/// around the best point. Evaluations already present in `log_path` are reused, and new ones appended.
CalibrationResult calibrate(const SimConfig& config, const SharedInputs& inputs, const SearchSpace& space,
                            int replications = 30, const CalibrationTargets& targets = {},
                            const std::optional<std::filesystem::path>& log_path = std::nullopt, int threads = 0);

struct TTestResult {
  double mean = 0.0;
  double sd = 0.0;
  double t = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

/// Two-sided one-sample t-test of mean(values) = mu0.
TTestResult one_sample_t_test(std::span<const double> values, double mu0, double alpha = 0.05);

struct AttributionCheck {
  TTestResult medical;
  TTestResult social;
};

AttributionCheck validate_attribution(std::span<const CalibrationRun> runs, const CalibrationTargets& t = {},
                                      double alpha = 0.05);

}  // namespace hcvsim
