#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hcvsim/core.hpp"
#include "hcvsim/population.hpp"
#include "hcvsim/random.hpp"

namespace hcvsim {

/// Coverage fraction at period j: alpha + (1 - alpha) j / n.
template <class Scalar>
Scalar coverage_fraction(Scalar alpha, int j, int n) {
  return alpha + (Scalar(1) - alpha) * Scalar(j) / Scalar(n);
}

/// Real-valued realisation of the annual-treatment algorithm for periods 0..n.
template <class Scalar>
struct UptakeLedger {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Scalar u = Scalar(0);
  Scalar alpha = Scalar(0);
  int n = 1;
  Vector new_infections;
  Vector assigned;
  Vector coverage;
  Vector treated;
  /// Assigned but untreated after period j.
  Vector backlog;
  /// per_cohort(i, j): infections created at i and treated at j (zero for j < i).
  Matrix per_cohort;
};

template <class Scalar>
UptakeLedger<Scalar> annual_plan(Scalar u, Scalar alpha, int n, std::span<const Scalar> new_infections) {
  require(u >= Scalar(0) && u <= Scalar(1), "uptake u out of [0,1]");
  require(alpha >= Scalar(0) && alpha <= Scalar(1), "base coverage alpha out of [0,1]");
  require(n >= 1, "n must be at least 1");
  require(static_cast<int>(new_infections.size()) == n + 1, "infection sequence must have n+1 entries");
  UptakeLedger<Scalar> l;
  l.u = u;
  l.alpha = alpha;
  l.n = n;
  const int m = n + 1;
  l.new_infections.resize(m);
  l.assigned.resize(m);
  l.coverage.resize(m);
  l.treated.resize(m);
  l.backlog.resize(m);
  l.per_cohort = UptakeLedger<Scalar>::Matrix::Zero(m, m);
  typename UptakeLedger<Scalar>::Vector remaining = UptakeLedger<Scalar>::Vector::Zero(m);
  for (int j = 0; j < m; ++j) {
    require(new_infections[static_cast<std::size_t>(j)] >= Scalar(0), "negative infection count");
    l.new_infections(j) = new_infections[static_cast<std::size_t>(j)];
    l.assigned(j) = u * l.new_infections(j);
    l.coverage(j) = coverage_fraction(alpha, j, n);
    remaining(j) = l.assigned(j);
    Scalar total = Scalar(0);
    for (int i = 0; i <= j; ++i) {
      const Scalar t = l.coverage(j) * remaining(i);
      l.per_cohort(i, j) = t;
      remaining(i) -= t;
      total += t;
    }
    l.treated(j) = total;
    l.backlog(j) = remaining.head(j + 1).sum();
  }
  return l;
}

template <class Scalar>
UptakeLedger<Scalar> annual_plan(Scalar u, Scalar alpha, int n, const std::vector<Scalar>& new_infections) {
  return annual_plan<Scalar>(u, alpha, n, std::span<const Scalar>(new_infections));
}

/// Per creation cohort, treated total equals assigned total within `tol`, and the period totals agree.
bool verify_uptake_identity(const UptakeLedger<double>& ledger, double tol = 1e-9);

/// Table layout: period, new, assigned, coverage, then treated per creation cohort.
void write_ledger_csv(const UptakeLedger<double>& ledger, const std::filesystem::path& path);

enum class TreatmentModelKind : std::uint8_t { Annual, T0, End, Twice, Thrice, TwiceEarly, ThriceEarly };

std::string_view to_string(TreatmentModelKind k);
TreatmentModelKind parse_treatment_model(std::string_view name);

struct TreatmentModel {
  TreatmentModelKind kind = TreatmentModelKind::Annual;
  double uptake = 0.1;
  double alpha = 0.0;
  int intervention_years = 10;

  /// Camp years in [0, n]; empty for the annual model.
  std::vector<int> camp_years() const;
  void validate() const;
};

/// Day offset from intervention start of treatment point `year`: 0 for year 0, else 360 year - 1.
inline Day treatment_day_offset(int year) { return year == 0 ? 0 : static_cast<Day>(year) * kDaysPerYear - 1; }

struct SvrTable {
  double f0_f3 = 0.86;
  double f4_g3 = 0.84;
  double f4_other = 0.86;
  double dc = 0.84;

  double probability(HcvState s, Genotype g) const;
  void validate() const;
};

/// Living, chronically infected (F0-F4, DC), viremic, never treated, not failed.
bool eligible_for_treatment(const Agent& a);

enum class TreatmentResult : std::uint8_t { Cured, Failed };

/// Applies one DAA course. A cure from F0-F3 clears the infection (reinfectable);
/// from F4/DC moves to non-viremic SVR2. Failure sets treat_failed. IDU status ends either way.
TreatmentResult apply_treatment(Population& pop, AgentId id, const SvrTable& svr, Day today, Rng& rng);

struct Selection {
  std::vector<AgentId> chosen;
  /// Demand not met because too few candidates were eligible.
  std::int64_t shortfall = 0;
};

/// Realises a real-valued demand by stochastic rounding and samples that many eligible
/// candidates without replacement.
Selection select_for_treatment(const Population& pop, std::span<const AgentId> candidates, double demand, Rng& rng);

/// treated / denominator; absent when the denominator is zero.
std::optional<double> effective_uptake(std::int64_t treated, std::int64_t denominator);

}  // namespace hcvsim
