#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hcvsim {

/// Simulated years have exactly 360 days; every annual-to-daily conversion uses it.
inline constexpr int kDaysPerYear = 360;
inline constexpr int kMaxAgeYears = 102;
inline constexpr int kMaxAgeDays = kMaxAgeYears * kDaysPerYear;
inline constexpr int kAcuteDays = 180;

using Day = std::int64_t;
using AgentId = std::int32_t;

/// Raised for any configuration or argument that violates a documented invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an analysis request cannot be answered from the available data.
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

inline bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

enum class HcvState : std::uint8_t {
  Susceptible,
  Acute,
  F0,
  F1,
  F2,
  F3,
  F4,
  DC,
  HCC,
  LT,
  SVR2,
  CuredNonCirrhotic,
  LRD,
};
inline constexpr int kHcvStateCount = 13;

std::string_view to_string(HcvState s);
HcvState parse_hcv_state(std::string_view name);

constexpr bool is_fibrosis(HcvState s) {
  return s == HcvState::F0 || s == HcvState::F1 || s == HcvState::F2 || s == HcvState::F3;
}
/// States driven by the annual natural-history chain.
constexpr bool is_chain_state(HcvState s) {
  return s >= HcvState::F0 && s <= HcvState::SVR2;
}
/// Agents in these states carry no HCV-related health or cost burden.
constexpr bool is_clean(HcvState s) {
  return s == HcvState::Susceptible || s == HcvState::CuredNonCirrhotic;
}

enum class Genotype : std::uint8_t { G1, G3, G4 };
std::string_view to_string(Genotype g);

/// Age bands {0-29, 30-39, ..., 70-79, 80+} used by the utility table.
struct AgeGroup {
  int index = 0;
  friend bool operator==(AgeGroup, AgeGroup) = default;
};
inline constexpr int kAgeGroupCount = 7;

/// Lower bound inclusive: 30.0 belongs to 30-39, 29.999 to 0-29.
AgeGroup age_group(double age_years);

constexpr double age_years(Day age_days) { return static_cast<double>(age_days) / kDaysPerYear; }

/// Outcome vector: undiscounted (LY, QALY, cost) followed by the discounted triple.
enum OutcomeField : int { kLifeYears, kQalys, kCost, kLifeYearsDisc, kQalysDisc, kCostDisc };
inline constexpr int kOutcomeFields = 6;
inline constexpr std::array<const char*, kOutcomeFields> kOutcomeFieldNames = {
    "life_years", "qalys", "cost", "life_years_disc", "qalys_disc", "cost_disc"};

template <class Scalar>
using OutcomeArray = Eigen::Array<Scalar, kOutcomeFields, 1>;
using Outcome = OutcomeArray<double>;

inline Outcome zero_outcome() { return Outcome::Zero(); }

}  // namespace hcvsim
