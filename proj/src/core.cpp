#include "hcvsim/core.hpp"

namespace hcvsim {

namespace {
constexpr std::array<std::string_view, kHcvStateCount> kStateNames = {
    "Susceptible", "Acute", "F0", "F1", "F2", "F3", "F4", "DC", "HCC", "LT", "SVR2", "CuredNonCirrhotic", "LRD"};
}

std::string_view to_string(HcvState s) { return kStateNames[static_cast<int>(s)]; }

HcvState parse_hcv_state(std::string_view name) {
  for (int i = 0; i < kHcvStateCount; ++i) {
    if (kStateNames[i] == name) return static_cast<HcvState>(i);
  }
  throw ValidationError("unknown HCV state '" + std::string(name) + "'");
}

std::string_view to_string(Genotype g) {
  switch (g) {
    case Genotype::G1: return "G1";
    case Genotype::G3: return "G3";
    case Genotype::G4: return "G4";
  }
  return "?";
}

AgeGroup age_group(double age_years) {
  if (!(age_years >= 0.0)) throw ValidationError("negative age");
  if (age_years < 30.0) return {0};
  const int band = static_cast<int>(age_years / 10.0) - 2;
  return {band > 6 ? 6 : band};
}

}  // namespace hcvsim
