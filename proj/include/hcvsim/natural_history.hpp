#pragma once

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hcvsim/core.hpp"
#include "hcvsim/random.hpp"

namespace hcvsim {

/// One infection episode. Genotype is fixed for the episode.
struct InfectionRecord {
  HcvState state = HcvState::Acute;
  Day state_entry_day = 0;
  Day infection_day = 0;
  /// Day the annual chain clock started (chronic onset); progression fires on its anniversaries.
  Day chain_origin_day = 0;
  Genotype genotype = Genotype::G3;
  int sojourn_years_in_state = 0;
  /// RNA positive. False after a cure into SVR2, even if the agent later progresses.
  bool viremic = true;
};

/// First-year vs after-first-year rows (DC and LT differ by sojourn).
enum class SojournRegime : std::uint8_t { FirstYear, AfterFirstYear };

/// Chain states in matrix order. Everything outside is not driven by the annual chain.
inline constexpr std::array<HcvState, 10> kChainStates = {
    HcvState::F0, HcvState::F1, HcvState::F2,  HcvState::F3,   HcvState::F4,
    HcvState::DC, HcvState::HCC, HcvState::LT, HcvState::SVR2, HcvState::LRD};
inline constexpr int kChainSize = static_cast<int>(kChainStates.size());

/// Row/column of `s` in the chain matrices, or -1.
int chain_index(HcvState s);

/// Annual transition probabilities of the natural-history chain, one matrix per sojourn regime.
/// Off-diagonal entries are stored; the diagonal is the self-loop complement.
template <class Scalar>
struct TransitionModel {
  using Matrix = Eigen::Matrix<Scalar, kChainSize, kChainSize>;

  std::array<Matrix, 2> regime{Matrix::Zero(), Matrix::Zero()};
  Scalar acute_clearance = Scalar(0.26);

  Matrix& operator[](SojournRegime r) { return regime[static_cast<int>(r)]; }
  const Matrix& operator[](SojournRegime r) const { return regime[static_cast<int>(r)]; }

  void set(HcvState from, HcvState to, Scalar p) {
    for (auto& m : regime) m(chain_index(from), chain_index(to)) = p;
  }
  void set(HcvState from, HcvState to, SojournRegime r, Scalar p) {
    (*this)[r](chain_index(from), chain_index(to)) = p;
  }

  /// Fills every diagonal with the complement of its row; throws if a row sum exceeds one.
  void complete_rows() {
    for (auto& m : regime) {
      for (int i = 0; i < kChainSize; ++i) {
        m(i, i) = Scalar(0);
        const Scalar off = m.row(i).sum();
        if (off > Scalar(1) + Scalar(1e-12)) {
          throw ValidationError("transition row for " + std::string(to_string(kChainStates[i])) +
                                " sums to more than one");
        }
        for (int j = 0; j < kChainSize; ++j) {
          if (m(i, j) < Scalar(0)) throw ValidationError("negative transition probability");
        }
        m(i, i) = Scalar(1) - off;
      }
    }
  }

  template <class Other>
  TransitionModel<Other> cast() const {
    TransitionModel<Other> out;
    out.regime = {regime[0].template cast<Other>(), regime[1].template cast<Other>()};
    out.acute_clearance = static_cast<Other>(acute_clearance);
    return out;
  }
};

using TransitionModeld = TransitionModel<double>;

/// Default annual probabilities of the natural-history chain.
TransitionModeld default_transition_model();

/// CSV with header `from,to,regime,probability`; regime is `all`, `first` or `after`.
TransitionModeld load_transition_model(const std::filesystem::path& path);
void save_transition_model(const TransitionModeld& model, const std::filesystem::path& path);

/// Stable text form used for repository hashing.
std::string fingerprint(const TransitionModeld& model);

/// Step CDF for one (state, regime): cumulative probabilities over successors, self-loop included.
struct StepCdf {
  std::array<double, kChainSize> cumulative{};
  std::array<HcvState, kChainSize> successor{};
  int size = 0;

  HcvState sample(double u) const;
};

/// Per-state sampling tables; built once and shared read-only.
class ChainSampler {
 public:
  explicit ChainSampler(const TransitionModeld& model);

  const StepCdf& cdf(HcvState s, SojournRegime r) const;
  double acute_clearance() const { return acute_clearance_; }
  const TransitionModeld& model() const { return model_; }

 private:
  TransitionModeld model_;
  std::array<std::array<StepCdf, 2>, kChainSize> cdfs_{};
  double acute_clearance_ = 0.26;
};

/// Per-state CDFs in chain order for one regime.
std::array<StepCdf, kChainSize> build_cdfs(const TransitionModeld& model, SojournRegime regime);

enum class AcuteOutcome : std::uint8_t { Cleared, ChronicF0 };

/// Resolves the acute phase on day `today`; throws before the six-month mark.
AcuteOutcome acute_resolution(const InfectionRecord& record, Day today, const ChainSampler& chain, Rng& rng);

/// One annual step of the chain for `record`, updating state, entry day and sojourn counter.
HcvState progress_one_year(InfectionRecord& record, Day today, const ChainSampler& chain, Rng& rng);

/// Genotype shares G3 0.72, G1 0.22, G4 0.06.
Genotype assign_genotype(Rng& rng);
Genotype genotype_from_uniform(double u);

// ---- expanded (sojourn-aware) chain, used for oracles ----

/// DC and LT split into first-year and later copies so that the chain is time-homogeneous.
inline constexpr std::array<const char*, 12> kExpandedStateNames = {
    "F0", "F1", "F2", "F3", "F4", "DC1", "DC+", "HCC", "LT1", "LT+", "SVR2", "LRD"};
inline constexpr int kExpandedSize = 12;

template <class Scalar>
using ExpandedMatrix = Eigen::Matrix<Scalar, kExpandedSize, kExpandedSize>;

/// Expanded index of a chain state at a given sojourn (DC/LT only care about first year vs later).
int expanded_index(HcvState s, int sojourn_years_in_state);

template <class Scalar>
ExpandedMatrix<Scalar> expanded_matrix(const TransitionModel<Scalar>& model) {
  ExpandedMatrix<Scalar> p = ExpandedMatrix<Scalar>::Zero();
  const auto& first = model[SojournRegime::FirstYear];
  const auto& after = model[SojournRegime::AfterFirstYear];
  auto put = [&](int from_expanded, const auto& row_matrix, HcvState from, bool first_year) {
    const int i = chain_index(from);
    for (int j = 0; j < kChainSize; ++j) {
      const Scalar v = row_matrix(i, j);
      if (v == Scalar(0)) continue;
      const HcvState to = kChainStates[j];
      int target;
      if (to == from) {
        target = (from == HcvState::DC || from == HcvState::LT) ? expanded_index(from, first_year ? 1 : 2)
                                                                 : expanded_index(from, 0);
      } else {
        target = expanded_index(to, 0);
      }
      p(from_expanded, target) += v;
    }
  };
  for (HcvState s : kChainStates) {
    if (s == HcvState::DC || s == HcvState::LT) {
      put(expanded_index(s, 0), first, s, true);
      put(expanded_index(s, 1), after, s, false);
    } else {
      put(expanded_index(s, 0), first, s, true);
    }
  }
  return p;
}

/// Distribution over expanded states after `steps` annual steps from a pure start state.
template <class Scalar>
Eigen::Matrix<Scalar, 1, kExpandedSize> occupancy_after(const ExpandedMatrix<Scalar>& p, int start,
                                                        int steps) {
  Eigen::Matrix<Scalar, 1, kExpandedSize> row = Eigen::Matrix<Scalar, 1, kExpandedSize>::Zero();
  row(start) = Scalar(1);
  for (int n = 0; n < steps; ++n) row = row * p;
  return row;
}

/// Expected number of annual steps spent before first entering `target`, from `start`
/// (fundamental-matrix solve on the chain with `target` and LRD made absorbing).
double expected_years_to_reach(const TransitionModeld& model, HcvState start, HcvState target);

}  // namespace hcvsim
