#include "hcvsim/natural_history.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace hcvsim {

int chain_index(HcvState s) {
  for (int i = 0; i < kChainSize; ++i) {
    if (kChainStates[i] == s) return i;
  }
  return -1;
}

TransitionModeld default_transition_model() {
  using enum HcvState;
  TransitionModeld m;
  m.set(F0, F1, 0.117);
  m.set(F1, F2, 0.085);
  m.set(F2, F3, 0.120);
  m.set(F3, F4, 0.116);
  m.set(F4, DC, 0.039);
  m.set(F4, HCC, 0.014);
  m.set(DC, HCC, 0.068);
  m.set(DC, LT, 0.023);
  m.set(DC, LRD, SojournRegime::FirstYear, 0.182);
  m.set(DC, LRD, SojournRegime::AfterFirstYear, 0.112);
  m.set(HCC, LT, 0.040);
  m.set(HCC, LRD, 0.427);
  m.set(LT, LRD, SojournRegime::FirstYear, 0.116);
  m.set(LT, LRD, SojournRegime::AfterFirstYear, 0.044);
  m.set(SVR2, DC, 0.008);
  m.set(SVR2, HCC, 0.005);
  m.acute_clearance = 0.26;
  m.complete_rows();
  return m;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

}  // namespace

TransitionModeld load_transition_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open transition model " + path.string());
  TransitionModeld m;
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::string from, to, regime, prob;
    std::getline(ss, from, ',');
    std::getline(ss, to, ',');
    std::getline(ss, regime, ',');
    std::getline(ss, prob, ',');
    from = trim(from);
    to = trim(to);
    regime = trim(regime);
    double p = 0.0;
    try {
      p = std::stod(trim(prob));
    } catch (const std::exception&) {
      throw ValidationError("bad probability on line " + std::to_string(line_no) + " of " + path.string());
    }
    if (!is_probability(p)) throw ValidationError("probability out of [0,1] on line " + std::to_string(line_no));
    if (from == "Acute" && to == "Susceptible") {
      m.acute_clearance = p;
      continue;
    }
    const HcvState f = parse_hcv_state(from);
    const HcvState t = parse_hcv_state(to);
    if (chain_index(f) < 0 || chain_index(t) < 0) {
      throw ValidationError("transition " + from + "->" + to + " is not part of the chain");
    }
    if (regime == "all" || regime.empty()) {
      m.set(f, t, p);
    } else if (regime == "first") {
      m.set(f, t, SojournRegime::FirstYear, p);
    } else if (regime == "after") {
      m.set(f, t, SojournRegime::AfterFirstYear, p);
    } else {
      throw ValidationError("unknown regime '" + regime + "'");
    }
  }
  m.complete_rows();
  return m;
}

void save_transition_model(const TransitionModeld& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "from,to,regime,probability\n";
  out << std::setprecision(17);
  out << "Acute,Susceptible,all," << model.acute_clearance << '\n';
  const auto& first = model[SojournRegime::FirstYear];
  const auto& after = model[SojournRegime::AfterFirstYear];
  for (int i = 0; i < kChainSize; ++i) {
    for (int j = 0; j < kChainSize; ++j) {
      if (i == j) continue;
      const double a = first(i, j);
      const double b = after(i, j);
      if (a == 0.0 && b == 0.0) continue;
      const auto from = to_string(kChainStates[i]);
      const auto to = to_string(kChainStates[j]);
      if (a == b) {
        out << from << ',' << to << ",all," << a << '\n';
      } else {
        out << from << ',' << to << ",first," << a << '\n';
        out << from << ',' << to << ",after," << b << '\n';
      }
    }
  }
}

std::string fingerprint(const TransitionModeld& model) {
  std::ostringstream out;
  out << std::setprecision(17) << "acute:" << model.acute_clearance;
  for (const auto& m : model.regime) {
    for (int i = 0; i < kChainSize; ++i) {
      for (int j = 0; j < kChainSize; ++j) out << ',' << m(i, j);
    }
  }
  return out.str();
}

HcvState StepCdf::sample(double u) const {
  for (int i = 0; i < size; ++i) {
    if (u < cumulative[i]) return successor[i];
  }
  return successor[size - 1];
}

std::array<StepCdf, kChainSize> build_cdfs(const TransitionModeld& model, SojournRegime regime) {
  std::array<StepCdf, kChainSize> out{};
  const auto& m = model[regime];
  for (int i = 0; i < kChainSize; ++i) {
    StepCdf& cdf = out[i];
    double running = 0.0;
    // Moves first, self-loop last: a state's own mass sits at the top of [0, 1).
    for (int j = 0; j < kChainSize; ++j) {
      if (j == i || m(i, j) == 0.0) continue;
      running += m(i, j);
      cdf.cumulative[cdf.size] = running;
      cdf.successor[cdf.size] = kChainStates[j];
      ++cdf.size;
    }
    if (running > 1.0 + 1e-12) throw ValidationError("row sum greater than one");
    cdf.cumulative[cdf.size] = 1.0;
    cdf.successor[cdf.size] = kChainStates[i];
    ++cdf.size;
  }
  return out;
}

ChainSampler::ChainSampler(const TransitionModeld& model)
    : model_(model), acute_clearance_(model.acute_clearance) {
  const auto first = build_cdfs(model, SojournRegime::FirstYear);
  const auto after = build_cdfs(model, SojournRegime::AfterFirstYear);
  for (int i = 0; i < kChainSize; ++i) {
    cdfs_[i][0] = first[i];
    cdfs_[i][1] = after[i];
  }
}

const StepCdf& ChainSampler::cdf(HcvState s, SojournRegime r) const {
  const int i = chain_index(s);
  if (i < 0) throw ValidationError("no transition row for state " + std::string(to_string(s)));
  return cdfs_[i][static_cast<int>(r)];
}

AcuteOutcome acute_resolution(const InfectionRecord& record, Day today, const ChainSampler& chain, Rng& rng) {
  if (record.state != HcvState::Acute) throw ValidationError("acute_resolution on a non-acute record");
  if (today - record.infection_day < kAcuteDays) {
    throw ValidationError("acute_resolution called before the six-month mark");
  }
  return rng.uniform() < chain.acute_clearance() ? AcuteOutcome::Cleared : AcuteOutcome::ChronicF0;
}

HcvState progress_one_year(InfectionRecord& record, Day today, const ChainSampler& chain, Rng& rng) {
  if (!is_chain_state(record.state)) {
    throw ValidationError("progress_one_year on state " + std::string(to_string(record.state)));
  }
  const SojournRegime regime =
      record.sojourn_years_in_state == 0 ? SojournRegime::FirstYear : SojournRegime::AfterFirstYear;
  const HcvState next = chain.cdf(record.state, regime).sample(rng.uniform());
  if (next == record.state) {
    ++record.sojourn_years_in_state;
  } else {
    record.state = next;
    record.state_entry_day = today;
    record.sojourn_years_in_state = 0;
  }
  return next;
}

Genotype genotype_from_uniform(double u) {
  if (u < 0.72) return Genotype::G3;
  if (u < 0.94) return Genotype::G1;
  return Genotype::G4;
}

Genotype assign_genotype(Rng& rng) { return genotype_from_uniform(rng.uniform()); }

int expanded_index(HcvState s, int sojourn_years_in_state) {
  using enum HcvState;
  switch (s) {
    case F0: return 0;
    case F1: return 1;
    case F2: return 2;
    case F3: return 3;
    case F4: return 4;
    case DC: return sojourn_years_in_state == 0 ? 5 : 6;
    case HCC: return 7;
    case LT: return sojourn_years_in_state == 0 ? 8 : 9;
    case SVR2: return 10;
    case LRD: return 11;
    default: throw ValidationError("state has no expanded index: " + std::string(to_string(s)));
  }
}

double expected_years_to_reach(const TransitionModeld& model, HcvState start, HcvState target) {
  const ExpandedMatrix<double> p = expanded_matrix(model);
  const int t = expanded_index(target, 0);
  const int lrd = expanded_index(HcvState::LRD, 0);
  // Transient states: everything except target (and its later copy) and LRD.
  std::vector<int> transient;
  for (int i = 0; i < kExpandedSize; ++i) {
    const bool is_target = i == t || ((target == HcvState::DC || target == HcvState::LT) && i == t + 1);
    if (!is_target && i != lrd) transient.push_back(i);
  }
  const int n = static_cast<int>(transient.size());
  Eigen::MatrixXd q(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) q(a, b) = p(transient[a], transient[b]);
  }
  const Eigen::MatrixXd fundamental = (Eigen::MatrixXd::Identity(n, n) - q).inverse();
  const int s = expanded_index(start, 0);
  int row = -1;
  for (int a = 0; a < n; ++a) {
    if (transient[a] == s) row = a;
  }
  if (row < 0) return 0.0;
  return fundamental.row(row).sum();
}

}  // namespace hcvsim
