#include "hcvsim/treatment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

namespace hcvsim {

bool verify_uptake_identity(const UptakeLedger<double>& l, double tol) {
  const int m = l.n + 1;
  if (l.per_cohort.rows() != m || l.per_cohort.cols() != m) return false;
  for (int i = 0; i < m; ++i) {
    if (std::abs(l.per_cohort.row(i).sum() - l.assigned(i)) > tol) return false;
  }
  for (int j = 0; j < m; ++j) {
    if (std::abs(l.per_cohort.col(j).sum() - l.treated(j)) > tol) return false;
  }
  return std::abs(l.treated.sum() - l.assigned.sum()) <= tol;
}

void write_ledger_csv(const UptakeLedger<double>& l, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  const int m = l.n + 1;
  out << "period,new_infections,assigned,coverage,treated,backlog";
  for (int i = 0; i < m; ++i) out << ",cohort_" << i;
  out << '\n' << std::setprecision(12);
  for (int j = 0; j < m; ++j) {
    out << j << ',' << l.new_infections(j) << ',' << l.assigned(j) << ',' << l.coverage(j) << ','
        << l.treated(j) << ',' << l.backlog(j);
    for (int i = 0; i < m; ++i) out << ',' << l.per_cohort(i, j);
    out << '\n';
  }
}

namespace {
constexpr std::array<std::string_view, 7> kModelNames = {"Annual", "T0", "End", "Twice",
                                                         "Thrice", "TwiceEarly", "ThriceEarly"};
}

std::string_view to_string(TreatmentModelKind k) { return kModelNames[static_cast<int>(k)]; }

TreatmentModelKind parse_treatment_model(std::string_view name) {
  for (std::size_t i = 0; i < kModelNames.size(); ++i) {
    if (kModelNames[i] == name) return static_cast<TreatmentModelKind>(i);
  }
  throw ValidationError("unknown treatment model '" + std::string(name) + "'");
}

std::vector<int> TreatmentModel::camp_years() const {
  const int n = intervention_years;
  switch (kind) {
    case TreatmentModelKind::Annual: return {};
    case TreatmentModelKind::T0: return {0};
    case TreatmentModelKind::End: return {n};
    case TreatmentModelKind::Twice: return {n / 2, n};
    case TreatmentModelKind::Thrice: return {3 * n / 10, 6 * n / 10, n};
    case TreatmentModelKind::TwiceEarly: return {0, n / 2};
    case TreatmentModelKind::ThriceEarly: return {0, 3 * n / 10, 6 * n / 10};
  }
  return {};
}

void TreatmentModel::validate() const {
  require(is_probability(uptake), "target uptake out of [0,1]");
  require(is_probability(alpha), "base coverage alpha out of [0,1]");
  require(intervention_years >= 1, "intervention must last at least one year");
  for (int y : camp_years()) require(y >= 0 && y <= intervention_years, "camp year outside the intervention");
}

double SvrTable::probability(HcvState s, Genotype g) const {
  if (is_fibrosis(s)) return f0_f3;
  if (s == HcvState::F4) return g == Genotype::G3 ? f4_g3 : f4_other;
  if (s == HcvState::DC) return dc;
  throw ValidationError("no SVR rate for state " + std::string(to_string(s)));
}

void SvrTable::validate() const {
  for (double p : {f0_f3, f4_g3, f4_other, dc}) require(is_probability(p), "SVR probability out of [0,1]");
}

bool eligible_for_treatment(const Agent& a) {
  if (!a.alive || !a.viremic() || a.treat_failed || a.treated) return false;
  const HcvState s = a.infection->state;
  return (s >= HcvState::F0 && s <= HcvState::F4) || s == HcvState::DC;
}

TreatmentResult apply_treatment(Population& pop, AgentId id, const SvrTable& svr, Day today, Rng& rng) {
  Agent& a = pop[id];
  if (!eligible_for_treatment(a)) throw ValidationError("agent is not eligible for treatment");
  a.treated = true;
  if (a.idu) {
    a.idu = false;
    a.idu_until_day = today;
    ++a.idu_spell;
    pop.remove_idu(id);
  }
  InfectionRecord& r = *a.infection;
  if (!rng.bernoulli(svr.probability(r.state, r.genotype))) {
    a.treat_failed = true;
    return TreatmentResult::Failed;
  }
  if (is_fibrosis(r.state)) {
    a.infection.reset();
    a.clean_state = HcvState::CuredNonCirrhotic;
    ++a.episode;
  } else {
    r.state = HcvState::SVR2;
    r.state_entry_day = today;
    r.sojourn_years_in_state = 0;
    r.viremic = false;
  }
  return TreatmentResult::Cured;
}

Selection select_for_treatment(const Population& pop, std::span<const AgentId> candidates, double demand, Rng& rng) {
  Selection s;
  std::vector<AgentId> pool;
  for (AgentId id : candidates) {
    if (eligible_for_treatment(pop[id])) pool.push_back(id);
  }
  const std::int64_t want = rng.stochastic_round(demand);
  const auto take = static_cast<std::size_t>(std::min<std::int64_t>(want, static_cast<std::int64_t>(pool.size())));
  s.shortfall = want - static_cast<std::int64_t>(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(pool.size()) - 1));
    std::swap(pool[i], pool[j]);
    s.chosen.push_back(pool[i]);
  }
  return s;
}

std::optional<double> effective_uptake(std::int64_t treated, std::int64_t denominator) {
  if (denominator <= 0) return std::nullopt;
  return static_cast<double>(treated) / static_cast<double>(denominator);
}

}  // namespace hcvsim
