#include "hcvsim/outcomes.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace hcvsim {

CostTable CostTable::defaults() {
  using enum HcvState;
  CostTable t;
  for (HcvState s : {F0, F1, F2, F3}) {
    t.one_time[static_cast<int>(s)] = 3900;
    t.recurring[static_cast<int>(s)] = 11000;
  }
  t.one_time[static_cast<int>(F4)] = 2900;
  t.recurring[static_cast<int>(F4)] = 21700;
  t.one_time[static_cast<int>(DC)] = 2600;
  t.recurring[static_cast<int>(DC)] = 23600;
  t.one_time[static_cast<int>(HCC)] = 300100;
  t.recurring[static_cast<int>(HCC)] = 50600;
  t.one_time[static_cast<int>(LT)] = 2500000;
  t.recurring[static_cast<int>(LT)] = 24000;
  return t;
}

void CostTable::validate() const {
  for (int i = 0; i < kHcvStateCount; ++i) {
    require(one_time[i] >= 0 && recurring[i] >= 0, "costs must be nonnegative");
  }
  require(daa_course >= 0, "DAA course cost must be nonnegative");
}

std::string CostTable::fingerprint() const {
  std::ostringstream out;
  out << std::setprecision(17) << "costs:";
  for (int i = 0; i < kHcvStateCount; ++i) out << one_time[i] << '/' << recurring[i] << ',';
  out << daa_course;
  return out.str();
}

UtilityTable UtilityTable::defaults() {
  using enum HcvState;
  UtilityTable t;
  t.disease.fill(1.0);
  for (HcvState s : {F0, F1, F2, F3}) t.disease[static_cast<int>(s)] = 0.63;
  t.disease[static_cast<int>(F4)] = 0.56;
  t.disease[static_cast<int>(DC)] = 0.44;
  t.disease[static_cast<int>(HCC)] = 0.44;
  t.disease[static_cast<int>(LT)] = 0.84;
  t.disease[static_cast<int>(SVR2)] = 0.93;
  t.age = {0.921, 0.906, 0.875, 0.849, 0.826, 0.786, 0.753};
  return t;
}

void UtilityTable::validate() const {
  for (double w : disease) require(w > 0.0 && w <= 1.0, "disease utility out of (0,1]");
  for (double w : age) require(w > 0.0 && w <= 1.0, "age utility out of (0,1]");
}

std::string UtilityTable::fingerprint() const {
  std::ostringstream out;
  out << std::setprecision(17) << "utilities:";
  for (double w : disease) out << w << ',';
  for (double w : age) out << w << ',';
  return out.str();
}

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("not a number: '" + s + "'");
  }
}

}  // namespace

CostTable load_cost_table(const std::filesystem::path& path) {
  CostTable t;
  for (const auto& row : read_csv_rows(path)) {
    require(row.size() >= 2, "cost table rows need state,one_time[,recurring]");
    if (row[0] == "DAA") {
      t.daa_course = to_double(row[1]);
      continue;
    }
    const int s = static_cast<int>(parse_hcv_state(row[0]));
    t.one_time[s] = to_double(row[1]);
    if (row.size() > 2) t.recurring[s] = to_double(row[2]);
  }
  t.validate();
  return t;
}

void save_cost_table(const CostTable& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "state,one_time,recurring\n" << std::setprecision(17);
  for (int i = 0; i < kHcvStateCount; ++i) {
    out << to_string(static_cast<HcvState>(i)) << ',' << t.one_time[i] << ',' << t.recurring[i] << '\n';
  }
  out << "DAA," << t.daa_course << ",0\n";
}

UtilityTable load_utility_table(const std::filesystem::path& path) {
  UtilityTable t = UtilityTable::defaults();
  for (const auto& row : read_csv_rows(path)) {
    require(row.size() == 3, "utility table rows need kind,key,weight");
    if (row[0] == "state") {
      t.disease[static_cast<int>(parse_hcv_state(row[1]))] = to_double(row[2]);
    } else if (row[0] == "age") {
      const int band = static_cast<int>(to_double(row[1]));
      require(band >= 0 && band < kAgeGroupCount, "age band index out of range");
      t.age[static_cast<std::size_t>(band)] = to_double(row[2]);
    } else {
      throw ValidationError("unknown utility kind '" + row[0] + "'");
    }
  }
  t.validate();
  return t;
}

void save_utility_table(const UtilityTable& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "kind,key,weight\n" << std::setprecision(17);
  for (int i = 0; i < kHcvStateCount; ++i) out << "state," << to_string(static_cast<HcvState>(i)) << ',' << t.disease[i] << '\n';
  for (int i = 0; i < kAgeGroupCount; ++i) out << "age," << i << ',' << t.age[static_cast<std::size_t>(i)] << '\n';
}

int cost_group(HcvState s) {
  switch (s) {
    case HcvState::F0:
    case HcvState::F1:
    case HcvState::F2:
    case HcvState::F3: return 0;
    case HcvState::F4: return 1;
    case HcvState::DC: return 2;
    case HcvState::HCC: return 3;
    case HcvState::LT: return 4;
    default: return -1;
  }
}

double entry_cost(const CostTable& t, HcvState from, HcvState to) {
  const int g = cost_group(to);
  if (g < 0 || g == cost_group(from)) return 0.0;
  return t.one_time[static_cast<int>(to)];
}

double qaly_weight(const UtilityTable& t, AgeGroup g, HcvState s) {
  require(g.index >= 0 && g.index < kAgeGroupCount, "age group out of range");
  return t.age[static_cast<std::size_t>(g.index)] * t.disease[static_cast<int>(s)];
}

double discount(double amount, double t_years, double rate) {
  require(t_years >= 0.0, "negative discounting time");
  require(rate >= 0.0, "negative discount rate");
  return amount / std::pow(1.0 + rate, t_years);
}

Discounter::Discounter(double annual_rate) : rate_(annual_rate) {
  require(annual_rate >= 0.0, "negative discount rate");
  log_q_ = -std::log1p(annual_rate) / kDaysPerYear;
}

double Discounter::factor(Day d) const { return std::exp(log_q_ * static_cast<double>(d)); }

double Discounter::segment(Day a, Day b) const {
  if (b <= a) return 0.0;
  if (rate_ == 0.0) return static_cast<double>(b - a);
  return factor(a) * std::expm1(log_q_ * static_cast<double>(b - a)) / std::expm1(log_q_);
}

std::string OutcomeModel::fingerprint() const {
  std::ostringstream out;
  out << std::setprecision(17) << costs.fingerprint() << '|' << utilities.fingerprint() << '|'
      << "discount:" << discounter.rate() << '|' << mortality.fingerprint() << '|'
      << (chain ? hcvsim::fingerprint(chain->model()) : std::string("no-chain"));
  return out.str();
}

namespace {

/// Exclusive upper age (days) of the band containing `age_days`.
Day band_end(Day age_days) {
  const int band = age_group(age_years(age_days)).index;
  if (band == kAgeGroupCount - 1) return std::numeric_limits<Day>::max() / 4;
  return static_cast<Day>(30 + 10 * band) * kDaysPerYear;
}

}  // namespace

Outcome accrue_state_time(const OutcomeModel& m, Day birth_day, HcvState s, Day from, Day to, Day reference) {
  Outcome out = Outcome::Zero();
  if (to <= from) return out;
  const double per_day_cost = m.costs.recurring[static_cast<int>(s)] / kDaysPerYear;
  const double state_weight = m.utilities.disease[static_cast<int>(s)];
  Day d = from;
  while (d < to) {
    const Day age = d - birth_day;
    const int band = age_group(age_years(age)).index;
    const Day seg_end = std::min(to, birth_day + band_end(age));
    const double days = static_cast<double>(seg_end - d);
    const double w = m.utilities.age[static_cast<std::size_t>(band)] * state_weight;
    const double disc_days = m.discounter.segment(d - reference, seg_end - reference);
    out(kLifeYears) += days / kDaysPerYear;
    out(kQalys) += w * days / kDaysPerYear;
    out(kCost) += per_day_cost * days;
    out(kLifeYearsDisc) += disc_days / kDaysPerYear;
    out(kQalysDisc) += w * disc_days / kDaysPerYear;
    out(kCostDisc) += per_day_cost * disc_days;
    d = seg_end;
  }
  return out;
}

Outcome one_time_cost(const OutcomeModel& m, double amount, Day day, Day reference) {
  Outcome out = Outcome::Zero();
  out(kCost) = amount;
  out(kCostDisc) = amount * m.discounter.factor(day - reference);
  return out;
}

Outcome simulate_lifetime(const OutcomeModel& m, const LifeStart& start, Rng& rng) {
  require(m.chain != nullptr, "outcome model has no transition model");
  const ChainSampler& chain = *m.chain;
  const Day death_age = m.mortality.sample_death_age(start.age_days, rng);
  const Day end = death_age - start.age_days;
  const Day birth = -start.age_days;
  HcvState s = start.state == HcvState::CuredNonCirrhotic ? HcvState::Susceptible : start.state;
  Outcome out = Outcome::Zero();
  if (start.charge_entry_cost) out += one_time_cost(m, entry_cost(m.costs, HcvState::Susceptible, s), 0, 0);
  if (s == HcvState::Susceptible) return out + accrue_state_time(m, birth, s, 0, end, 0);
  if (s == HcvState::LRD) return out;

  InfectionRecord rec;
  Day t = 0;
  Day step_at = 0;
  if (s == HcvState::Acute) {
    const Day res = std::max<Day>(0, kAcuteDays - start.acute_elapsed);
    if (end <= res) return out + accrue_state_time(m, birth, s, 0, end, 0);
    out += accrue_state_time(m, birth, s, 0, res, 0);
    if (rng.uniform() < chain.acute_clearance()) {
      return out + accrue_state_time(m, birth, HcvState::Susceptible, res, end, 0);
    }
    out += one_time_cost(m, entry_cost(m.costs, HcvState::Acute, HcvState::F0), res, 0);
    rec.state = HcvState::F0;
    t = res;
    step_at = res + kDaysPerYear;
  } else {
    rec.state = s;
    rec.sojourn_years_in_state = start.sojourn_years;
    step_at = std::max<Day>(1, start.days_to_step);
  }
  while (true) {
    if (end <= step_at) return out + accrue_state_time(m, birth, rec.state, t, end, 0);
    out += accrue_state_time(m, birth, rec.state, t, step_at, 0);
    t = step_at;
    const HcvState prev = rec.state;
    progress_one_year(rec, t, chain, rng);
    if (rec.state == HcvState::LRD) return out;
    if (rec.state != prev) out += one_time_cost(m, entry_cost(m.costs, prev, rec.state), t, 0);
    step_at += kDaysPerYear;
  }
}

Outcome ia_continue(const OutcomeModel& m, const Agent& agent, Day from_day, Day reference, Rng& rng) {
  Outcome out = Outcome::Zero();
  if (!agent.alive) return out;
  require(m.chain != nullptr, "outcome model has no transition model");
  const ChainSampler& chain = *m.chain;
  std::optional<InfectionRecord> rec = agent.infection;
  HcvState clean = agent.clean_state;
  const double q = m.discounter.factor(1);
  double disc = m.discounter.factor(from_day - reference);
  for (Day d = from_day;; ++d, disc *= q) {
    const Day age = d - agent.birth_day;
    if (age >= kMaxAgeDays) break;
    if (rng.bernoulli(m.mortality.daily(age_years(age)))) break;
    if (rec) {
      if (rec->state == HcvState::Acute) {
        if (d >= rec->infection_day + kAcuteDays) {
          if (acute_resolution(*rec, d, chain, rng) == AcuteOutcome::Cleared) {
            rec.reset();
            clean = HcvState::Susceptible;
          } else {
            rec->state = HcvState::F0;
            rec->state_entry_day = d;
            rec->chain_origin_day = d;
            rec->sojourn_years_in_state = 0;
            const double c = entry_cost(m.costs, HcvState::Acute, HcvState::F0);
            out(kCost) += c;
            out(kCostDisc) += c * disc;
          }
        }
      } else if (is_chain_state(rec->state) && d > rec->chain_origin_day &&
                 (d - rec->chain_origin_day) % kDaysPerYear == 0) {
        const HcvState prev = rec->state;
        progress_one_year(*rec, d, chain, rng);
        if (rec->state == HcvState::LRD) break;
        const double c = entry_cost(m.costs, prev, rec->state);
        out(kCost) += c;
        out(kCostDisc) += c * disc;
      }
    }
    const HcvState s = rec ? rec->state : clean;
    const double w = qaly_weight(m.utilities, age_group(age_years(age)), s);
    const double cost = m.costs.recurring[static_cast<int>(s)] / kDaysPerYear;
    out(kLifeYears) += 1.0 / kDaysPerYear;
    out(kQalys) += w / kDaysPerYear;
    out(kCost) += cost;
    out(kLifeYearsDisc) += disc / kDaysPerYear;
    out(kQalysDisc) += w * disc / kDaysPerYear;
    out(kCostDisc) += cost * disc;
  }
  return out;
}

int repository_state_index(HcvState s) {
  if (s == HcvState::CuredNonCirrhotic) return 0;
  for (int i = 0; i < kRepositoryStateCount; ++i) {
    if (kRepositoryStates[static_cast<std::size_t>(i)] == s) return i;
  }
  return -1;
}

std::uint64_t repository_hash(const OutcomeModel& m, const RepositoryParams& p) {
  std::ostringstream out;
  out << std::setprecision(17) << "repo-v1|" << m.fingerprint() << "|cohort:" << p.cohort_size
      << "|floor:" << p.per_cell_floor << "|growth:" << p.growth_rate << "|seed:" << p.seed;
  return fnv1a(out.str());
}

namespace {

int worker_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) fn(i);
  };
  const int n = std::min(threads, count);
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace

OutcomesRepository OutcomesRepository::build(const OutcomeModel& m, const RepositoryParams& p) {
  require(p.cohort_size >= 0, "negative repository cohort size");
  require(p.per_cell_floor >= 1, "per-cell floor must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();
  OutcomesRepository repo;
  repo.hash_ = repository_hash(m, p);

  const Eigen::VectorXd w = m.mortality.stable_age_weights(p.growth_rate);
  std::discrete_distribution<int> pick_year(w.data(), w.data() + w.size());
  Rng age_rng(stream_seed(p.seed, "repository-ages"));
  std::vector<std::vector<Day>> ages(kMaxAgeYears);
  for (std::int64_t i = 0; i < p.cohort_size; ++i) {
    const int year = pick_year(age_rng.engine());
    ages[static_cast<std::size_t>(year)].push_back(static_cast<Day>(year) * kDaysPerYear +
                                                   age_rng.uniform_int(0, kDaysPerYear - 1));
  }
  for (int year = 0; year < kMaxAgeYears; ++year) {
    auto& v = ages[static_cast<std::size_t>(year)];
    while (static_cast<int>(v.size()) < p.per_cell_floor) {
      v.push_back(static_cast<Day>(year) * kDaysPerYear + age_rng.uniform_int(0, kDaysPerYear - 1));
    }
  }

  const int cells = kMaxAgeYears * kRepositoryStateCount;
  repo.cells_.resize(static_cast<std::size_t>(cells));
  parallel_for(cells, worker_count(p.threads), [&](int c) {
    const int year = c / kRepositoryStateCount;
    const int state = c % kRepositoryStateCount;
    const auto& cell_ages = ages[static_cast<std::size_t>(year)];
    Rng rng(mix64(p.seed ^ mix64(static_cast<std::uint64_t>(c) + 1)));
    Samples samples(kOutcomeFields, static_cast<Eigen::Index>(cell_ages.size()));
    for (std::size_t i = 0; i < cell_ages.size(); ++i) {
      LifeStart start;
      start.age_days = cell_ages[i];
      start.state = kRepositoryStates[static_cast<std::size_t>(state)];
      samples.col(static_cast<Eigen::Index>(i)) = simulate_lifetime(m, start, rng).cast<float>();
    }
    repo.cells_[static_cast<std::size_t>(c)] = std::move(samples);
  });
  for (int c = 0; c < cells; ++c) {
    if (repo.cells_[static_cast<std::size_t>(c)].cols() == 0) {
      throw AnalysisError("repository cell (" + std::to_string(c / kRepositoryStateCount) + ", " +
                          std::string(to_string(kRepositoryStates[static_cast<std::size_t>(c % kRepositoryStateCount)])) +
                          ") is empty");
    }
  }
  repo.build_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return repo;
}

namespace {
constexpr char kRepoMagic[8] = {'H', 'C', 'V', 'R', 'E', 'P', 'O', '1'};
}

void OutcomesRepository::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(kRepoMagic, sizeof kRepoMagic);
  const std::int32_t years = kMaxAgeYears;
  const std::int32_t states = kRepositoryStateCount;
  out.write(reinterpret_cast<const char*>(&hash_), sizeof hash_);
  out.write(reinterpret_cast<const char*>(&years), sizeof years);
  out.write(reinterpret_cast<const char*>(&states), sizeof states);
  out.write(reinterpret_cast<const char*>(&build_seconds_), sizeof build_seconds_);
  for (const auto& c : cells_) {
    const std::int64_t n = c.cols();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(sizeof(float) * c.size()));
  }
  if (!out) throw ValidationError("failed writing " + path.string());
}

OutcomesRepository OutcomesRepository::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open repository " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kRepoMagic)) throw ValidationError("not a repository file: " + path.string());
  OutcomesRepository repo;
  std::int32_t years = 0;
  std::int32_t states = 0;
  in.read(reinterpret_cast<char*>(&repo.hash_), sizeof repo.hash_);
  in.read(reinterpret_cast<char*>(&years), sizeof years);
  in.read(reinterpret_cast<char*>(&states), sizeof states);
  in.read(reinterpret_cast<char*>(&repo.build_seconds_), sizeof repo.build_seconds_);
  if (years != kMaxAgeYears || states != kRepositoryStateCount) throw ValidationError("repository layout mismatch");
  repo.cells_.resize(static_cast<std::size_t>(years) * static_cast<std::size_t>(states));
  for (auto& c : repo.cells_) {
    std::int64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || n <= 0) throw ValidationError("truncated repository " + path.string());
    c.resize(kOutcomeFields, static_cast<Eigen::Index>(n));
    in.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(sizeof(float) * c.size()));
  }
  if (!in) throw ValidationError("truncated repository " + path.string());
  return repo;
}

const OutcomesRepository::Samples& OutcomesRepository::cell(int age_year, int state_index) const {
  require(age_year >= 0 && age_year < kMaxAgeYears, "repository age out of range");
  require(state_index >= 0 && state_index < kRepositoryStateCount, "repository state out of range");
  return cells_[static_cast<std::size_t>(age_year * kRepositoryStateCount + state_index)];
}

Outcome OutcomesRepository::draw(int age_year, HcvState s, Rng& rng) const {
  const int idx = repository_state_index(s);
  if (idx < 0) throw AnalysisError("no repository cell for state " + std::string(to_string(s)));
  const Samples& c = cell(age_year, idx);
  if (c.cols() == 0) throw AnalysisError("empty repository cell");
  const auto j = rng.uniform_int(0, c.cols() - 1);
  return c.col(static_cast<Eigen::Index>(j)).cast<double>();
}

Outcome OutcomesRepository::cell_mean(int age_year, int state_index) const {
  return cell(age_year, state_index).cast<double>().rowwise().mean();
}

std::size_t OutcomesRepository::total_samples() const {
  std::size_t n = 0;
  for (const auto& c : cells_) n += static_cast<std::size_t>(c.cols());
  return n;
}

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::None: return "none";
    case Estimator::IA: return "IA";
    case Estimator::OA: return "OA";
  }
  return "?";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "none") return Estimator::None;
  if (name == "IA" || name == "ia") return Estimator::IA;
  if (name == "OA" || name == "oa") return Estimator::OA;
  throw ValidationError("unknown estimator '" + std::string(name) + "'");
}

OutcomeTracker::OutcomeTracker(std::shared_ptr<const OutcomeModel> model,
                               std::shared_ptr<const OutcomesRepository> repo, Estimator estimator, Day reference,
                               bool oa_age_plus_one)
    : model_(std::move(model)), repo_(std::move(repo)), estimator_(estimator), reference_(reference),
      plus_one_(oa_age_plus_one) {
  if (estimator_ != Estimator::None) require(model_ != nullptr, "outcome estimation needs an outcome model");
  if (estimator_ == Estimator::OA && !repo_) throw AnalysisError("OA estimator needs an outcomes repository");
}

OutcomeTracker::Entry& OutcomeTracker::entry(AgentId id) {
  const auto i = static_cast<std::size_t>(id);
  if (i >= entries_.size()) entries_.resize(std::max(i + 1, entries_.size() * 2));
  return entries_[i];
}

bool OutcomeTracker::in_scope(AgentId id) const {
  const auto i = static_cast<std::size_t>(id);
  return i < entries_.size() && entries_[i].in_scope;
}

bool OutcomeTracker::chronic(AgentId id) const {
  const auto i = static_cast<std::size_t>(id);
  return i < entries_.size() && entries_[i].chronic;
}

const Outcome& OutcomeTracker::accumulated(AgentId id) const {
  return entries_.at(static_cast<std::size_t>(id)).accumulated;
}

Outcome OutcomeTracker::allocate(const Agent& a, Day day, Rng& rng) const {
  int year = static_cast<int>((day - a.birth_day) / kDaysPerYear);
  if (plus_one_) ++year;
  year = std::clamp(year, 0, kMaxAgeYears - 1);
  Outcome sample = repo_->draw(year, a.state(), rng);
  const double f = model_->discounter.factor(day - reference_);
  sample.tail<3>() *= f;
  return sample;
}

void OutcomeTracker::enter(const Agent& a, Day day, Rng& rng) {
  Entry& e = entry(a.id);
  if (e.in_scope) return;
  e.in_scope = true;
  e.last_day = day;
  ++scope_count_;
  if (a.chronic()) mark_chronic(a);
  if (estimator_ == Estimator::OA) e.pending = allocate(a, day, rng);
}

void OutcomeTracker::accrue_to(const Agent& a, Day day) {
  if (estimator_ == Estimator::None || !in_scope(a.id)) return;
  Entry& e = entries_[static_cast<std::size_t>(a.id)];
  if (day <= e.last_day) return;
  e.accumulated += accrue_state_time(*model_, a.birth_day, a.state(), e.last_day, day, reference_);
  e.last_day = day;
}

void OutcomeTracker::charge(const Agent& a, double amount, Day day, bool outside_repository) {
  if (estimator_ == Estimator::None || amount == 0.0 || !in_scope(a.id)) return;
  Entry& e = entries_[static_cast<std::size_t>(a.id)];
  const Outcome c = one_time_cost(*model_, amount, day, reference_);
  e.accumulated += c;
  if (outside_repository && estimator_ == Estimator::OA) e.pending += c;
}

void OutcomeTracker::status_flip(const Agent& a, Day day, Rng& rng) {
  if (estimator_ != Estimator::OA || !in_scope(a.id)) return;
  Entry& e = entries_[static_cast<std::size_t>(a.id)];
  e.pending = e.accumulated + allocate(a, day, rng);
}

void OutcomeTracker::mark_chronic(const Agent& a) {
  if (!in_scope(a.id)) return;
  Entry& e = entries_[static_cast<std::size_t>(a.id)];
  if (e.chronic) return;
  e.chronic = true;
  ++chronic_count_;
}

Outcome OutcomeTracker::finalize(const Agent& a, Day end_day, Rng& rng) {
  if (!in_scope(a.id)) return Outcome::Zero();
  Entry& e = entries_[static_cast<std::size_t>(a.id)];
  switch (estimator_) {
    case Estimator::None: return Outcome::Zero();
    case Estimator::OA: return e.pending;
    case Estimator::IA:
      if (!a.alive) return e.accumulated;
      accrue_to(a, end_day);
      return e.accumulated + ia_continue(*model_, a, end_day, reference_, rng);
  }
  return Outcome::Zero();
}

double nmb(double q_n, double q_s, double c_n, double c_s, double k) { return k * (q_n - q_s) - (c_n - c_s); }

std::vector<double> incremental_nmb_curve(std::span<const double> uptakes, std::span<const double> qalys,
                                          std::span<const double> costs, double k) {
  require(uptakes.size() >= 2, "incremental NMB needs at least two grid points");
  require(qalys.size() == uptakes.size() && costs.size() == uptakes.size(), "grid and outcome lengths differ");
  for (std::size_t i = 1; i < uptakes.size(); ++i) {
    require(uptakes[i] != uptakes[i - 1], "duplicate uptake values in grid");
    require(uptakes[i] > uptakes[i - 1], "uptake grid must be ascending");
  }
  std::vector<double> out;
  for (std::size_t i = 1; i < uptakes.size(); ++i) out.push_back(nmb(qalys[i], qalys[i - 1], costs[i], costs[i - 1], k));
  return out;
}

std::optional<double> critical_uptake(std::span<const double> uptakes, std::span<const double> series,
                                      double threshold) {
  require(uptakes.size() == series.size(), "series must align with the uptake grid");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] < threshold) continue;
    if (!best || series[i] < series[*best]) best = i;
  }
  if (!best) return std::nullopt;
  return uptakes[*best];
}

LevelSummary summarize_levels(const Outcome& scope_total, std::size_t scope_count, const Outcome& patient_total,
                              std::size_t patient_count) {
  if (scope_count == 0) throw AnalysisError("no agents in analysis scope");
  LevelSummary s;
  s.population = scope_total / static_cast<double>(scope_count);
  if (patient_count > 0) s.patient = patient_total / static_cast<double>(patient_count);
  return s;
}

EstimatorRun run_synthetic_cohort(std::shared_ptr<const OutcomeModel> model,
                                  std::shared_ptr<const OutcomesRepository> repo, Estimator estimator,
                                  const SyntheticCohortSpec& spec, const SvrTable& svr) {
  require(spec.size > 0 && spec.horizon_years > 0, "bad synthetic cohort");
  require(estimator != Estimator::None, "synthetic cohort needs an estimator");
  const auto t0 = std::chrono::steady_clock::now();
  const ChainSampler& chain = *model->chain;
  const Day horizon = static_cast<Day>(spec.horizon_years) * kDaysPerYear;
  const Eigen::VectorXd w = model->mortality.stable_age_weights(spec.growth_rate);
  std::discrete_distribution<int> pick_year(w.data(), w.data() + w.size());
  Rng age_rng(stream_seed(spec.seed, "synthetic-ages"));
  Rng alloc_rng(stream_seed(spec.seed, "synthetic-allocation"));
  Rng tail_rng(stream_seed(spec.seed, "synthetic-continuation"));
  OutcomeTracker tracker(model, repo, estimator, 0);
  Population pop(horizon);
  Outcome total = Outcome::Zero();

  for (int i = 0; i < spec.size; ++i) {
    const Day age = static_cast<Day>(pick_year(age_rng.engine())) * kDaysPerYear + age_rng.uniform_int(0, kDaysPerYear - 1);
    Rng path(mix64(spec.seed ^ mix64(static_cast<std::uint64_t>(i) + 1)));
    const Day death_day = model->mortality.sample_death_age(age, path) - age;
    const AgentId id = pop.add(-age, death_day).id;
    if (path.uniform() < spec.infected_share) {
      Agent& a = pop[id];
      InfectionRecord r;
      r.state = HcvState::F0;
      r.genotype = assign_genotype(path);
      a.infection = r;
      a.ever_infected = true;
      a.ever_chronic = true;
    }
    tracker.enter(pop[id], 0, alloc_rng);

    bool dead = false;
    for (int y = 1; y <= spec.horizon_years && !dead; ++y) {
      const Day treat_day = static_cast<Day>(y) * kDaysPerYear - 1;
      const Day step_day = static_cast<Day>(y) * kDaysPerYear;
      if (death_day <= treat_day) break;
      if (eligible_for_treatment(pop[id]) && path.bernoulli(spec.annual_treat_probability)) {
        tracker.accrue_to(pop[id], treat_day);
        const bool cured = apply_treatment(pop, id, svr, treat_day, path) == TreatmentResult::Cured;
        tracker.charge(pop[id], model->costs.daa_course, treat_day, true);
        if (cured) tracker.status_flip(pop[id], treat_day, alloc_rng);
      }
      if (step_day >= horizon || death_day <= step_day) continue;
      Agent& a = pop[id];
      if (a.infection && is_chain_state(a.infection->state)) {
        tracker.accrue_to(a, step_day);
        const HcvState prev = a.infection->state;
        progress_one_year(*a.infection, step_day, chain, path);
        if (a.infection->state == HcvState::LRD) {
          pop.kill(id, step_day);
          dead = true;
        } else {
          tracker.charge(a, entry_cost(model->costs, prev, a.infection->state), step_day);
        }
      }
    }
    if (!dead && death_day < horizon) {
      tracker.accrue_to(pop[id], death_day);
      pop.kill(id, death_day);
    }
    total += tracker.finalize(pop[id], horizon, tail_rng);
  }
  EstimatorRun run;
  run.mean = total / static_cast<double>(spec.size);
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

}  // namespace hcvsim
