#include "hcvsim/calibration.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace hcvsim {

void CalibrationTargets::validate() const {
  for (double v : {antibody, rna, idu, medical_share, social_share}) require(v > 0.0, "calibration targets must be positive");
}

DeviationScore deviation_score(double antibody, double rna, double idu, const CalibrationTargets& t) {
  t.validate();
  DeviationScore s;
  s.d = {std::abs(antibody - t.antibody) / t.antibody, std::abs(rna - t.rna) / t.rna, std::abs(idu - t.idu) / t.idu};
  s.total = s.d[0] + s.d[1] + s.d[2];
  s.pass = s.total < t.threshold;
  return s;
}

void apply_candidate(SimConfig& config, const Candidate& c) {
  require(c.q_shar >= 0.0 && c.q_shar <= kMaxNeedleSharing, "q_shar outside [0, 0.504]");
  const ProcedureRates rates{config.medical.m_i, config.medical.m_b, config.medical.m_s, config.medical.m_d};
  config.medical.q_t_med = c.q_t_med;
  config.medical.r_b = derive_r_b(c.q_t_med, rates, config.medical.blood_share);
  const auto [e, ue] = derive_idu_conversion(c.q_c, config.social.q_ue_I, config.social.q_ue_g);
  config.social.q_c_e = e;
  config.social.q_c_ue = ue;
  config.social.q_shar = c.q_shar;
}

void SearchSpace::validate() const {
  require(!q_t_med.empty() && !q_c.empty() && !q_shar.empty(), "empty calibration search space");
  for (double v : q_shar) require(v >= 0.0 && v <= kMaxNeedleSharing, "q_shar bound exceeds 0.504");
  for (double v : q_t_med) require(is_probability(v), "q_t_med out of [0,1]");
  for (double v : q_c) require(is_probability(v), "q_c out of [0,1]");
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

std::string key_of(const Candidate& c) {
  std::ostringstream out;
  out << std::setprecision(10) << c.q_t_med << '|' << c.q_c << '|' << c.q_shar;
  return out.str();
}

constexpr const char* kLogHeader =
    "q_t_med,q_c,q_shar,r_b,q_c_e,q_c_ue,antibody,rna,idu,antibody_sd,rna_sd,idu_sd,medical_share,social_share,"
    "d_antibody,d_rna,d_idu,total,pass";

void write_row(std::ostream& out, const Evaluation& e) {
  out << std::setprecision(12) << e.candidate.q_t_med << ',' << e.candidate.q_c << ',' << e.candidate.q_shar << ','
      << e.r_b << ',' << e.q_c_e << ',' << e.q_c_ue << ',' << e.antibody << ',' << e.rna << ',' << e.idu << ','
      << e.antibody_sd << ',' << e.rna_sd << ',' << e.idu_sd << ',' << e.medical_share << ',' << e.social_share
      << ',' << e.score.d[0] << ',' << e.score.d[1] << ',' << e.score.d[2] << ',' << e.score.total << ','
      << (e.score.pass ? 1 : 0) << '\n';
}

std::vector<Evaluation> read_log(const std::filesystem::path& path) {
  std::vector<Evaluation> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 19) throw ValidationError("malformed calibration log row in " + path.string());
    Evaluation e;
    e.candidate = {v[0], v[1], v[2]};
    e.r_b = v[3];
    e.q_c_e = v[4];
    e.q_c_ue = v[5];
    e.antibody = v[6];
    e.rna = v[7];
    e.idu = v[8];
    e.antibody_sd = v[9];
    e.rna_sd = v[10];
    e.idu_sd = v[11];
    e.medical_share = v[12];
    e.social_share = v[13];
    e.score.d = {v[14], v[15], v[16]};
    e.score.total = v[17];
    e.score.pass = v[18] != 0.0;
    out.push_back(e);
  }
  return out;
}

}  // namespace

Evaluation evaluate_candidate(const SimConfig& config, const SharedInputs& inputs, const Candidate& c,
                              int replications, int threads, std::vector<CalibrationRun>* runs_out) {
  require(replications >= 1, "need at least one replication");
  SimConfig cfg = config;
  apply_candidate(cfg, c);
  cfg.validate();
  std::vector<CalibrationRun> runs(static_cast<std::size_t>(replications));
  const int workers = std::max(1, std::min(threads > 0 ? threads : default_thread_count(), replications));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int r = next++; r < replications; r = next++) {
      runs[static_cast<std::size_t>(r)] =
          run_calibration_period(cfg, inputs, replication_seed(cfg.rng_seed, static_cast<std::uint64_t>(r)));
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::vector<double> ab, rna, idu, med, soc;
  for (const auto& r : runs) {
    ab.push_back(r.prevalence.antibody);
    rna.push_back(r.prevalence.rna);
    idu.push_back(r.prevalence.idu);
    med.push_back(r.medical_share);
    soc.push_back(r.social_share);
  }
  Evaluation e;
  e.candidate = c;
  std::tie(e.antibody, e.antibody_sd) = mean_sd(ab);
  std::tie(e.rna, e.rna_sd) = mean_sd(rna);
  std::tie(e.idu, e.idu_sd) = mean_sd(idu);
  e.medical_share = mean_sd(med).first;
  e.social_share = mean_sd(soc).first;
  e.score = deviation_score(e.antibody, e.rna, e.idu);
  e.r_b = cfg.medical.r_b;
  e.q_c_e = cfg.social.q_c_e;
  e.q_c_ue = cfg.social.q_c_ue;
  if (runs_out) *runs_out = std::move(runs);
  return e;
}

CalibrationResult calibrate(const SimConfig& config, const SharedInputs& inputs, const SearchSpace& space,
                            int replications, const CalibrationTargets& targets,
                            const std::optional<std::filesystem::path>& log_path, int threads) {
  space.validate();
  targets.validate();
  CalibrationResult result;
  std::vector<Evaluation> previous;
  std::ofstream log;
  if (log_path) {
    previous = read_log(*log_path);
    const bool fresh = !std::filesystem::exists(*log_path) || std::filesystem::file_size(*log_path) == 0;
    log.open(*log_path, std::ios::app);
    if (!log) throw ValidationError("cannot write " + log_path->string());
    if (fresh) log << kLogHeader << '\n';
  }

  bool have_best = false;
  auto evaluate = [&](const Candidate& c) -> const Evaluation& {
    const std::string key = key_of(c);
    for (const auto& e : result.log) {
      if (key_of(e.candidate) == key) return e;
    }
    Evaluation e;
    auto it = std::find_if(previous.begin(), previous.end(), [&](const Evaluation& p) { return key_of(p.candidate) == key; });
    if (it != previous.end()) {
      e = *it;
      e.score = deviation_score(e.antibody, e.rna, e.idu, targets);
    } else {
      e = evaluate_candidate(config, inputs, c, replications, threads);
      e.score = deviation_score(e.antibody, e.rna, e.idu, targets);
      if (log.is_open()) {
        write_row(log, e);
        log.flush();
      }
    }
    result.log.push_back(e);
    if (!have_best || e.score.total < result.best.score.total) {
      result.best = e;
      have_best = true;
    }
    return result.log.back();
  };

  for (double t : space.q_t_med) {
    for (double q : space.q_c) {
      for (double s : space.q_shar) {
        const Evaluation e = evaluate({t, q, s});
        if (e.score.pass) {
          result.pass = true;
          result.best = e;
          return result;
        }
      }
    }
  }

  auto step_of = [](const std::vector<double>& grid, double fallback) {
    if (grid.size() < 2) return fallback;
    return (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  };
  std::array<double, 3> step = {step_of(space.q_t_med, 0.1 * space.q_t_med.front()),
                                step_of(space.q_c, 0.1 * space.q_c.front()),
                                step_of(space.q_shar, 0.05)};
  for (int round = 0; round < space.refinement_rounds; ++round) {
    for (auto& s : step) s *= 0.5;
    for (int axis = 0; axis < 3; ++axis) {
      for (double dir : {-1.0, 1.0}) {
        Candidate c = result.best.candidate;
        double& v = axis == 0 ? c.q_t_med : axis == 1 ? c.q_c : c.q_shar;
        v += dir * step[static_cast<std::size_t>(axis)];
        if (v < 0.0) continue;
        if (axis == 2 && v > kMaxNeedleSharing) v = kMaxNeedleSharing;
        const Evaluation e = evaluate(c);
        if (e.score.pass) {
          result.pass = true;
          result.best = e;
          return result;
        }
      }
    }
  }
  return result;
}

TTestResult one_sample_t_test(std::span<const double> values, double mu0, double alpha) {
  require(values.size() >= 2, "t-test needs at least two values");
  TTestResult r;
  const auto [m, sd] = mean_sd(std::vector<double>(values.begin(), values.end()));
  r.mean = m;
  r.sd = sd;
  const double n = static_cast<double>(values.size());
  if (sd == 0.0) {
    r.t = m == mu0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m - mu0);
    r.p_value = m == mu0 ? 1.0 : 0.0;
  } else {
    r.t = (m - mu0) / (sd / std::sqrt(n));
    boost::math::students_t dist(n - 1.0);
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  }
  r.reject = r.p_value < alpha;
  return r;
}

AttributionCheck validate_attribution(std::span<const CalibrationRun> runs, const CalibrationTargets& t,
                                      double alpha) {
  std::vector<double> med, soc;
  for (const auto& r : runs) {
    med.push_back(r.medical_share);
    soc.push_back(r.social_share);
  }
  return {one_sample_t_test(med, t.medical_share, alpha), one_sample_t_test(soc, t.social_share, alpha)};
}

}  // namespace hcvsim
